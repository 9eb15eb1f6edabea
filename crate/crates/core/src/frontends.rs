//! Other formalisms compiled into weighted programs: ProbLog facts, Markov logic, Boolean Bayes nets.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{tuples, Atom, Literal, Program, Rule, Term};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum FrontendError {
    #[error("probability {p} of {atom} must lie strictly between 0 and 1")]
    ProbabilityOutOfRange { p: f64, atom: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("node {node}: {message}")]
    Cpt { node: String, message: String },
}

/// Log-odds `ln(p/(1-p))`.
pub fn log_odds(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Each `p::atom` becomes the soft fact `ln(p/(1-p)) atom`, followed by the rules unchanged.
pub fn problog_to_lpmln(facts: &[(f64, Atom)], rules: &Program) -> Result<Program, FrontendError> {
    let mut out = Vec::new();
    for (p, atom) in facts {
        if !(*p > 0.0 && *p < 1.0) {
            return Err(FrontendError::ProbabilityOutOfRange { p: *p, atom: atom.to_string() });
        }
        out.push(Rule::soft(log_odds(*p), vec![atom.clone()], Vec::new()));
    }
    out.extend(rules.rules.iter().cloned());
    Ok(Program::new(out))
}

/// Appends a hard choice rule for every ground atom of each predicate not listed in `fixed`.
pub fn mln_embed(program: &Program, fixed: &BTreeSet<String>) -> Program {
    let universe: Vec<Term> = program.universe().into_iter().collect();
    let mut out = program.clone();
    for (predicate, arity) in program.signature() {
        if fixed.contains(&predicate) {
            continue;
        }
        for args in tuples(&universe, arity) {
            out.push(Rule { choice: true, ..Rule::hard(vec![Atom::new(predicate.clone(), args)], Vec::new()) });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct BayesNode {
    pub name: String,
    /// Short name used inside `pf` atoms.
    pub alias: String,
    pub parents: Vec<String>,
}

/// Boolean Bayesian network; CPT keys are (node, parent values) with `true` for t.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BayesNet {
    pub nodes: Vec<BayesNode>,
    pub cpt: BTreeMap<(String, Vec<bool>), f64>,
}

fn syntax(line: usize, message: impl Into<String>) -> FrontendError {
    FrontendError::Syntax { line, message: message.into() }
}

fn is_name(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_lowercase()) && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parent-value rows in `t`-first order: `[t,t], [t,f], [f,t], [f,f]`.
pub fn parent_rows(n: usize) -> Vec<Vec<bool>> {
    (0..1usize << n).map(|k| (0..n).map(|j| k >> (n - 1 - j) & 1 == 0).collect()).collect()
}

/// Parses the line format:
///
/// ```text
/// % comment
/// node alarm as a : tampering fire
/// t t 0.5
/// t f 0.85
/// f t 0.99
/// f f 0.0001
/// ```
///
/// A root node has a single row holding only the probability. Parents must be declared earlier.
pub fn parse_bayes(text: &str) -> Result<BayesNet, FrontendError> {
    let mut net = BayesNet::default();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('%').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        if words[0] == "node" {
            let (decl, parents) = match content["node".len()..].split_once(':') {
                Some((d, p)) => (d, p.split_whitespace().map(str::to_string).collect()),
                None => (&content["node".len()..], Vec::new()),
            };
            let decl: Vec<&str> = decl.split_whitespace().collect();
            let (name, alias) = match decl[..] {
                [name] => (name, name),
                [name, "as", alias] => (name, alias),
                _ => return Err(syntax(line, "expected `node <name> [as <alias>] [: <parents>]`")),
            };
            for n in [name, alias].iter().chain(parents.iter().map(String::as_str).collect::<Vec<_>>().iter()) {
                if !is_name(n) {
                    return Err(syntax(line, format!("`{n}` is not a valid name")));
                }
            }
            if net.nodes.iter().any(|n| n.name == name) {
                return Err(syntax(line, format!("node {name} declared twice")));
            }
            net.nodes.push(BayesNode { name: name.to_string(), alias: alias.to_string(), parents });
            continue;
        }
        let node = net.nodes.last().ok_or_else(|| syntax(line, "CPT row before any node"))?;
        let (values, p) = words.split_at(words.len() - 1);
        let p: f64 = p[0].parse().map_err(|_| syntax(line, format!("`{}` is not a probability", p[0])))?;
        let values = values
            .iter()
            .map(|v| match *v {
                "t" => Ok(true),
                "f" => Ok(false),
                other => Err(syntax(line, format!("expected t or f, found `{other}`"))),
            })
            .collect::<Result<Vec<bool>, _>>()?;
        if values.len() != node.parents.len() {
            return Err(syntax(line, format!("expected {} parent values", node.parents.len())));
        }
        if net.cpt.insert((node.name.clone(), values), p).is_some() {
            return Err(syntax(line, "duplicate CPT row"));
        }
    }
    net.validate()?;
    Ok(net)
}

impl BayesNet {
    pub fn node(&self, name: &str) -> Option<&BayesNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    /// Parents precede children, aliases are distinct, CPTs are total with entries in [0,1].
    pub fn validate(&self) -> Result<(), FrontendError> {
        let err = |node: &str, message: String| FrontendError::Cpt { node: node.to_string(), message };
        let mut aliases = BTreeSet::new();
        for (k, n) in self.nodes.iter().enumerate() {
            if !aliases.insert(&n.alias) {
                return Err(err(&n.name, format!("alias {} is already used", n.alias)));
            }
            for p in &n.parents {
                if !self.nodes[..k].iter().any(|m| &m.name == p) {
                    return Err(err(&n.name, format!("parent {p} must be declared before its child")));
                }
            }
            for row in parent_rows(n.parents.len()) {
                match self.cpt.get(&(n.name.clone(), row.clone())) {
                    None => return Err(err(&n.name, format!("missing CPT row {}", row_text(&row)))),
                    Some(p) if !(0.0..=1.0).contains(p) => {
                        return Err(err(&n.name, format!("probability {p} is outside [0,1]")))
                    }
                    Some(_) => {}
                }
            }
        }
        if let Some(((node, _), _)) = self.cpt.iter().find(|((node, _), _)| self.node(node).is_none()) {
            return Err(err(node, "CPT for an undeclared node".to_string()));
        }
        Ok(())
    }

    /// The `pf` atom of a CPT entry, e.g. `pf(a,t1f0)`.
    pub fn pf_atom(&self, node: &BayesNode, row: &[bool]) -> Atom {
        let mut args = vec![Term::sym(&node.alias)];
        if !row.is_empty() {
            let token: String = node
                .parents
                .iter()
                .zip(row)
                .map(|(p, v)| format!("{}{}", self.node(p).expect("validated").alias, u8::from(*v)))
                .collect();
            args.push(Term::sym(token));
        }
        Atom::new("pf", args)
    }
}

fn row_text(row: &[bool]) -> String {
    row.iter().map(|v| if *v { "t" } else { "f" }).collect::<Vec<_>>().join(" ")
}

/// Probabilistic facts for every CPT entry, then one hard edge rule per entry.
pub fn bayes_to_lpmln(net: &BayesNet) -> Result<Program, FrontendError> {
    net.validate()?;
    let mut facts = Vec::new();
    let mut edges = Vec::new();
    for n in &net.nodes {
        for row in parent_rows(n.parents.len()) {
            let p = net.cpt[&(n.name.clone(), row.clone())];
            let pf = net.pf_atom(n, &row);
            facts.push(if p == 1.0 {
                Rule::hard(vec![pf.clone()], Vec::new())
            } else if p == 0.0 {
                Rule::hard(Vec::new(), vec![Literal::pos(pf.clone())])
            } else {
                Rule::soft(log_odds(p), vec![pf.clone()], Vec::new())
            });
            let mut body: Vec<Literal> = n
                .parents
                .iter()
                .zip(&row)
                .map(|(parent, v)| {
                    let a = Atom::prop(parent.clone());
                    if *v { Literal::pos(a) } else { Literal::not(a) }
                })
                .collect();
            body.push(Literal::pos(pf));
            edges.push(Rule::hard(vec![Atom::prop(n.name.clone())], body));
        }
    }
    facts.extend(edges);
    Ok(Program::new(facts))
}
