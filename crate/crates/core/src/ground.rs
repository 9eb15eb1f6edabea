//! Naive instantiation of rules over the program's universe.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::model::{desugar_choice, Atom, Interpretation, Negation, Program, Rule, Term, Weight};

pub const DEFAULT_MAX_GROUND_RULES: usize = 1 << 22;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GroundError {
    #[error("rule {index} is unsafe: variable {variable} does not occur in a positive body literal")]
    Unsafe { index: usize, variable: String },
    #[error("rule {index} has variables but the universe is empty")]
    EmptyUniverse { index: usize },
    #[error("grounding would produce more than {cap} rules")]
    TooLarge { cap: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroundLiteral {
    pub atom: usize,
    pub negation: Negation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundRule {
    /// Index of the source rule.
    pub origin: usize,
    pub weight: Weight,
    pub head: Vec<usize>,
    pub body: Vec<GroundLiteral>,
    /// Constants substituted for the source rule's variables, in first-occurrence order.
    pub tuple: Vec<Term>,
}

impl GroundRule {
    pub fn is_hard(&self) -> bool {
        self.weight.is_hard()
    }
}

/// Ground rules over an interned atom table. Atom ids follow first appearance.
#[derive(Clone, Debug, Default)]
pub struct GroundProgram {
    atoms: Vec<Atom>,
    ids: HashMap<Atom, usize>,
    rules: Vec<GroundRule>,
    universe: BTreeSet<Term>,
}

impl GroundProgram {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, id: usize) -> &Atom {
        &self.atoms[id]
    }

    pub fn id_of(&self, atom: &Atom) -> Option<usize> {
        self.ids.get(atom).copied()
    }

    pub fn rules(&self) -> &[GroundRule] {
        &self.rules
    }

    pub fn universe(&self) -> &BTreeSet<Term> {
        &self.universe
    }

    pub fn is_disjunctive(&self) -> bool {
        self.rules.iter().any(|r| r.head.len() > 1)
    }

    pub fn intern(&mut self, atom: Atom) -> usize {
        if let Some(&id) = self.ids.get(&atom) {
            return id;
        }
        let id = self.atoms.len();
        self.ids.insert(atom.clone(), id);
        self.atoms.push(atom);
        id
    }

    pub fn push_rule(&mut self, rule: GroundRule) {
        self.rules.push(rule);
    }

    /// Ids of the atoms of `i`, or `None` when `i` mentions an atom outside the table.
    pub fn ids_of(&self, i: &Interpretation) -> Option<Vec<usize>> {
        i.iter().map(|a| self.id_of(a)).collect()
    }

    pub fn interpretation(&self, ids: impl IntoIterator<Item = usize>) -> Interpretation {
        ids.into_iter().map(|id| self.atoms[id].clone()).collect()
    }

    pub fn rule_text(&self, rule: &GroundRule) -> String {
        let head: Vec<String> = rule.head.iter().map(|&h| self.atoms[h].to_string()).collect();
        let body: Vec<String> = rule
            .body
            .iter()
            .map(|l| {
                let a = &self.atoms[l.atom];
                match l.negation {
                    Negation::Pos => a.to_string(),
                    Negation::Not => format!("not {a}"),
                    Negation::NotNot => format!("not not {a}"),
                }
            })
            .collect();
        let mut s = String::new();
        if let Weight::Soft(w) = rule.weight {
            s.push_str(&format!("{w} "));
        }
        s.push_str(&head.join(" ; "));
        if !body.is_empty() {
            s.push_str(if head.is_empty() { ":- " } else { " :- " });
            s.push_str(&body.join(", "));
        }
        s.push('.');
        s
    }
}

impl fmt::Display for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{}", self.rule_text(r))?;
        }
        Ok(())
    }
}

/// The first variable that is not bound by a positive body literal, if any.
pub fn unsafe_variable(rule: &Rule) -> Option<String> {
    let bound: BTreeSet<&String> = rule
        .body
        .iter()
        .filter(|l| l.negation == Negation::Pos)
        .flat_map(|l| l.atom.args.iter())
        .filter_map(|t| match t {
            Term::Var(v) => Some(v),
            _ => None,
        })
        .collect();
    rule.variables().into_iter().find(|v| !bound.contains(v))
}

pub fn check_safety(rule: &Rule) -> bool {
    unsafe_variable(rule).is_none()
}

pub fn ground(program: &Program) -> Result<GroundProgram, GroundError> {
    ground_with(program, &program.universe(), DEFAULT_MAX_GROUND_RULES)
}

/// Grounds `program` over an explicit universe.
pub fn ground_with(program: &Program, universe: &BTreeSet<Term>, max_rules: usize) -> Result<GroundProgram, GroundError> {
    let constants: Vec<Term> = universe.iter().cloned().collect();
    let mut planned = 0usize;
    for rule in &program.rules {
        if let Some(variable) = unsafe_variable(rule) {
            return Err(GroundError::Unsafe { index: rule.index, variable });
        }
        let k = rule.variables().len();
        if k > 0 && constants.is_empty() {
            return Err(GroundError::EmptyUniverse { index: rule.index });
        }
        let count = u32::try_from(k)
            .ok()
            .and_then(|k| constants.len().max(1).checked_pow(k))
            .ok_or(GroundError::TooLarge { cap: max_rules })?;
        planned = planned.saturating_add(count);
        if planned > max_rules {
            return Err(GroundError::TooLarge { cap: max_rules });
        }
    }

    let mut gp = GroundProgram { universe: universe.clone(), ..GroundProgram::default() };
    for rule in &program.rules {
        let rule = desugar_choice(rule);
        let vars = rule.variables();
        let slot: HashMap<&str, usize> = vars.iter().enumerate().map(|(k, v)| (v.as_str(), k)).collect();
        let resolve = |t: &Term, sub: &[usize]| match t {
            Term::Var(v) => constants[sub[slot[v.as_str()]]].clone(),
            c => c.clone(),
        };
        let instantiate = |a: &Atom, sub: &[usize]| Atom::new(a.predicate.clone(), a.args.iter().map(|t| resolve(t, sub)).collect());

        let mut sub = vec![0usize; vars.len()];
        loop {
            if rule.neq.iter().all(|(l, r)| resolve(l, &sub) != resolve(r, &sub)) {
                let head = rule.head.iter().map(|a| gp.intern(instantiate(a, &sub))).collect();
                let body = rule
                    .body
                    .iter()
                    .map(|l| GroundLiteral { atom: gp.intern(instantiate(&l.atom, &sub)), negation: l.negation })
                    .collect();
                let tuple = sub.iter().map(|&c| constants[c].clone()).collect();
                gp.rules.push(GroundRule { origin: rule.index, weight: rule.weight, head, body, tuple });
            }
            if !advance(&mut sub, constants.len()) {
                break;
            }
        }
    }
    Ok(gp)
}

/// Odometer step over `base^len`; false once every combination has been produced.
fn advance(sub: &mut [usize], base: usize) -> bool {
    for k in (0..sub.len()).rev() {
        sub[k] += 1;
        if sub[k] < base {
            return true;
        }
        sub[k] = 0;
    }
    false
}
