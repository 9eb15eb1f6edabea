//! Tight programs as Markov logic: completion, Tseytin rewriting, emission and exact evaluation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use petgraph::algo::is_cyclic_directed;
use petgraph::graph::DiGraph;
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::EngineError;
use crate::ground::{GroundProgram, GroundRule};
use crate::inference::{Distribution, WeightMode, WeightVector};
use crate::model::{Atom, Interpretation, Negation, Term, Weight};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MlnError {
    #[error("rule {index} is disjunctive; only normal programs can be completed")]
    Disjunctive { index: usize },
    #[error("program is not tight")]
    NotTight,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(a: Atom) -> Self {
        Formula::Atom(a)
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Conjunction, collapsing the empty and singleton cases.
    pub fn conj(mut parts: Vec<Formula>) -> Self {
        match parts.len() {
            0 => Formula::True,
            1 => parts.pop().unwrap(),
            _ => Formula::And(parts),
        }
    }

    /// Disjunction, collapsing the empty and singleton cases.
    pub fn disj(mut parts: Vec<Formula>) -> Self {
        match parts.len() {
            0 => Formula::False,
            1 => parts.pop().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    pub fn eval(&self, holds: &impl Fn(&Atom) -> bool) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => holds(a),
            Formula::Not(f) => !f.eval(holds),
            Formula::And(fs) => fs.iter().all(|f| f.eval(holds)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(holds)),
            Formula::Implies(a, b) => !a.eval(holds) || b.eval(holds),
            Formula::Iff(a, b) => a.eval(holds) == b.eval(holds),
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                out.insert(a.clone());
            }
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Every subformula in pre-order, starting with `self`.
    pub fn subformulas(&self) -> Vec<&Formula> {
        let mut out = vec![self];
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => {}
            Formula::Not(f) => out.extend(f.subformulas()),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| out.extend(f.subformulas())),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                out.extend(a.subformulas());
                out.extend(b.subformulas());
            }
        }
        out
    }

    /// Replaces every occurrence of `target` with `with`.
    pub fn replace(&self, target: &Formula, with: &Formula) -> Formula {
        if self == target {
            return with.clone();
        }
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => self.clone(),
            Formula::Not(f) => Formula::not(f.replace(target, with)),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.replace(target, with)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.replace(target, with)).collect()),
            Formula::Implies(a, b) => Formula::implies(a.replace(target, with), b.replace(target, with)),
            Formula::Iff(a, b) => Formula::iff(a.replace(target, with), b.replace(target, with)),
        }
    }

    fn is_literal(&self) -> bool {
        match self {
            Formula::Atom(_) => true,
            Formula::Not(f) => matches!(**f, Formula::Atom(_)),
            _ => false,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, fs: &[Formula], sep: &str| -> fmt::Result {
            f.write_str("(")?;
            for (k, x) in fs.iter().enumerate() {
                if k > 0 {
                    f.write_str(sep)?;
                }
                write!(f, "{x}")?;
            }
            f.write_str(")")
        };
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(x) => write!(f, "!{x}"),
            Formula::And(fs) => join(f, fs, " ^ "),
            Formula::Or(fs) => join(f, fs, " v "),
            Formula::Implies(a, b) => write!(f, "({a} => {b})"),
            Formula::Iff(a, b) => write!(f, "({a} <=> {b})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// `B → H` for a source rule.
    Rule,
    /// `p → ∨ bodies`.
    Completion,
    /// `aux ↔ F`.
    Definition,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlnFormula {
    pub weight: Weight,
    pub formula: Formula,
    pub role: Role,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MlnProgram {
    pub formulas: Vec<MlnFormula>,
    /// Aux atoms with their defining formulas, in creation order.
    pub aux: Vec<(Atom, Formula)>,
    /// Ground atoms of the source program.
    pub atoms: BTreeSet<Atom>,
    pub universe: BTreeSet<Term>,
}

impl MlnProgram {
    /// Source atoms, aux atoms and every atom mentioned by a formula.
    pub fn signature(&self) -> BTreeSet<Atom> {
        let mut out = self.atoms.clone();
        out.extend(self.aux.iter().map(|(a, _)| a.clone()));
        for f in &self.formulas {
            out.extend(f.formula.atoms());
        }
        out
    }

    pub fn aux_atoms(&self) -> BTreeSet<Atom> {
        self.aux.iter().map(|(a, _)| a.clone()).collect()
    }
}

fn literal_formula(gp: &GroundProgram, atom: usize, negation: Negation) -> Formula {
    let a = Formula::atom(gp.atom(atom).clone());
    match negation {
        Negation::Pos | Negation::NotNot => a,
        Negation::Not => Formula::not(a),
    }
}

/// Head atom of a desugared choice rule `p :- B, not not p`.
fn choice_head(rule: &GroundRule) -> Option<usize> {
    match rule.head[..] {
        [h] if rule.body.iter().any(|l| l.atom == h && l.negation == Negation::NotNot) => Some(h),
        _ => None,
    }
}

fn body_without(gp: &GroundProgram, rule: &GroundRule, skip: Option<usize>) -> Formula {
    Formula::conj(
        rule.body
            .iter()
            .filter(|l| !(Some(l.atom) == skip && l.negation == Negation::NotNot))
            .map(|l| literal_formula(gp, l.atom, l.negation))
            .collect(),
    )
}

fn check_normal(gp: &GroundProgram) -> Result<(), MlnError> {
    match gp.rules().iter().find(|r| r.head.len() > 1) {
        Some(r) => Err(MlnError::Disjunctive { index: r.origin }),
        None => Ok(()),
    }
}

/// Acyclicity of the positive dependency graph.
pub fn is_tight(gp: &GroundProgram) -> Result<bool, MlnError> {
    check_normal(gp)?;
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..gp.atoms().len()).map(|_| g.add_node(())).collect();
    for r in gp.rules() {
        for &h in &r.head {
            for l in r.body.iter().filter(|l| l.negation == Negation::Pos) {
                g.add_edge(nodes[h], nodes[l.atom], ());
            }
        }
    }
    Ok(!is_cyclic_directed(&g))
}

/// Rule formulas plus completion formulas for the atoms accepted by `close`.
/// Disjunctive rules are allowed only when none of their head atoms is closed.
pub fn from_rules(gp: &GroundProgram, close: impl Fn(&Atom) -> bool) -> Result<MlnProgram, MlnError> {
    if let Some(r) = gp.rules().iter().find(|r| r.head.len() > 1 && r.head.iter().any(|&h| close(gp.atom(h)))) {
        return Err(MlnError::Disjunctive { index: r.origin });
    }
    let mut formulas = Vec::new();
    for r in gp.rules() {
        if choice_head(r).is_some() {
            continue;
        }
        let head = Formula::disj(r.head.iter().map(|&h| Formula::atom(gp.atom(h).clone())).collect());
        let body = body_without(gp, r, None);
        let formula = match (body, head) {
            (Formula::True, head) => head,
            (body, Formula::False) => Formula::not(body),
            (body, head) => Formula::implies(body, head),
        };
        formulas.push(MlnFormula { weight: r.weight, formula, role: Role::Rule });
    }
    for (id, p) in gp.atoms().iter().enumerate() {
        if !close(p) {
            continue;
        }
        let mut disjuncts = Vec::new();
        let mut tautology = false;
        for r in gp.rules().iter().filter(|r| r.head.contains(&id)) {
            match body_without(gp, r, choice_head(r)) {
                Formula::True => tautology = true,
                body => disjuncts.push(body),
            }
        }
        if tautology {
            continue;
        }
        let formula = match Formula::disj(disjuncts) {
            Formula::False => Formula::not(Formula::atom(p.clone())),
            rhs => Formula::implies(Formula::atom(p.clone()), rhs),
        };
        formulas.push(MlnFormula { weight: Weight::Hard, formula, role: Role::Completion });
    }
    Ok(MlnProgram {
        formulas,
        aux: Vec::new(),
        atoms: gp.atoms().iter().cloned().collect(),
        universe: gp.universe().clone(),
    })
}

/// Ground Clark completion of a tight normal program.
pub fn complete(gp: &GroundProgram) -> Result<MlnProgram, MlnError> {
    if !is_tight(gp)? {
        return Err(MlnError::NotTight);
    }
    from_rules(gp, |_| true)
}

struct AuxNamer {
    taken: BTreeSet<String>,
    next: usize,
}

impl AuxNamer {
    fn new(mln: &MlnProgram) -> Self {
        let taken = mln.signature().into_iter().map(|a| a.predicate).collect();
        AuxNamer { taken, next: mln.aux.len() + 1 }
    }

    fn fresh(&mut self) -> Atom {
        loop {
            let name = format!("aux_{}", self.next);
            self.next += 1;
            if self.taken.insert(name.clone()) {
                return Atom::prop(name);
            }
        }
    }
}

/// Replaces each multi-literal conjunction on a completion right-hand side with a shared aux atom.
pub fn tseytin(mln: &MlnProgram) -> MlnProgram {
    let mut namer = AuxNamer::new(mln);
    let mut memo: HashMap<Formula, Atom> = mln.aux.iter().map(|(a, f)| (f.clone(), a.clone())).collect();
    let mut out = MlnProgram { formulas: Vec::new(), ..mln.clone() };
    let mut defs = Vec::new();
    let mut name = |f: &Formula, defs: &mut Vec<MlnFormula>, aux: &mut Vec<(Atom, Formula)>| -> Formula {
        if f.is_literal() || !matches!(f, Formula::And(_)) {
            return f.clone();
        }
        let a = memo.entry(f.clone()).or_insert_with(|| {
            let a = namer.fresh();
            aux.push((a.clone(), f.clone()));
            defs.push(MlnFormula {
                weight: Weight::Hard,
                formula: Formula::iff(Formula::atom(a.clone()), f.clone()),
                role: Role::Definition,
            });
            a
        });
        Formula::atom(a.clone())
    };
    for mf in &mln.formulas {
        let formula = match (&mf.role, &mf.formula) {
            (Role::Completion, Formula::Implies(p, rhs)) => {
                let rhs = match &**rhs {
                    Formula::Or(ds) => Formula::Or(ds.iter().map(|d| name(d, &mut defs, &mut out.aux)).collect()),
                    d => name(d, &mut defs, &mut out.aux),
                };
                Formula::Implies(p.clone(), Box::new(rhs))
            }
            (_, f) => f.clone(),
        };
        out.formulas.push(MlnFormula { formula, ..mf.clone() });
    }
    out.formulas.extend(defs);
    out
}

/// Replaces `sub` inside formula `index` with a fresh aux atom and adds its hard definition.
pub fn extract_subformula(mln: &MlnProgram, index: usize, sub: &Formula) -> MlnProgram {
    let mut out = mln.clone();
    let a = AuxNamer::new(mln).fresh();
    out.formulas[index].formula = mln.formulas[index].formula.replace(sub, &Formula::atom(a.clone()));
    out.aux.push((a.clone(), sub.clone()));
    out.formulas.push(MlnFormula {
        weight: Weight::Hard,
        formula: Formula::iff(Formula::atom(a), sub.clone()),
        role: Role::Definition,
    });
    out
}

/// Formula over atom indices, evaluated against a bit mask.
enum Compiled {
    Const(bool),
    Var(usize),
    Not(Box<Compiled>),
    And(Vec<Compiled>),
    Or(Vec<Compiled>),
    Implies(Box<Compiled>, Box<Compiled>),
    Iff(Box<Compiled>, Box<Compiled>),
}

impl Compiled {
    fn new(f: &Formula, index: &BTreeMap<Atom, usize>) -> Self {
        let c = |x: &Formula| Box::new(Compiled::new(x, index));
        match f {
            Formula::True => Compiled::Const(true),
            Formula::False => Compiled::Const(false),
            Formula::Atom(a) => Compiled::Var(index[a]),
            Formula::Not(x) => Compiled::Not(c(x)),
            Formula::And(fs) => Compiled::And(fs.iter().map(|x| Compiled::new(x, index)).collect()),
            Formula::Or(fs) => Compiled::Or(fs.iter().map(|x| Compiled::new(x, index)).collect()),
            Formula::Implies(a, b) => Compiled::Implies(c(a), c(b)),
            Formula::Iff(a, b) => Compiled::Iff(c(a), c(b)),
        }
    }

    fn eval(&self, world: u64) -> bool {
        match self {
            Compiled::Const(b) => *b,
            Compiled::Var(k) => world >> k & 1 == 1,
            Compiled::Not(x) => !x.eval(world),
            Compiled::And(xs) => xs.iter().all(|x| x.eval(world)),
            Compiled::Or(xs) => xs.iter().any(|x| x.eval(world)),
            Compiled::Implies(a, b) => !a.eval(world) || b.eval(world),
            Compiled::Iff(a, b) => a.eval(world) == b.eval(world),
        }
    }
}

/// Exact distribution over all interpretations of the signature; zero-probability worlds are dropped.
pub fn mln_distribution(mln: &MlnProgram, cap: usize) -> Result<Distribution, MlnError> {
    let atoms: Vec<Atom> = mln.signature().into_iter().collect();
    if atoms.len() > cap.min(63) {
        return Err(EngineError::CapExceeded { cap, size: atoms.len() }.into());
    }
    let index: BTreeMap<Atom, usize> = atoms.iter().cloned().enumerate().map(|(k, a)| (a, k)).collect();
    let compiled: Vec<(Weight, Compiled)> =
        mln.formulas.iter().map(|f| (f.weight, Compiled::new(&f.formula, &index))).collect();
    let weighted: Vec<(u64, WeightVector)> = (0..1u64 << atoms.len())
        .into_par_iter()
        .map(|world| {
            let mut w = WeightVector { hard: 0, soft: 0.0 };
            for (weight, f) in &compiled {
                if f.eval(world) {
                    match weight {
                        Weight::Hard => w.hard += 1,
                        Weight::Soft(v) => w.soft += v,
                    }
                }
            }
            (world, w)
        })
        .collect();
    let to_interp = |world: u64| -> Interpretation {
        atoms.iter().enumerate().filter(|(k, _)| world >> k & 1 == 1).map(|(_, a)| a.clone()).collect()
    };
    let mut dist = Distribution::from_weights(
        WeightMode::Reward,
        weighted.into_iter().map(|(world, w)| (to_interp(world), w)).collect(),
    );
    dist.entries.retain(|e| e.probability > 0.0);
    Ok(dist)
}

fn capitalize(s: &str) -> String {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) => c.to_uppercase().chain(cs).collect(),
        None => String::new(),
    }
}

fn mln_term(t: &Term) -> String {
    match t {
        Term::Sym(s) | Term::Str(s) => capitalize(s),
        Term::Int(n) => n.to_string(),
        Term::Var(v) => v.to_lowercase(),
    }
}

fn mln_atom(a: &Atom) -> String {
    let name = capitalize(&a.predicate);
    if a.args.is_empty() {
        return name;
    }
    let args: Vec<String> = a.args.iter().map(mln_term).collect();
    format!("{name}({})", args.join(","))
}

fn mln_formula(f: &Formula, top: bool) -> String {
    let wrap = |s: String| if top { s } else { format!("({s})") };
    let join = |fs: &[Formula], sep: &str| fs.iter().map(|x| mln_formula(x, false)).collect::<Vec<_>>().join(sep);
    match f {
        Formula::True => "true".to_string(),
        Formula::False => "false".to_string(),
        Formula::Atom(a) => mln_atom(a),
        Formula::Not(x) => format!("!{}", mln_formula(x, false)),
        Formula::And(fs) => wrap(join(fs, " ^ ")),
        Formula::Or(fs) => wrap(join(fs, " v ")),
        Formula::Implies(a, b) => wrap(format!("{} => {}", mln_formula(a, false), mln_formula(b, false))),
        Formula::Iff(a, b) => wrap(format!("{} <=> {}", mln_formula(a, false), mln_formula(b, false))),
    }
}

/// Alchemy-style text: sort, predicate declarations, aux mapping comments, then formulas.
pub fn emit_mln_text(mln: &MlnProgram) -> String {
    let mut out = String::new();
    let constants: Vec<String> = mln.universe.iter().map(mln_term).collect();
    out.push_str(&format!("entity={{{}}}\n\n", constants.join(",")));
    let mut preds: BTreeMap<String, usize> = BTreeMap::new();
    for a in mln.signature() {
        preds.insert(capitalize(&a.predicate), a.arity());
    }
    for (p, arity) in &preds {
        if *arity == 0 {
            out.push_str(&format!("{p}\n"));
        } else {
            out.push_str(&format!("{p}({})\n", vec!["entity"; *arity].join(",")));
        }
    }
    if !mln.aux.is_empty() {
        out.push('\n');
        for (a, f) in &mln.aux {
            out.push_str(&format!("// {} <=> {}\n", mln_atom(a), mln_formula(f, true)));
        }
    }
    if !mln.formulas.is_empty() {
        out.push('\n');
    }
    for f in &mln.formulas {
        match f.weight {
            Weight::Hard => out.push_str(&format!("{}.\n", mln_formula(&f.formula, true))),
            Weight::Soft(w) => out.push_str(&format!("{w} {}\n", mln_formula(&f.formula, true))),
        }
    }
    out
}

/// Sidecar text mapping each aux atom to its defining formula.
pub fn aux_mapping(mln: &MlnProgram) -> String {
    mln.aux.iter().map(|(a, f)| format!("{} {}\n", mln_atom(a), mln_formula(f, true))).collect()
}
