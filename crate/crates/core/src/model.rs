//! Abstract syntax shared by every stage of the pipeline.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Int(i64),
    Sym(String),
    /// Double-quoted constant; the payload excludes the quotes.
    Str(String),
    Var(String),
}

impl Term {
    pub fn sym(name: impl Into<String>) -> Self {
        Term::Sym(name.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(n) => write!(f, "{n}"),
            Term::Sym(s) | Term::Var(s) => f.write_str(s),
            Term::Str(s) => write!(f, "\"{s}\""),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom { predicate: predicate.into(), args }
    }

    pub fn prop(predicate: impl Into<String>) -> Self {
        Atom::new(predicate, Vec::new())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        !self.args.iter().any(Term::is_var)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (k, t) in self.args.iter().enumerate() {
                if k > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{t}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Negation {
    Pos,
    Not,
    NotNot,
}

impl Negation {
    pub fn depth(self) -> u8 {
        match self {
            Negation::Pos => 0,
            Negation::Not => 1,
            Negation::NotNot => 2,
        }
    }

    /// Negation of a single literal as a literal: `not l`.
    pub fn complement(self) -> Negation {
        match self {
            Negation::Pos | Negation::NotNot => Negation::Not,
            Negation::Not => Negation::NotNot,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub negation: Negation,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, negation: Negation::Pos }
    }

    pub fn not(atom: Atom) -> Self {
        Literal { atom, negation: Negation::Not }
    }

    pub fn not_not(atom: Atom) -> Self {
        Literal { atom, negation: Negation::NotNot }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.negation {
            Negation::Pos => write!(f, "{}", self.atom),
            Negation::Not => write!(f, "not {}", self.atom),
            Negation::NotNot => write!(f, "not not {}", self.atom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight {
    Hard,
    Soft(f64),
}

impl Weight {
    pub fn is_hard(self) -> bool {
        matches!(self, Weight::Hard)
    }

    pub fn soft_value(self) -> Option<f64> {
        match self {
            Weight::Soft(w) => Some(w),
            Weight::Hard => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub index: usize,
    pub weight: Weight,
    /// Disjunction; empty for constraints.
    pub head: Vec<Atom>,
    pub body: Vec<Literal>,
    /// `X != Y` builtins.
    pub neq: Vec<(Term, Term)>,
    pub choice: bool,
}

impl Rule {
    pub fn hard(head: Vec<Atom>, body: Vec<Literal>) -> Self {
        Rule { index: 0, weight: Weight::Hard, head, body, neq: Vec::new(), choice: false }
    }

    pub fn soft(weight: f64, head: Vec<Atom>, body: Vec<Literal>) -> Self {
        Rule { weight: Weight::Soft(weight), ..Rule::hard(head, body) }
    }

    pub fn is_ground(&self) -> bool {
        self.terms().all(|t| !t.is_var())
    }

    fn terms(&self) -> impl Iterator<Item = &Term> {
        self.head
            .iter()
            .flat_map(|a| a.args.iter())
            .chain(self.body.iter().flat_map(|l| l.atom.args.iter()))
            .chain(self.neq.iter().flat_map(|(l, r)| [l, r]))
    }

    /// Variable names in order of first occurrence (head, body, builtins).
    pub fn variables(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for t in self.terms() {
            if let Term::Var(v) = t {
                if !seen.contains(v) {
                    seen.push(v.clone());
                }
            }
        }
        seen
    }

    pub fn is_disjunctive(&self) -> bool {
        self.head.len() > 1
    }
}

/// Rewrites `{a} :- B` into `a :- B, not not a`; other rules are returned unchanged.
pub fn desugar_choice(rule: &Rule) -> Rule {
    let mut out = rule.clone();
    if rule.choice {
        let a = rule.head[0].clone();
        out.body.push(Literal::not_not(a));
        out.choice = false;
    }
    out
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Weight::Soft(w) = self.weight {
            write!(f, "{w} ")?;
        }
        if self.choice {
            write!(f, "{{{}}}", self.head[0])?;
        } else {
            for (k, a) in self.head.iter().enumerate() {
                if k > 0 {
                    f.write_str(" ; ")?;
                }
                write!(f, "{a}")?;
            }
        }
        if !self.body.is_empty() || !self.neq.is_empty() {
            if self.head.is_empty() {
                f.write_str(":- ")?;
            } else {
                f.write_str(" :- ")?;
            }
            let mut first = true;
            for l in &self.body {
                if !first {
                    f.write_str(", ")?;
                }
                first = false;
                write!(f, "{l}")?;
            }
            for (l, r) in &self.neq {
                if !first {
                    f.write_str(", ")?;
                }
                first = false;
                write!(f, "{l} != {r}")?;
            }
        }
        f.write_str(".")
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub rules: Vec<Rule>,
}

impl Program {
    /// Builds a program, numbering rules from 1 in the given order.
    pub fn new(rules: Vec<Rule>) -> Self {
        let mut p = Program::default();
        for r in rules {
            p.push(r);
        }
        p
    }

    pub fn push(&mut self, mut rule: Rule) {
        rule.index = self.next_index();
        self.rules.push(rule);
    }

    fn next_index(&self) -> usize {
        self.rules.iter().map(|r| r.index).max().unwrap_or(0) + 1
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn is_ground(&self) -> bool {
        self.rules.iter().all(Rule::is_ground)
    }

    /// Predicate/arity pairs occurring anywhere in the program.
    pub fn signature(&self) -> BTreeSet<(String, usize)> {
        let mut sig = BTreeSet::new();
        for r in &self.rules {
            for a in r.head.iter().chain(r.body.iter().map(|l| &l.atom)) {
                sig.insert((a.predicate.clone(), a.arity()));
            }
        }
        sig
    }

    /// Ground constants occurring anywhere in the program.
    pub fn universe(&self) -> BTreeSet<Term> {
        self.rules.iter().flat_map(|r| r.terms()).filter(|t| !t.is_var()).cloned().collect()
    }

    /// Appends `other`'s rules after this program's, renumbering them to keep indices unique.
    pub fn merged(&self, other: &Program) -> Program {
        let mut out = self.clone();
        for r in &other.rules {
            out.push(r.clone());
        }
        out
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// All ground atoms over the program's predicates and universe, in sorted order.
pub fn herbrand_base(program: &Program) -> BTreeSet<Atom> {
    let universe: Vec<Term> = program.universe().into_iter().collect();
    let mut base = BTreeSet::new();
    for (pred, arity) in program.signature() {
        for args in tuples(&universe, arity) {
            base.insert(Atom::new(pred.clone(), args));
        }
    }
    base
}

/// Every `arity`-tuple over `universe` in lexicographic order.
pub fn tuples(universe: &[Term], arity: usize) -> Vec<Vec<Term>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                universe.iter().map(move |c| {
                    let mut t = prefix.clone();
                    t.push(c.clone());
                    t
                })
            })
            .collect();
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interpretation(pub BTreeSet<Atom>);

impl Interpretation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.0.contains(atom)
    }

    pub fn insert(&mut self, atom: Atom) -> bool {
        self.0.insert(atom)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.0.iter()
    }

    /// Keeps only the atoms accepted by `keep`.
    pub fn restrict(&self, keep: impl Fn(&Atom) -> bool) -> Interpretation {
        Interpretation(self.0.iter().filter(|a| keep(a)).cloned().collect())
    }
}

impl FromIterator<Atom> for Interpretation {
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        Interpretation(iter.into_iter().collect())
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}
