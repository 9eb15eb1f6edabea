//! Stable models of ground programs and the candidate set SM[Π] of the weighted semantics.
//!
//! Membership is always decided by the definition: `I` is kept iff `I` is a stable model
//! of the rules it satisfies. Enumeration only decides which candidates get checked.
//! For non-disjunctive programs it guesses the atoms that occur under negation and
//! derives the rest by least fixpoint; otherwise it tries every subset of head atoms.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use thiserror::Error;

use crate::ground::{GroundProgram, GroundRule};
use crate::model::{Atom, Interpretation, Negation};

pub const DEFAULT_ATOM_CAP: usize = 24;

/// How hard rules take part in SM[Π].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HardMode {
    /// Interpretations violating a hard rule are not candidates.
    #[default]
    Strict,
    /// Hard rules may be violated; the weight tiers rank the violations.
    Relaxed,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("search space of {size} atoms exceeds the cap of {cap}")]
    CapExceeded { cap: usize, size: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductRule {
    pub head: Vec<Atom>,
    pub body: Vec<Atom>,
}

/// Negation-free program.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Reduct {
    pub rules: Vec<ReductRule>,
}

impl Reduct {
    pub fn is_model(&self, i: &BTreeSet<Atom>) -> bool {
        self.rules
            .iter()
            .all(|r| !r.body.iter().all(|a| i.contains(a)) || r.head.iter().any(|a| i.contains(a)))
    }

    pub fn is_disjunctive(&self) -> bool {
        self.rules.iter().any(|r| r.head.len() > 1)
    }

    /// Least model of the definite rules; constraints are ignored. `None` for disjunctive reducts.
    pub fn least_model(&self) -> Option<BTreeSet<Atom>> {
        if self.is_disjunctive() {
            return None;
        }
        let mut m = BTreeSet::new();
        loop {
            let mut changed = false;
            for r in &self.rules {
                if let [h] = r.head.as_slice() {
                    if !m.contains(h) && r.body.iter().all(|a| m.contains(a)) {
                        m.insert(h.clone());
                        changed = true;
                    }
                }
            }
            if !changed {
                return Some(m);
            }
        }
    }

    /// Minimality of a model `i` via the least fixpoint. `None` for disjunctive reducts.
    pub fn is_minimal_by_fixpoint(&self, i: &BTreeSet<Atom>) -> Option<bool> {
        Some(self.is_model(i) && self.least_model()? == *i)
    }

    /// Minimality of a model `i` by checking that no proper subset is a model.
    pub fn is_minimal_by_subsets(&self, i: &BTreeSet<Atom>) -> bool {
        if !self.is_model(i) {
            return false;
        }
        let atoms: Vec<&Atom> = i.iter().collect();
        let n = atoms.len();
        (0..(1u64 << n) - 1).all(|mask| {
            let j: BTreeSet<Atom> = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| atoms[k].clone()).collect();
            !self.is_model(&j)
        })
    }
}

fn body_holds(rule: &GroundRule, i: &FixedBitSet) -> bool {
    rule.body.iter().all(|l| match l.negation {
        Negation::Pos | Negation::NotNot => i.contains(l.atom),
        Negation::Not => !i.contains(l.atom),
    })
}

pub(crate) fn satisfies(rule: &GroundRule, i: &FixedBitSet) -> bool {
    !body_holds(rule, i) || rule.head.iter().any(|&h| i.contains(h))
}

fn survives_reduct(rule: &GroundRule, i: &FixedBitSet) -> bool {
    rule.body.iter().all(|l| match l.negation {
        Negation::Pos => true,
        Negation::Not => !i.contains(l.atom),
        Negation::NotNot => i.contains(l.atom),
    })
}

fn positive_body(rule: &GroundRule) -> impl Iterator<Item = usize> + '_ {
    rule.body.iter().filter(|l| l.negation == Negation::Pos).map(|l| l.atom)
}

/// Reduct of the whole program with respect to `i`, weights ignored.
pub fn reduce(gp: &GroundProgram, i: &Interpretation) -> Reduct {
    let bits = to_bits_lossy(gp, i);
    let rules = gp
        .rules()
        .iter()
        .filter(|r| survives_reduct(r, &bits))
        .map(|r| ReductRule {
            head: r.head.iter().map(|&h| gp.atom(h).clone()).collect(),
            body: positive_body(r).map(|a| gp.atom(a).clone()).collect(),
        })
        .collect();
    Reduct { rules }
}

fn to_bits_lossy(gp: &GroundProgram, i: &Interpretation) -> FixedBitSet {
    let mut bits = FixedBitSet::with_capacity(gp.atoms().len());
    for a in i.iter() {
        if let Some(id) = gp.id_of(a) {
            bits.insert(id);
        }
    }
    bits
}

pub(crate) fn to_bits(gp: &GroundProgram, i: &Interpretation) -> Option<FixedBitSet> {
    let mut bits = FixedBitSet::with_capacity(gp.atoms().len());
    for id in gp.ids_of(i)? {
        bits.insert(id);
    }
    Some(bits)
}

pub(crate) fn from_bits(gp: &GroundProgram, bits: &FixedBitSet) -> Interpretation {
    gp.interpretation(bits.ones())
}

/// True iff `i` satisfies every rule (weights ignored) and is a minimal model of the reduct.
pub fn is_stable_model(gp: &GroundProgram, i: &Interpretation) -> bool {
    match to_bits(gp, i) {
        Some(bits) => gp.rules().iter().all(|r| satisfies(r, &bits)) && minimal(gp.rules().iter(), &bits),
        None => false,
    }
}

/// True iff `i` ∈ SM[Π] under the given treatment of hard rules.
pub fn in_sm(gp: &GroundProgram, i: &Interpretation, mode: HardMode) -> bool {
    to_bits(gp, i).is_some_and(|bits| in_sm_bits(gp, &bits, mode))
}

pub(crate) fn in_sm_bits(gp: &GroundProgram, i: &FixedBitSet, mode: HardMode) -> bool {
    if mode == HardMode::Strict && gp.rules().iter().any(|r| r.is_hard() && !satisfies(r, i)) {
        return false;
    }
    minimal(gp.rules().iter().filter(|r| satisfies(r, i)), i)
}

/// Whether `i` is a minimal model of the reduct of `rules`; `i` must satisfy `rules`.
fn minimal<'a>(rules: impl Iterator<Item = &'a GroundRule>, i: &FixedBitSet) -> bool {
    let reduct: Vec<(&[usize], Vec<usize>)> = rules
        .filter(|r| survives_reduct(r, i))
        .map(|r| (r.head.as_slice(), positive_body(r).collect()))
        .collect();
    if reduct.iter().all(|(h, _)| h.len() <= 1) {
        let mut m = FixedBitSet::with_capacity(i.len());
        least_fixpoint(&mut m, reduct.iter().filter_map(|(h, b)| h.first().map(|&h| (h, b.as_slice()))));
        return m == *i;
    }
    let members: Vec<usize> = i.ones().collect();
    let n = members.len();
    if n >= 63 {
        // Beyond exhaustive reach; unreachable under any sane cap.
        return false;
    }
    (0..(1u64 << n) - 1).all(|mask| {
        let mut j = FixedBitSet::with_capacity(i.len());
        for (k, &a) in members.iter().enumerate() {
            if mask >> k & 1 == 1 {
                j.insert(a);
            }
        }
        !reduct
            .iter()
            .all(|(h, b)| !b.iter().all(|&a| j.contains(a)) || h.iter().any(|&a| j.contains(a)))
    })
}

fn least_fixpoint<'a>(m: &mut FixedBitSet, rules: impl Iterator<Item = (usize, &'a [usize])> + Clone) {
    loop {
        let mut changed = false;
        for (h, body) in rules.clone() {
            if !m.contains(h) && body.iter().all(|&a| m.contains(a)) {
                m.insert(h);
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Engine {
    pub cap: usize,
    pub hard_mode: HardMode,
}

impl Default for Engine {
    fn default() -> Self {
        Engine { cap: DEFAULT_ATOM_CAP, hard_mode: HardMode::Strict }
    }
}

/// Normal rule of the guessing program, split by literal kind.
#[derive(Clone, Debug)]
struct Normal {
    head: Option<usize>,
    pos: Vec<usize>,
    neg: Vec<usize>,
    negneg: Vec<usize>,
}

impl Engine {
    pub fn new(hard_mode: HardMode) -> Self {
        Engine { hard_mode, ..Engine::default() }
    }

    pub fn with_cap(self, cap: usize) -> Self {
        Engine { cap, ..self }
    }

    /// SM[Π] in a deterministic order.
    pub fn enumerate(&self, gp: &GroundProgram) -> Result<Vec<Interpretation>, EngineError> {
        Ok(self.enumerate_bits(gp)?.iter().map(|b| from_bits(gp, b)).collect())
    }

    pub(crate) fn enumerate_bits(&self, gp: &GroundProgram) -> Result<Vec<FixedBitSet>, EngineError> {
        if gp.is_disjunctive() {
            return self.enumerate_subsets(gp);
        }
        self.enumerate_guesses(gp)
    }

    /// Brute force over subsets of head atoms; the reference oracle.
    pub fn enumerate_naive(&self, gp: &GroundProgram) -> Result<Vec<Interpretation>, EngineError> {
        Ok(self.enumerate_subsets(gp)?.iter().map(|b| from_bits(gp, b)).collect())
    }

    fn enumerate_subsets(&self, gp: &GroundProgram) -> Result<Vec<FixedBitSet>, EngineError> {
        let n = gp.atoms().len();
        let heads: BTreeSet<usize> = gp.rules().iter().flat_map(|r| r.head.iter().copied()).collect();
        let heads: Vec<usize> = heads.into_iter().collect();
        self.check_cap(heads.len())?;
        let mode = self.hard_mode;
        Ok((0..1u64 << heads.len())
            .into_par_iter()
            .filter_map(|mask| {
                let mut i = FixedBitSet::with_capacity(n);
                for (k, &a) in heads.iter().enumerate() {
                    if mask >> k & 1 == 1 {
                        i.insert(a);
                    }
                }
                in_sm_bits(gp, &i, mode).then_some(i)
            })
            .collect())
    }

    fn check_cap(&self, size: usize) -> Result<(), EngineError> {
        if size > self.cap || size >= 63 {
            return Err(EngineError::CapExceeded { cap: self.cap, size });
        }
        Ok(())
    }

    /// Rules whose stable models coincide with SM[Π] under the mode: rules that may be
    /// violated are weakened to `H :- B, not not H` and constraints among them dropped.
    fn guessing_program(&self, gp: &GroundProgram) -> Vec<Normal> {
        let mut out = Vec::new();
        for r in gp.rules() {
            let verbatim = self.hard_mode == HardMode::Strict && r.is_hard();
            if !verbatim && r.head.is_empty() {
                continue;
            }
            let mut n = Normal { head: r.head.first().copied(), pos: Vec::new(), neg: Vec::new(), negneg: Vec::new() };
            for l in &r.body {
                match l.negation {
                    Negation::Pos => n.pos.push(l.atom),
                    Negation::Not => n.neg.push(l.atom),
                    Negation::NotNot => n.negneg.push(l.atom),
                }
            }
            if !verbatim {
                let h = r.head[0];
                if !n.negneg.contains(&h) {
                    n.negneg.push(h);
                }
            }
            out.push(n);
        }
        out
    }

    fn enumerate_guesses(&self, gp: &GroundProgram) -> Result<Vec<FixedBitSet>, EngineError> {
        let n = gp.atoms().len();
        let rules = self.guessing_program(gp);
        let fixed = determined(&rules, n);
        let status = |r: &Normal, v: &dyn Fn(usize) -> Option<bool>| body_status(r, v);
        // Rules that can fire in some stable model.
        let live: Vec<&Normal> = rules.iter().filter(|r| status(r, &|a| fixed[a]) != Some(false)).collect();

        let mut guess: BTreeSet<usize> = BTreeSet::new();
        for r in &live {
            guess.extend(r.neg.iter().chain(&r.negneg).copied().filter(|&a| fixed[a].is_none()));
        }
        let guess: Vec<usize> = guess.into_iter().collect();
        self.check_cap(guess.len())?;

        let mode = self.hard_mode;
        let mut slot = vec![usize::MAX; n];
        for (k, &a) in guess.iter().enumerate() {
            slot[a] = k;
        }
        Ok((0..1u64 << guess.len())
            .into_par_iter()
            .filter_map(|mask| {
                let value = |a: usize| fixed[a].unwrap_or_else(|| slot[a] != usize::MAX && mask >> slot[a] & 1 == 1);
                let reduct: Vec<(usize, &[usize])> = live
                    .iter()
                    .filter(|r| r.neg.iter().all(|&a| !value(a)) && r.negneg.iter().all(|&a| value(a)))
                    .filter_map(|r| r.head.map(|h| (h, r.pos.as_slice())))
                    .collect();
                let mut m = FixedBitSet::with_capacity(n);
                least_fixpoint(&mut m, reduct.iter().copied());
                let consistent = guess.iter().enumerate().all(|(k, &a)| m.contains(a) == (mask >> k & 1 == 1));
                (consistent && in_sm_bits(gp, &m, mode)).then_some(m)
            })
            .collect())
    }
}

fn body_status(r: &Normal, v: &dyn Fn(usize) -> Option<bool>) -> Option<bool> {
    let mut unknown = false;
    let mut check = |val: Option<bool>, want: bool| match val {
        Some(x) if x != want => Some(false),
        None => {
            unknown = true;
            None
        }
        _ => None,
    };
    for &a in &r.pos {
        if check(v(a), true).is_some() {
            return Some(false);
        }
    }
    for &a in &r.neg {
        if check(v(a), false).is_some() {
            return Some(false);
        }
    }
    for &a in &r.negneg {
        if check(v(a), true).is_some() {
            return Some(false);
        }
    }
    if unknown {
        None
    } else {
        Some(true)
    }
}

/// Truth values shared by every supported model of `rules`.
fn determined(rules: &[Normal], n: usize) -> Vec<Option<bool>> {
    let mut by_head: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, r) in rules.iter().enumerate() {
        if let Some(h) = r.head {
            by_head[h].push(k);
        }
    }
    let mut val: Vec<Option<bool>> = by_head.iter().map(|rs| if rs.is_empty() { Some(false) } else { None }).collect();
    loop {
        let mut changed = false;
        for a in 0..n {
            if val[a].is_some() {
                continue;
            }
            let statuses: Vec<Option<bool>> = by_head[a].iter().map(|&k| body_status(&rules[k], &|x| val[x])).collect();
            if statuses.contains(&Some(true)) {
                val[a] = Some(true);
                changed = true;
            } else if statuses.iter().all(|s| *s == Some(false)) {
                val[a] = Some(false);
                changed = true;
            }
        }
        if !changed {
            return val;
        }
    }
}

/// SM[Π] with every rule allowed to be violated.
pub fn enumerate_sm(gp: &GroundProgram) -> Result<Vec<Interpretation>, EngineError> {
    Engine::new(HardMode::Relaxed).enumerate(gp)
}
