//! Weights, probabilities and queries over SM[Π].

use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;

use crate::engine::{in_sm_bits, satisfies, to_bits, Engine, HardMode, DEFAULT_ATOM_CAP};
use crate::ground::{ground, GroundProgram};
use crate::model::{Atom, Interpretation, Program};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    Reward,
    Penalty,
}

/// Symbolic weight `e^(±(α·hard + soft))`: satisfied rules for reward, violated for penalty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightVector {
    pub hard: usize,
    pub soft: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub model: Interpretation,
    pub weight: WeightVector,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub mode: WeightMode,
    pub entries: Vec<Entry>,
}

impl Distribution {
    pub fn probability(&self, model: &Interpretation) -> Option<f64> {
        self.entries.iter().find(|e| &e.model == model).map(|e| e.probability)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }

    /// Probability of each restriction of the models to the atoms accepted by `keep`.
    pub fn marginalize(&self, keep: impl Fn(&Atom) -> bool) -> BTreeMap<Interpretation, f64> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry(e.model.restrict(&keep)).or_insert(0.0) += e.probability;
        }
        out
    }

    /// Σ P(I) over models containing `atom`.
    pub fn atom_probability(&self, atom: &Atom) -> f64 {
        self.entries.iter().filter(|e| e.model.contains(atom)).map(|e| e.probability).sum()
    }

    /// Builds a normalized distribution from weight vectors, applying the α limit lexicographically.
    pub fn from_weights(mode: WeightMode, weighted: Vec<(Interpretation, WeightVector)>) -> Self {
        let better_hard = |a: usize, b: usize| match mode {
            WeightMode::Reward => a > b,
            WeightMode::Penalty => a < b,
        };
        let sign = match mode {
            WeightMode::Reward => 1.0,
            WeightMode::Penalty => -1.0,
        };
        let Some(best) = weighted.iter().map(|(_, w)| w.hard).reduce(|a, b| if better_hard(b, a) { b } else { a }) else {
            return Distribution { mode, entries: Vec::new() };
        };
        let shift = weighted
            .iter()
            .filter(|(_, w)| w.hard == best)
            .map(|(_, w)| sign * w.soft)
            .fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = weighted
            .iter()
            .map(|(_, w)| if w.hard == best { (sign * w.soft - shift).exp() } else { 0.0 })
            .collect();
        let z: f64 = raw.iter().sum();
        let entries = weighted
            .into_iter()
            .zip(raw)
            .map(|((model, weight), r)| Entry { model, weight, probability: r / z })
            .collect();
        Distribution { mode, entries }
    }
}

fn weight_of(gp: &GroundProgram, i: &FixedBitSet, mode: WeightMode) -> WeightVector {
    let mut w = WeightVector { hard: 0, soft: 0.0 };
    for r in gp.rules() {
        let counted = match mode {
            WeightMode::Reward => satisfies(r, i),
            WeightMode::Penalty => !satisfies(r, i),
        };
        if counted {
            match r.weight.soft_value() {
                Some(v) => w.soft += v,
                None => w.hard += 1,
            }
        }
    }
    w
}

fn weight_checked(gp: &GroundProgram, i: &Interpretation, mode: WeightMode) -> Option<WeightVector> {
    let bits = to_bits(gp, i)?;
    in_sm_bits(gp, &bits, HardMode::Relaxed).then(|| weight_of(gp, &bits, mode))
}

/// Satisfied hard rules and satisfied soft weight; `None` when `i` ∉ SM[Π].
pub fn weight_reward(gp: &GroundProgram, i: &Interpretation) -> Option<WeightVector> {
    weight_checked(gp, i, WeightMode::Reward)
}

/// Violated hard rules and violated soft weight; `None` when `i` ∉ SM[Π].
pub fn weight_penalty(gp: &GroundProgram, i: &Interpretation) -> Option<WeightVector> {
    weight_checked(gp, i, WeightMode::Penalty)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapModel {
    pub model: Interpretation,
    /// Penalty-mode weight vector.
    pub penalty: WeightVector,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Marginals {
    pub values: BTreeMap<Atom, f64>,
    /// Query names that match no atom of the program.
    pub unknown: Vec<String>,
}

/// Query front end over the stable-model engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reasoner {
    hard_mode: HardMode,
    cap: usize,
}

impl Default for Reasoner {
    fn default() -> Self {
        Reasoner { hard_mode: HardMode::Strict, cap: DEFAULT_ATOM_CAP }
    }
}

impl Reasoner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_hard_mode(&mut self, mode: HardMode) {
        self.hard_mode = mode;
    }

    pub fn hard_mode(&self) -> HardMode {
        self.hard_mode
    }

    pub fn with_hard_mode(mut self, mode: HardMode) -> Self {
        self.hard_mode = mode;
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn engine(&self) -> Engine {
        Engine { cap: self.cap, hard_mode: self.hard_mode }
    }

    /// Stable models with their weights; probabilities are zero outside the extremal hard tier.
    pub fn distribution(&self, gp: &GroundProgram, mode: WeightMode) -> Result<Distribution, Error> {
        let models = self.engine().enumerate_bits(gp)?;
        if models.is_empty() {
            return Err(Error::NoStableModels);
        }
        let weighted = models.iter().map(|b| (crate::engine::from_bits(gp, b), weight_of(gp, b, mode))).collect();
        Ok(Distribution::from_weights(mode, weighted))
    }

    /// Most probable stable models; ties are all returned.
    pub fn map_estimate(&self, gp: &GroundProgram) -> Result<Vec<MapModel>, Error> {
        let dist = self.distribution(gp, WeightMode::Penalty)?;
        let best_hard = dist.entries.iter().map(|e| e.weight.hard).min().unwrap_or(0);
        let best_soft = dist
            .entries
            .iter()
            .filter(|e| e.weight.hard == best_hard)
            .map(|e| e.weight.soft)
            .fold(f64::INFINITY, f64::min);
        let tol = 1e-9 * best_soft.abs().max(1.0);
        Ok(dist
            .entries
            .into_iter()
            .filter(|e| e.weight.hard == best_hard && e.weight.soft - best_soft <= tol)
            .map(|e| MapModel { model: e.model, penalty: e.weight })
            .collect())
    }

    /// Marginal probability of every ground atom whose predicate is queried.
    pub fn marginal(&self, gp: &GroundProgram, preds: &BTreeSet<String>) -> Result<Marginals, Error> {
        let dist = self.distribution(gp, WeightMode::Penalty)?;
        Ok(marginals_of(&dist, gp.atoms(), preds))
    }

    /// Marginals of `program` extended with the hard rules of `evidence`.
    pub fn conditional(&self, program: &Program, evidence: &Program, preds: &BTreeSet<String>) -> Result<Marginals, Error> {
        if evidence.rules.iter().any(|r| !r.weight.is_hard()) {
            return Err(Error::WeightedEvidence);
        }
        let gp = ground(&program.merged(evidence))?;
        match self.marginal(&gp, preds) {
            Err(Error::NoStableModels) if !evidence.is_empty() => Err(Error::InconsistentEvidence),
            other => other,
        }
    }
}

pub fn marginals_of(dist: &Distribution, atoms: &[Atom], preds: &BTreeSet<String>) -> Marginals {
    let mut out = Marginals::default();
    for p in preds {
        let matching: Vec<&Atom> = atoms.iter().filter(|a| &a.predicate == p).collect();
        if matching.is_empty() {
            out.unknown.push(p.clone());
        }
        for a in matching {
            out.values.insert(a.clone(), dist.atom_probability(a));
        }
    }
    out
}

/// `round(soft · scale)` with ties to even, as displayed after "Optimization:".
pub fn scaled(value: f64, scale: u32) -> i64 {
    (value * f64::from(scale)).round_ties_even() as i64
}

/// Probability with 12 significant digits and trailing zeros removed.
pub fn format_probability(p: f64) -> String {
    if p == 0.0 || !p.is_finite() {
        return if p.is_finite() { "0.0".into() } else { p.to_string() };
    }
    let exponent = p.abs().log10().floor() as i32;
    let decimals = (11 - exponent).max(1) as usize;
    let mut s = format!("{p:.decimals$}");
    // Rounding may have produced an extra integer digit, e.g. 0.99999999999999 -> 1.000...
    let digits = s.chars().filter(char::is_ascii_digit).skip_while(|&c| c == '0').count();
    if digits > 12 && decimals > 1 {
        s = format!("{p:.prec$}", prec = decimals - 1);
    }
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0');
        s = if trimmed.ends_with('.') { format!("{trimmed}0") } else { trimmed.to_string() };
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use proptest::prelude::*;

    const BIRD: &str = "bird(X) :- residentbird(X).\nbird(X) :- migratorybird(X).\n\
        :- residentbird(X), migratorybird(X).\n2 residentbird(jo).\n1 migratorybird(jo).";
    const SMOKE: &str = "1 smoke(Y) :- smoke(X), influence(X, Y).\n\
        smoke(alice). influence(alice, bob). influence(bob, carol).";

    fn gp(text: &str) -> GroundProgram {
        ground(&parse_program(text).unwrap()).unwrap()
    }

    fn interp(atoms: &[&str]) -> Interpretation {
        atoms.iter().map(|a| parse_program(&format!("{a}.")).unwrap().rules[0].head[0].clone()).collect()
    }

    fn preds(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn reward_weights() {
        let s = gp(SMOKE);
        let all = interp(&["smoke(alice)", "smoke(bob)", "smoke(carol)", "influence(alice,bob)", "influence(bob,carol)"]);
        assert_eq!(weight_reward(&s, &all), Some(WeightVector { hard: 3, soft: 9.0 }));
        let b = gp(BIRD);
        assert_eq!(weight_reward(&b, &interp(&["residentbird(jo)", "bird(jo)"])).unwrap().soft, 2.0);
        assert_eq!(weight_reward(&GroundProgram::default(), &Interpretation::new()), Some(WeightVector { hard: 0, soft: 0.0 }));
        // Not a member of SM[Π]: bird(jo) is unsupported.
        assert_eq!(weight_reward(&b, &interp(&["bird(jo)"])), None);
    }

    #[test]
    fn penalty_weights() {
        let b = gp(BIRD);
        assert_eq!(weight_penalty(&b, &interp(&["residentbird(jo)", "bird(jo)"])), Some(WeightVector { hard: 0, soft: 1.0 }));
        assert_eq!(weight_penalty(&b, &Interpretation::new()), Some(WeightVector { hard: 0, soft: 3.0 }));
        let p = gp("1 a. b :- a.");
        assert_eq!(weight_penalty(&p, &interp(&["a", "b"])), Some(WeightVector { hard: 0, soft: 0.0 }));
    }

    #[test]
    fn bird_distribution() {
        let b = gp(BIRD);
        let d = Reasoner::new().distribution(&b, WeightMode::Penalty).unwrap();
        let p = |atoms: &[&str]| d.probability(&interp(atoms)).unwrap();
        let z = (-1f64).exp() + (-3f64).exp() + (-2f64).exp();
        assert!((p(&["residentbird(jo)", "bird(jo)"]) - (-1f64).exp() / z).abs() < 1e-12);
        assert!((p(&[]) - (-3f64).exp() / z).abs() < 1e-12);
        assert!((p(&["migratorybird(jo)", "bird(jo)"]) - (-2f64).exp() / z).abs() < 1e-12);
    }

    #[test]
    fn lone_hard_and_soft_facts() {
        let d = Reasoner::new().distribution(&gp("a."), WeightMode::Penalty).unwrap();
        assert_eq!(d.probability(&interp(&["a"])), Some(1.0));
        let d = Reasoner::new().distribution(&gp("2 a."), WeightMode::Penalty).unwrap();
        let expected = 1.0 / (1.0 + (-2f64).exp());
        assert!((d.probability(&interp(&["a"])).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.880797).abs() < 1e-6);
    }

    #[test]
    fn no_stable_models_is_an_error() {
        assert_eq!(Reasoner::new().distribution(&gp("a. :- a."), WeightMode::Penalty), Err(Error::NoStableModels));
    }

    #[test]
    fn map_examples() {
        let m = Reasoner::new().map_estimate(&gp(BIRD)).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].model, interp(&["residentbird(jo)", "bird(jo)"]));
        assert_eq!(scaled(m[0].penalty.soft, 1000), 1000);
        let m = Reasoner::new().map_estimate(&gp("1 a. 1 :- a.")).unwrap();
        assert_eq!(m.len(), 2);
        let m = Reasoner::new().map_estimate(&gp("{a}. {b}. :- a, b.")).unwrap();
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn marginal_examples() {
        let r = Reasoner::new();
        let m = r.marginal(&gp(SMOKE), &preds(&["smoke"])).unwrap();
        let v: Vec<f64> = m.values.values().copied().collect();
        let e = 1f64.exp();
        assert!((v[0] - 1.0).abs() < 1e-12);
        assert!((v[1] - (1.0 + e) / (2.0 + e)).abs() < 1e-12);
        assert!((v[2] - e / (2.0 + e)).abs() < 1e-12);
        let m = r.marginal(&gp("{a}. b :- a, not a."), &preds(&["b", "nope"])).unwrap();
        assert_eq!(m.values[&Atom::prop("b")], 0.0);
        assert_eq!(m.unknown, ["nope"]);
    }

    #[test]
    fn conditional_examples() {
        let r = Reasoner::new();
        let bird = parse_program(BIRD).unwrap();
        let ev = crate::parser::parse_evidence(":- not bird(jo).").unwrap();
        let m = r.conditional(&bird, &ev, &preds(&["residentbird"])).unwrap();
        let expected = (-1f64).exp() / ((-1f64).exp() + (-2f64).exp());
        assert!((m.values.values().next().unwrap() - expected).abs() < 1e-12);

        let ev = crate::parser::parse_evidence(":- bird(jo). :- not bird(jo).").unwrap();
        assert_eq!(r.conditional(&bird, &ev, &preds(&["bird"])), Err(Error::InconsistentEvidence));

        let entailed = crate::parser::parse_evidence(":- residentbird(jo), migratorybird(jo).").unwrap();
        let a = r.conditional(&bird, &entailed, &preds(&["bird"])).unwrap();
        let b = r.marginal(&gp(BIRD), &preds(&["bird"])).unwrap();
        assert!((a.values.values().next().unwrap() - b.values.values().next().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn hard_modes() {
        let all_hard = gp("bird(X) :- residentbird(X).\nbird(X) :- migratorybird(X).\n\
            :- residentbird(X), migratorybird(X).\nresidentbird(jo).\nmigratorybird(jo).");
        let strict = Reasoner::new();
        assert_eq!(strict.distribution(&all_hard, WeightMode::Penalty), Err(Error::NoStableModels));
        let mut relaxed = Reasoner::new();
        relaxed.set_hard_mode(HardMode::Relaxed);
        let d = relaxed.distribution(&all_hard, WeightMode::Penalty).unwrap();
        let positive: Vec<_> = d.entries.iter().filter(|e| e.probability > 0.0).collect();
        assert_eq!(positive.len(), 3);
        assert!(positive.iter().any(|e| e.model == interp(&["bird(jo)", "residentbird(jo)"])));
    }

    #[test]
    fn probability_formatting() {
        assert_eq!(format_probability(0.665240955775), "0.665240955775");
        assert_eq!(format_probability(0.09003057317038046), "0.0900305731704");
        assert_eq!(format_probability(0.24472847105479764), "0.244728471055");
        assert_eq!(format_probability(1.0), "1.0");
        assert_eq!(format_probability(0.0), "0.0");
        assert_eq!(format_probability(0.99999999999999), "1.0");
        assert_eq!(format_probability(0.7310585786300049), "0.73105857863");
    }

    #[test]
    fn scaling_rounds_half_to_even() {
        assert_eq!(scaled(1.0, 1000), 1000);
        assert_eq!(scaled(0.0025, 1000), 2);
        assert_eq!(scaled(0.0035, 1000), 4);
        assert_eq!(scaled(-2.0, 1000), -2000);
    }

    fn random_program() -> impl Strategy<Value = String> {
        let atom = prop::sample::select(vec!["a", "b", "c", "d"]);
        let lit = (atom.clone(), 0usize..3).prop_map(|(a, n)| format!("{}{a}", ["", "not ", "not not "][n]));
        let rule = (prop::option::of(-30i32..30), prop::option::of(atom), prop::collection::vec(lit, 0..3))
            .prop_filter_map("non-empty", |(w, h, b)| {
                if h.is_none() && b.is_empty() {
                    return None;
                }
                let w = w.map(|w| format!("{} ", f64::from(w) / 10.0)).unwrap_or_default();
                let b = if b.is_empty() { String::new() } else { format!(" :- {}", b.join(", ")) };
                Some(format!("{w}{}{b}.", h.unwrap_or("")))
            });
        prop::collection::vec(rule, 1..6).prop_map(|r| r.join("\n"))
    }

    proptest! {
        #[test]
        fn trivial_rule_changes_nothing(text in random_program(), w in -3.0f64..3.0) {
            let base = gp(&text);
            let extended = gp(&format!("{text}\n{w} a :- a."));
            let relaxed = Reasoner::new().with_hard_mode(HardMode::Relaxed);
            for mode in [WeightMode::Reward, WeightMode::Penalty] {
                let d1 = relaxed.distribution(&base, mode).unwrap();
                let d2 = relaxed.distribution(&extended, mode).unwrap();
                for e in &d1.entries {
                    let q = d2.probability(&e.model);
                    prop_assert!(q.is_some());
                    prop_assert!((q.unwrap() - e.probability).abs() <= 1e-12);
                    prop_assert_eq!(weight_penalty(&base, &e.model), weight_penalty(&extended, &e.model));
                }
                prop_assert_eq!(d1.entries.len(), d2.entries.len());
            }
        }

        #[test]
        fn scaling_soft_weights_keeps_the_map_set(text in random_program(), c in 0.1f64..10.0) {
            let scaled_text: String = text
                .lines()
                .map(|l| match l.split_once(' ') {
                    Some((w, rest)) if w.parse::<f64>().is_ok() => format!("{} {rest}", w.parse::<f64>().unwrap() * c),
                    _ => l.to_string(),
                })
                .collect::<Vec<_>>()
                .join("\n");
            let r = Reasoner::new().with_hard_mode(HardMode::Relaxed);
            let m1: BTreeSet<_> = r.map_estimate(&gp(&text)).unwrap().into_iter().map(|m| m.model).collect();
            let m2: BTreeSet<_> = r.map_estimate(&gp(&scaled_text)).unwrap().into_iter().map(|m| m.model).collect();
            prop_assert_eq!(m1, m2);
        }

        #[test]
        fn empty_evidence_equals_marginal(text in random_program()) {
            let program = parse_program(&text).unwrap();
            let r = Reasoner::new().with_hard_mode(HardMode::Relaxed);
            let q = preds(&["a", "b", "c", "d"]);
            let m = r.marginal(&ground(&program).unwrap(), &q).unwrap();
            let c = r.conditional(&program, &Program::default(), &q).unwrap();
            prop_assert_eq!(m, c);
        }

        #[test]
        fn probabilities_sum_to_one(text in random_program(), strict in any::<bool>()) {
            let mode = if strict { HardMode::Strict } else { HardMode::Relaxed };
            let r = Reasoner::new().with_hard_mode(mode);
            if let Ok(d) = r.distribution(&gp(&text), WeightMode::Penalty) {
                prop_assert!((d.total() - 1.0).abs() <= 1e-9);
            }
        }
    }
}
