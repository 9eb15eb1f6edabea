//! Compilation into plain ASP with weak constraints, plus an evaluator for the result.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::engine::{Engine, EngineError, HardMode};
use crate::ground::{ground, ground_with, GroundError, GroundProgram, GroundRule, DEFAULT_MAX_GROUND_RULES};
use crate::inference::scaled;
use crate::model::{desugar_choice, Atom, Interpretation, Literal, Negation, Program, Rule, Term, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    Reward,
    Penalty,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum AspError {
    #[error("scale must be positive")]
    ZeroScale,
    #[error("rule {index} is not ground; the reward translation needs a ground program")]
    NonGround { index: usize },
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// `:~ body. [weight@level, terms]`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeakConstraint {
    pub body: Vec<Literal>,
    pub weight: i64,
    pub level: u32,
    pub terms: Vec<Term>,
}

impl fmt::Display for WeakConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.body.iter().map(Literal::to_string).collect();
        write!(f, ":~ {}. [{}@{}", body.join(", "), self.weight, self.level)?;
        for t in &self.terms {
            write!(f, ",{t}")?;
        }
        f.write_str("]")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TranslatedProgram {
    pub flavor: Flavor,
    pub scale: u32,
    /// Unweighted rules; every rule is hard.
    pub rules: Program,
    pub weak: Vec<WeakConstraint>,
    /// Constants of the source program; the translation is grounded over these.
    pub universe: BTreeSet<Term>,
}

/// `sat(i,"w",c...)` / `unsat(i,"w",c...)`; the weight is printed with six decimals.
pub fn weight_atom(predicate: &str, index: usize, weight: Weight, tuple: Vec<Term>) -> Atom {
    let w = match weight {
        Weight::Soft(w) => format!("{w:.6}"),
        Weight::Hard => "alpha".to_string(),
    };
    let mut args = vec![Term::Int(index as i64), Term::Str(w)];
    args.extend(tuple);
    Atom::new(predicate, args)
}

fn is_weight_atom(a: &Atom) -> bool {
    (a.predicate == "sat" || a.predicate == "unsat")
        && a.args.len() >= 2
        && matches!(a.args[0], Term::Int(_))
        && matches!(a.args[1], Term::Str(_))
}

/// Drops the sat/unsat atoms added by [`phi_extend`].
pub fn phi_inverse(i: &Interpretation) -> Interpretation {
    i.restrict(|a| !is_weight_atom(a))
}

pub fn translate_penalty(program: &Program, scale: u32, translate_hard: bool) -> Result<TranslatedProgram, AspError> {
    if scale == 0 {
        return Err(AspError::ZeroScale);
    }
    for r in &program.rules {
        if let Some(variable) = crate::ground::unsafe_variable(r) {
            return Err(GroundError::Unsafe { index: r.index, variable }.into());
        }
    }
    let mut rules = Vec::new();
    let mut weak = Vec::new();
    for source in &program.rules {
        if source.weight.is_hard() && !translate_hard {
            rules.push(source.clone());
            continue;
        }
        let r = desugar_choice(source);
        let vars: Vec<Term> = r.variables().into_iter().map(Term::Var).collect();
        let unsat = weight_atom("unsat", r.index, r.weight, vars.clone());

        let mut violated = r.body.clone();
        violated.extend(r.head.iter().cloned().map(Literal::not));
        rules.push(Rule { neq: r.neq.clone(), ..Rule::hard(vec![unsat.clone()], violated) });

        let mut guarded = r.body.clone();
        guarded.push(Literal::not(unsat.clone()));
        rules.push(Rule { neq: r.neq.clone(), ..Rule::hard(r.head.clone(), guarded) });

        let (weight, level) = match r.weight {
            Weight::Soft(w) => (scaled(w, scale), 0),
            Weight::Hard => (1, 1),
        };
        let mut terms = vec![Term::Int(r.index as i64)];
        terms.extend(vars);
        weak.push(WeakConstraint { body: vec![Literal::pos(unsat)], weight, level, terms });
    }
    Ok(TranslatedProgram { flavor: Flavor::Penalty, scale, rules: Program::new(rules), weak, universe: program.universe() })
}

/// Reward translation of a ground program.
pub fn translate_reward(program: &Program, scale: u32) -> Result<TranslatedProgram, AspError> {
    if let Some(r) = program.rules.iter().find(|r| !r.is_ground()) {
        return Err(AspError::NonGround { index: r.index });
    }
    translate_reward_ground(&ground(program)?, scale)
}

/// Reward translation of an already grounded program; sat atoms carry each instance's constants.
pub fn translate_reward_ground(gp: &GroundProgram, scale: u32) -> Result<TranslatedProgram, AspError> {
    if scale == 0 {
        return Err(AspError::ZeroScale);
    }
    let mut rules = Vec::new();
    let mut weak = Vec::new();
    for r in gp.rules() {
        let sat = weight_atom("sat", r.origin, r.weight, r.tuple.clone());
        let head: Vec<Atom> = r.head.iter().map(|&h| gp.atom(h).clone()).collect();
        let body: Vec<Literal> =
            r.body.iter().map(|l| Literal { atom: gp.atom(l.atom).clone(), negation: l.negation }).collect();

        for h in &head {
            rules.push(Rule::hard(vec![sat.clone()], vec![Literal::pos(h.clone())]));
        }
        // `sat :- not Body` splits into one rule per complemented literal; an empty body never fires.
        for l in &body {
            rules.push(Rule::hard(vec![sat.clone()], vec![Literal { atom: l.atom.clone(), negation: l.negation.complement() }]));
        }
        let mut guarded = body.clone();
        guarded.push(Literal::not_not(sat.clone()));
        rules.push(Rule::hard(head, guarded));

        let (weight, level) = match r.weight {
            Weight::Soft(w) => (-scaled(w, scale), 0),
            Weight::Hard => (-i64::from(scale), 1),
        };
        let mut terms = vec![Term::Int(r.origin as i64)];
        terms.extend(r.tuple.iter().cloned());
        weak.push(WeakConstraint { body: vec![Literal::pos(sat)], weight, level, terms });
    }
    Ok(TranslatedProgram {
        flavor: Flavor::Reward,
        scale,
        rules: Program::new(rules),
        weak,
        universe: gp.universe().clone(),
    })
}

fn rule_satisfied(gp: &GroundProgram, r: &GroundRule, i: &Interpretation) -> bool {
    let holds = |id: usize| i.contains(gp.atom(id));
    let body = r.body.iter().all(|l| match l.negation {
        Negation::Pos | Negation::NotNot => holds(l.atom),
        Negation::Not => !holds(l.atom),
    });
    !body || r.head.iter().any(|&h| holds(h))
}

/// Adds unsat atoms for violated ground rules (penalty) or sat atoms for satisfied ones (reward).
pub fn phi_extend(gp: &GroundProgram, i: &Interpretation, flavor: Flavor) -> Interpretation {
    let mut out = i.clone();
    for r in gp.rules() {
        let satisfied = rule_satisfied(gp, r, i);
        match flavor {
            Flavor::Penalty if !satisfied => {
                out.insert(weight_atom("unsat", r.origin, r.weight, r.tuple.clone()));
            }
            Flavor::Reward if satisfied => {
                out.insert(weight_atom("sat", r.origin, r.weight, r.tuple.clone()));
            }
            _ => {}
        }
    }
    out
}

/// Penalty-translation cost of `i`: level 1 counts violated hard rules, level 0 sums scaled soft weights.
pub fn penalty_levels(gp: &GroundProgram, i: &Interpretation, scale: u32) -> BTreeMap<u32, i64> {
    let mut out = BTreeMap::from([(0, 0), (1, 0)]);
    for r in gp.rules().iter().filter(|r| !rule_satisfied(gp, r, i)) {
        match r.weight {
            Weight::Soft(w) => *out.get_mut(&0).unwrap() += scaled(w, scale),
            Weight::Hard => *out.get_mut(&1).unwrap() += 1,
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundWeak {
    pub body: Vec<Literal>,
    pub weight: i64,
    pub level: u32,
    pub terms: Vec<Term>,
}

/// A translation grounded over its source universe.
#[derive(Clone, Debug)]
pub struct GroundTranslation {
    pub program: GroundProgram,
    pub weak: Vec<GroundWeak>,
}

impl GroundTranslation {
    /// Penalty per level; each distinct `[w@l, terms]` tuple counts once.
    pub fn penalties(&self, i: &Interpretation) -> BTreeMap<u32, i64> {
        let mut seen = BTreeSet::new();
        let mut out: BTreeMap<u32, i64> = self.weak.iter().map(|w| (w.level, 0)).collect();
        for w in &self.weak {
            let fires = w.body.iter().all(|l| match l.negation {
                Negation::Pos | Negation::NotNot => i.contains(&l.atom),
                Negation::Not => !i.contains(&l.atom),
            });
            if fires && seen.insert((w.weight, w.level, w.terms.clone())) {
                *out.entry(w.level).or_insert(0) += w.weight;
            }
        }
        out
    }
}

pub fn ground_translation(t: &TranslatedProgram) -> Result<GroundTranslation, AspError> {
    let program = ground_with(&t.rules, &t.universe, DEFAULT_MAX_GROUND_RULES)?;
    let mut weak = Vec::new();
    for w in &t.weak {
        let carrier = Program::new(vec![Rule::hard(Vec::new(), w.body.clone())]);
        let vars = carrier.rules[0].variables();
        let g = ground_with(&carrier, &t.universe, DEFAULT_MAX_GROUND_RULES)?;
        for inst in g.rules() {
            let value = |term: &Term| match term {
                Term::Var(v) => inst.tuple[vars.iter().position(|x| x == v).expect("weak terms are bound by the body")].clone(),
                c => c.clone(),
            };
            weak.push(GroundWeak {
                body: inst.body.iter().map(|l| Literal { atom: g.atom(l.atom).clone(), negation: l.negation }).collect(),
                weight: w.weight,
                level: w.level,
                terms: w.terms.iter().map(value).collect(),
            });
        }
    }
    Ok(GroundTranslation { program, weak })
}

/// Sum of weights of the level-`level` weak constraints whose body `i` satisfies.
pub fn wc_penalty(t: &TranslatedProgram, i: &Interpretation, level: u32) -> Result<i64, AspError> {
    Ok(ground_translation(t)?.penalties(i).get(&level).copied().unwrap_or(0))
}

/// Whether penalty vector `a` dominates `b`: lower at the highest level where they differ.
pub fn dominates(a: &BTreeMap<u32, i64>, b: &BTreeMap<u32, i64>) -> bool {
    let levels: BTreeSet<u32> = a.keys().chain(b.keys()).copied().collect();
    for l in levels.into_iter().rev() {
        let (x, y) = (a.get(&l).copied().unwrap_or(0), b.get(&l).copied().unwrap_or(0));
        if x != y {
            return x < y;
        }
    }
    false
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalModel {
    pub model: Interpretation,
    pub penalties: BTreeMap<u32, i64>,
}

/// Stable models of the translation that no other stable model dominates.
pub fn optimal_models(t: &TranslatedProgram, cap: usize) -> Result<Vec<OptimalModel>, AspError> {
    let g = ground_translation(t)?;
    let models = Engine { cap, hard_mode: HardMode::Strict }.enumerate(&g.program)?;
    let scored: Vec<(Interpretation, BTreeMap<u32, i64>)> =
        models.into_iter().map(|m| {
            let p = g.penalties(&m);
            (m, p)
        }).collect();
    Ok(scored
        .iter()
        .filter(|(_, p)| !scored.iter().any(|(_, q)| dominates(q, p)))
        .map(|(m, p)| OptimalModel { model: m.clone(), penalties: p.clone() })
        .collect())
}

/// Solver-dialect text: rules, then weak constraints.
pub fn emit_asp_text(t: &TranslatedProgram) -> String {
    let mut out = String::new();
    for r in &t.rules.rules {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    for w in &t.weak {
        out.push_str(&w.to_string());
        out.push('\n');
    }
    out
}
