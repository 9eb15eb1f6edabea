//! Seeded generators and brute-force oracles shared by the integration suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use lpmln::asp::{
    ground_translation, optimal_models, phi_extend, translate_penalty, translate_reward_ground, Flavor,
};
use lpmln::engine::{Engine, DEFAULT_ATOM_CAP};
use lpmln::frontends::{BayesNet, BayesNode};
use lpmln::ground::GroundProgram;
use lpmln::inference::{weight_penalty, weight_reward, WeightMode};
use lpmln::mln::{
    complete, extract_subformula, from_rules, is_tight, mln_distribution, tseytin, Formula, MlnFormula, MlnProgram,
    Role,
};
use lpmln::{ground, parse_program, Atom, Error, HardMode, Interpretation, Program, Reasoner, Weight};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const SOFT: [f64; 8] = [-1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0, 2.5];

fn weight_text(rng: &mut ChaCha8Rng, hard_ratio: f64) -> String {
    if rng.gen_bool(hard_ratio) {
        String::new()
    } else {
        format!("{} ", SOFT.choose(rng).unwrap())
    }
}

fn literal_text(rng: &mut ChaCha8Rng, atom: String) -> String {
    match rng.gen_range(0..10) {
        0..=5 => atom,
        6..=8 => format!("not {atom}"),
        _ => format!("not not {atom}"),
    }
}

/// A safe program over `p/1, q/1, r/0, s/0` with the domain `d(a). d(b).`;
/// weights are multiples of 0.5 so that scaling by 1000 is exact.
pub fn random_program(rng: &mut ChaCha8Rng, disjunctive: bool, nonground: bool) -> Program {
    let mut rules = vec!["d(a).".to_string(), "d(b).".to_string()];
    for _ in 0..rng.gen_range(1..=4) {
        let variable = nonground && rng.gen_bool(0.5);
        let term = |rng: &mut ChaCha8Rng| -> String {
            if variable && rng.gen_bool(0.7) {
                "X".into()
            } else if rng.gen_bool(0.5) {
                "a".into()
            } else {
                "b".into()
            }
        };
        let atom = |rng: &mut ChaCha8Rng| -> String {
            match rng.gen_range(0..4) {
                0 => format!("p({})", term(rng)),
                1 => format!("q({})", term(rng)),
                2 => "r".into(),
                _ => "s".into(),
            }
        };
        let weight = weight_text(rng, 0.3);
        if rng.gen_bool(0.1) {
            let head = atom(rng);
            let guard = if head.contains('X') { " :- d(X)" } else { "" };
            rules.push(format!("{weight}{{{head}}}{guard}."));
            continue;
        }
        let heads = match rng.gen_range(0..10) {
            0 | 1 => 0,
            2 if disjunctive => 2,
            _ => 1,
        };
        let head: Vec<String> = (0..heads).map(|_| atom(rng)).collect();
        let mut body: Vec<String> = (0..rng.gen_range(0..=2)).map(|_| {
            let a = atom(rng);
            literal_text(rng, a)
        }).collect();
        if head.is_empty() && body.is_empty() {
            let a = atom(rng);
            body.push(a);
        }
        if head.iter().chain(&body).any(|t| t.contains('X')) {
            body.push("d(X)".into());
        }
        let head = head.join(" ; ");
        let text = match (head.is_empty(), body.is_empty()) {
            (_, true) => format!("{weight}{head}."),
            (true, false) => format!("{weight}:- {}.", body.join(", ")),
            (false, false) => format!("{weight}{head} :- {}.", body.join(", ")),
        };
        rules.push(text);
    }
    rules.shuffle(rng);
    parse_program(&rules.join("\n")).unwrap_or_else(|e| panic!("{e}\n{}", rules.join("\n")))
}

/// A ground normal program over `a..e` whose positive dependency graph is acyclic.
pub fn random_tight_program(rng: &mut ChaCha8Rng) -> GroundProgram {
    const ATOMS: [&str; 5] = ["a", "b", "c", "e", "f"];
    loop {
        let mut rules = Vec::new();
        for _ in 0..rng.gen_range(1..=5) {
            let weight = weight_text(rng, 0.3);
            let head = ATOMS.choose(rng).unwrap();
            if rng.gen_bool(0.15) {
                let guard = if rng.gen_bool(0.5) { format!(" :- {}", ATOMS.choose(rng).unwrap()) } else { String::new() };
                rules.push(format!("{weight}{{{head}}}{guard}."));
                continue;
            }
            let body: Vec<String> = (0..rng.gen_range(0..=2))
                .map(|_| match rng.gen_range(0..10) {
                    0..=5 => ATOMS.choose(rng).unwrap().to_string(),
                    6..=8 => format!("not {}", ATOMS.choose(rng).unwrap()),
                    _ => format!("not not {}", ATOMS.choose(rng).unwrap()),
                })
                .collect();
            let text = match (rng.gen_bool(0.15), body.is_empty()) {
                (_, true) => format!("{weight}{head}."),
                (true, false) => format!("{weight}:- {}.", body.join(", ")),
                (false, false) => format!("{weight}{head} :- {}.", body.join(", ")),
            };
            rules.push(text);
        }
        let gp = ground(&parse_program(&rules.join("\n")).unwrap()).unwrap();
        if is_tight(&gp).unwrap() {
            return gp;
        }
    }
}

pub fn random_formula(rng: &mut ChaCha8Rng, atoms: &[&str], depth: usize) -> Formula {
    let leaf = |rng: &mut ChaCha8Rng| Formula::atom(Atom::prop(*atoms.choose(rng).unwrap()));
    if depth == 0 || rng.gen_bool(0.3) {
        return leaf(rng);
    }
    let sub = |rng: &mut ChaCha8Rng| random_formula(rng, atoms, depth - 1);
    match rng.gen_range(0..5) {
        0 => Formula::not(sub(rng)),
        1 => Formula::And((0..rng.gen_range(2..=3)).map(|_| sub(rng)).collect()),
        2 => Formula::Or((0..rng.gen_range(2..=3)).map(|_| sub(rng)).collect()),
        3 => Formula::implies(sub(rng), sub(rng)),
        _ => Formula::iff(sub(rng), sub(rng)),
    }
}

/// A ground MLN over `a..d` with up to four formulas.
pub fn random_mln(rng: &mut ChaCha8Rng) -> MlnProgram {
    let atoms = ["a", "b", "c", "d"];
    let formulas = (0..rng.gen_range(1..=4))
        .map(|_| {
            let weight =
                if rng.gen_bool(0.2) { Weight::Hard } else { Weight::Soft(rng.gen_range(-20..=20) as f64 / 10.0) };
            MlnFormula { weight, formula: random_formula(rng, &atoms, 3), role: Role::Rule }
        })
        .collect();
    MlnProgram { formulas, atoms: atoms.iter().map(|a| Atom::prop(*a)).collect(), ..Default::default() }
}

pub fn hard_satisfiable(mln: &MlnProgram) -> bool {
    let atoms: Vec<Atom> = mln.signature().into_iter().collect();
    (0..1u64 << atoms.len()).any(|world| {
        let holds = |a: &Atom| atoms.iter().position(|x| x == a).is_some_and(|k| world >> k & 1 == 1);
        mln.formulas.iter().filter(|f| f.weight == Weight::Hard).all(|f| f.formula.eval(&holds))
    })
}

const CPT_VALUES: [f64; 5] = [0.0, 0.2, 0.5, 0.8, 1.0];

/// A Boolean network with at most four nodes and two parents per node.
pub fn random_bayes(rng: &mut ChaCha8Rng) -> BayesNet {
    let mut net = BayesNet::default();
    for k in 0..rng.gen_range(1..=4) {
        let mut earlier: Vec<String> = (0..k).map(|j| format!("v{j}")).collect();
        earlier.shuffle(rng);
        let take = rng.gen_range(0..=earlier.len().min(2));
        let mut parents: Vec<String> = earlier.into_iter().take(take).collect();
        parents.sort();
        let name = format!("v{k}");
        for row in lpmln::frontends::parent_rows(parents.len()) {
            net.cpt.insert((name.clone(), row), *CPT_VALUES.choose(rng).unwrap());
        }
        net.nodes.push(BayesNode { alias: format!("n{k}"), name, parents });
    }
    net
}

/// Joint probability of every assignment, keyed by the set of true nodes.
pub fn bayes_joint(net: &BayesNet) -> BTreeMap<Interpretation, f64> {
    let n = net.nodes.len();
    let mut out = BTreeMap::new();
    for world in 0..1usize << n {
        let value = |name: &str| {
            let k = net.nodes.iter().position(|x| x.name == name).unwrap();
            world >> k & 1 == 1
        };
        let mut p = 1.0;
        for node in &net.nodes {
            let row: Vec<bool> = node.parents.iter().map(|x| value(x)).collect();
            let t = net.cpt[&(node.name.clone(), row)];
            p *= if value(&node.name) { t } else { 1.0 - t };
        }
        let truth: Interpretation =
            net.nodes.iter().filter(|x| value(&x.name)).map(|x| Atom::prop(x.name.clone())).collect();
        out.insert(truth, p);
    }
    out
}

/// Absolute difference of two distributions over the union of their supports.
pub fn max_gap(a: &BTreeMap<Interpretation, f64>, b: &BTreeMap<Interpretation, f64>) -> f64 {
    let keys: BTreeSet<&Interpretation> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

/// Reward and penalty weighting give the same probability to every stable model, in both hard modes.
pub fn check_reward_equals_penalty(program: &Program) -> Result<(), String> {
    let gp = ground(program).map_err(|e| e.to_string())?;
    for mode in [HardMode::Relaxed, HardMode::Strict] {
        let reasoner = Reasoner::new().with_hard_mode(mode);
        match (reasoner.distribution(&gp, WeightMode::Reward), reasoner.distribution(&gp, WeightMode::Penalty)) {
            (Ok(r), Ok(p)) => {
                if r.entries.len() != p.entries.len() {
                    return Err(format!("{mode:?}: model counts differ"));
                }
                for e in &r.entries {
                    let q = p.probability(&e.model).ok_or("model missing under penalty")?;
                    if !close(e.probability, q) {
                        return Err(format!("{mode:?}: {} has {} vs {q}", e.model, e.probability));
                    }
                }
            }
            (Err(Error::NoStableModels), Err(Error::NoStableModels)) => {}
            (r, p) => return Err(format!("{mode:?}: {:?} vs {:?}", r.err(), p.err())),
        }
    }
    Ok(())
}

fn level(p: &BTreeMap<u32, i64>, l: u32) -> i64 {
    p.get(&l).copied().unwrap_or(0)
}

/// φ is a bijection onto the translation's stable models, weak-constraint costs reproduce the
/// weights, and optimal translated models are exactly the images of the MAP estimates.
pub fn check_translations(program: &Program) -> Result<(), String> {
    const SCALE: u32 = 1000;
    let gp = ground(program).map_err(|e| e.to_string())?;
    let sm = Engine::new(HardMode::Relaxed).enumerate(&gp).map_err(|e| e.to_string())?;
    let map: BTreeSet<Interpretation> = match Reasoner::new().with_hard_mode(HardMode::Relaxed).map_estimate(&gp) {
        Ok(ms) => ms.into_iter().map(|m| m.model).collect(),
        Err(Error::NoStableModels) => BTreeSet::new(),
        Err(e) => return Err(e.to_string()),
    };
    let strict = Engine::new(HardMode::Strict);

    let penalty = translate_penalty(program, SCALE, true).map_err(|e| e.to_string())?;
    let reward = translate_reward_ground(&gp, SCALE).map_err(|e| e.to_string())?;
    for (flavor, t) in [(Flavor::Penalty, &penalty), (Flavor::Reward, &reward)] {
        let g = ground_translation(t).map_err(|e| e.to_string())?;
        let translated: BTreeSet<Interpretation> =
            strict.enumerate(&g.program).map_err(|e| e.to_string())?.into_iter().collect();
        let image: BTreeSet<Interpretation> = sm.iter().map(|i| phi_extend(&gp, i, flavor)).collect();
        if image.len() != sm.len() {
            return Err(format!("{flavor:?}: φ is not injective"));
        }
        if image != translated {
            return Err(format!("{flavor:?}: φ(SM) has {} models, translation has {}", image.len(), translated.len()));
        }
        for i in &sm {
            let cost = g.penalties(&phi_extend(&gp, i, flavor));
            let (soft, hard) = (level(&cost, 0) as f64 / f64::from(SCALE), level(&cost, 1));
            let ok = match flavor {
                Flavor::Penalty => {
                    let w = weight_penalty(&gp, i).ok_or("member rejected by weight_penalty")?;
                    close(soft, w.soft) && hard == w.hard as i64
                }
                Flavor::Reward => {
                    let w = weight_reward(&gp, i).ok_or("member rejected by weight_reward")?;
                    close(-soft, w.soft) && -hard == w.hard as i64 * i64::from(SCALE)
                }
            };
            if !ok {
                return Err(format!("{flavor:?}: weight mismatch at {i}: {cost:?}"));
            }
        }
        let optimal: BTreeSet<Interpretation> =
            optimal_models(t, DEFAULT_ATOM_CAP).map_err(|e| e.to_string())?.into_iter().map(|o| o.model).collect();
        let expected: BTreeSet<Interpretation> = map.iter().map(|i| phi_extend(&gp, i, flavor)).collect();
        if optimal != expected {
            return Err(format!("{flavor:?}: optimal models differ from MAP images"));
        }
    }
    Ok(())
}

/// Extracting one subformula into an aux atom leaves the marginal distribution unchanged.
pub fn check_extraction(mln: &MlnProgram, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let k = rng.gen_range(0..mln.formulas.len());
    let subs = mln.formulas[k].formula.subformulas();
    let sub = (*subs.choose(rng).unwrap()).clone();
    let x = extract_subformula(mln, k, &sub);
    let aux = x.aux_atoms();
    let before = mln_distribution(mln, DEFAULT_ATOM_CAP).map_err(|e| e.to_string())?;
    let after = mln_distribution(&x, DEFAULT_ATOM_CAP).map_err(|e| e.to_string())?;
    let gap = max_gap(&before.marginalize(|_| true), &after.marginalize(|a| !aux.contains(a)));
    if gap > 1e-9 {
        return Err(format!("marginal gap {gap} after extracting {sub}"));
    }
    for e in after.entries.iter().filter(|e| e.probability > 0.0) {
        let a = aux.iter().next().unwrap();
        if e.model.contains(a) != sub.eval(&|x| e.model.contains(x)) {
            return Err(format!("{a} disagrees with {sub} in {}", e.model));
        }
    }
    Ok(())
}

/// `Ok(false)` when the program has no stable model satisfying its hard rules.
pub fn check_completion(gp: &GroundProgram) -> Result<bool, String> {
    let lp = match Reasoner::new().distribution(gp, WeightMode::Penalty) {
        Ok(d) => d,
        Err(Error::NoStableModels) => return Ok(false),
        Err(e) => return Err(e.to_string()),
    };
    let m = tseytin(&complete(gp).map_err(|e| e.to_string())?);
    let aux = m.aux_atoms();
    let md = mln_distribution(&m, DEFAULT_ATOM_CAP).map_err(|e| e.to_string())?;
    let gap = max_gap(&lp.marginalize(|_| true), &md.marginalize(|a| !aux.contains(a)));
    if gap > 1e-9 {
        return Err(format!("completion gap {gap}\n{gp}"));
    }
    Ok(true)
}

/// Choice rules for every atom make the program behave as its rules read as weighted formulas.
pub fn check_embedding(program: &Program) -> Result<(), String> {
    let gp = ground(program).map_err(|e| e.to_string())?;
    let embedded = ground(&lpmln::frontends::mln_embed(program, &BTreeSet::new())).map_err(|e| e.to_string())?;
    let lp = Reasoner::new()
        .with_hard_mode(HardMode::Relaxed)
        .distribution(&embedded, WeightMode::Penalty)
        .map_err(|e| e.to_string())?;
    let mln = from_rules(&gp, |_| false).map_err(|e| e.to_string())?;
    let md = mln_distribution(&mln, DEFAULT_ATOM_CAP).map_err(|e| e.to_string())?;
    let source: BTreeSet<Atom> = gp.atoms().iter().cloned().collect();
    let gap = max_gap(&lp.marginalize(|a| source.contains(a)), &md.marginalize(|a| source.contains(a)));
    if gap > 1e-9 {
        return Err(format!("embedding gap {gap}\n{program}"));
    }
    Ok(())
}

/// The compiled network's distribution over node atoms equals the product of CPT entries.
pub fn check_bayes(net: &BayesNet) -> Result<(), String> {
    let program = lpmln::frontends::bayes_to_lpmln(net).map_err(|e| e.to_string())?;
    let gp = ground(&program).map_err(|e| e.to_string())?;
    let d = Reasoner::new().distribution(&gp, WeightMode::Penalty).map_err(|e| e.to_string())?;
    let gap = max_gap(&d.marginalize(|a| a.predicate != "pf"), &bayes_joint(net));
    if gap > 1e-9 {
        return Err(format!("joint gap {gap}\n{program}"));
    }
    Ok(())
}
