mod common;

use common::{
    check_completion, check_embedding, check_extraction, hard_satisfiable, random_mln, random_program,
    random_tight_program, rng,
};
use lpmln::ground::GroundProgram;
use lpmln::mln::is_tight;
use lpmln::{ground, Program};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn shuffled(program: &GroundProgram, seed: u64) -> GroundProgram {
    let mut rules: Vec<String> = program.rules().iter().map(|r| program.rule_text(r)).collect();
    rules.shuffle(&mut rng(seed));
    ground(&lpmln::parse_program(&rules.join("\n")).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extraction_marginalizes_back(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mln = random_mln(&mut r);
        prop_assume!(hard_satisfiable(&mln));
        let checked = check_extraction(&mln, &mut r);
        prop_assert!(checked.is_ok(), "{}", checked.unwrap_err());
    }

    #[test]
    fn completion_matches_lpmln(seed in any::<u64>()) {
        let gp = random_tight_program(&mut rng(seed));
        let checked = check_completion(&gp);
        prop_assert!(checked.is_ok(), "{}", checked.unwrap_err());
    }

    #[test]
    fn tightness_ignores_rule_order(seed in any::<u64>(), order in any::<u64>()) {
        let program: Program = random_program(&mut rng(seed), false, true);
        let gp = ground(&program).unwrap();
        prop_assert_eq!(is_tight(&gp).unwrap(), is_tight(&shuffled(&gp, order)).unwrap());
    }

    #[test]
    fn embedding_matches_formula_semantics(seed in any::<u64>(), disjunctive in any::<bool>()) {
        let program = random_program(&mut rng(seed), disjunctive, false);
        let checked = check_embedding(&program);
        prop_assert!(checked.is_ok(), "{}", checked.unwrap_err());
    }
}
