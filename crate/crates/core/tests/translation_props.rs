mod common;

use common::{check_reward_equals_penalty, check_translations, random_program, rng};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reward_and_penalty_weights_agree(seed in any::<u64>(), disjunctive in any::<bool>()) {
        let program = random_program(&mut rng(seed), disjunctive, true);
        let checked = check_reward_equals_penalty(&program);
        prop_assert!(checked.is_ok(), "{}\n{program}", checked.unwrap_err());
    }

    #[test]
    fn translations_are_faithful(seed in any::<u64>(), disjunctive in any::<bool>()) {
        let program = random_program(&mut rng(seed), disjunctive, true);
        let checked = check_translations(&program);
        prop_assert!(checked.is_ok(), "{}\n{program}", checked.unwrap_err());
    }
}
