mod support;

use proptest::prelude::*;
use support::*;
use tepo::builtin::BETA_STAR_WORDS;

proptest! {
    #![proptest_config(ProptestConfig { cases: CASES, ..ProptestConfig::default() })]

    #[test]
    fn flip_is_an_involution((mi, _, scramble) in word_and_curve(1), e in any::<usize>()) {
        flip_involution(mi, &scramble, e)?;
    }

    #[test]
    fn operations_keep_triangle_inequalities((mi, word) in model_and_word(6)) {
        triangle_inequalities(mi, &word)?;
    }

    #[test]
    fn operation_then_inverse_is_identity((mi, word, scramble) in word_and_curve(5)) {
        inverse_cancels(mi, &word, &scramble)?;
    }

    #[test]
    fn twists_in_one_operation_commute((mi, op, scramble) in word_and_curve(1), i in any::<usize>(), j in any::<usize>()) {
        disjoint_commute(mi, op[0], &scramble, i, j)?;
    }

    #[test]
    fn symmetries_conjugate_operations((mi, word) in model_and_word(3), s in any::<usize>()) {
        symmetry_conjugation(mi, &word, s)?;
    }

    #[test]
    fn exact_and_float_backends_agree((mi, word) in model_and_word(4)) {
        backends_agree(mi, &word)?;
    }

    #[test]
    fn entropy_is_extensive_in_powers(mi in 0..BETA_STAR_WORDS.len(), power in 1usize..4, shift in 0usize..4) {
        extensive_in_powers(mi, power, shift)?;
    }

    #[test]
    fn entropy_ignores_the_starting_curve(mi in 0..BETA_STAR_WORDS.len(), scramble in prop::collection::vec(any::<usize>(), 0..4)) {
        initial_independence(mi, &scramble)?;
    }
}
