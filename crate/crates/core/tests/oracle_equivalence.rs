mod common;

use common::{check_equivalence, instance, sandwich, w_chain};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solvers_agree_with_oracle(seed in 0u64..10_000) {
        let inst = instance(seed);
        prop_assert!(check_equivalence(&inst).is_ok(), "{:?}", check_equivalence(&inst));
    }

    #[test]
    fn error_bounds_sandwich_the_true_error(seed in 0u64..10_000) {
        let (checked, bad) = sandwich(&instance(seed), 50, seed).unwrap();
        prop_assert_eq!(checked, 100);
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn splitting_condition_implies_nonsingular_vertices(seed in 0u64..10_000) {
        prop_assert!(w_chain(&instance(seed)).is_ok());
    }
}

#[test]
fn instances_cover_all_shapes() {
    let shapes: std::collections::BTreeSet<(usize, bool)> =
        (0..40).map(|s| instance(s)).map(|i| (i.problem.m(), i.two_block.is_some())).collect();
    for shape in [(1, false), (2, false), (3, false), (2, true)] {
        assert!(shapes.contains(&shape), "{shape:?} missing from {shapes:?}");
    }
}
