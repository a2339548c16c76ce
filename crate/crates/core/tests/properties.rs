//! Randomized laws for the judgments and the runtime.

mod common;

use common::gen::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(cases())]

    #[test]
    fn logical_reachability_is_a_preorder(g in logical_graph(8), x in ts(), y in ts(), z in ts()) {
        logical_preorder(&g, &x, &y, &z)?;
    }

    #[test]
    fn runtime_precedence_is_bfs_reachability(cyclic in any::<bool>(), ops in prop::collection::vec(any::<u8>(), 0..40)) {
        runtime_precedence(cyclic, &ops)?;
    }

    #[test]
    fn graph_subsumption_is_transitive(
        g1 in logical_graph(8),
        pick2 in prop::collection::vec(any::<prop::sample::Index>(), 0..6),
        pick3 in prop::collection::vec(any::<prop::sample::Index>(), 0..6),
        extra in logical_graph(2),
    ) {
        subsumption_transitive(&g1, &pick2, &pick3, &extra)?;
    }

    #[test]
    fn beta_normalize_is_idempotent_and_keeps_kinds(t in star_type()) {
        beta_laws(&t)?;
    }

    #[test]
    fn subtiming_is_reflexive(t in star_type(), g in logical_graph(4), d in ts()) {
        subtime_reflexive(&t, &g, &d)?;
    }

    #[test]
    fn types_print_and_parse_back(t in star_type()) {
        type_round_trip(&t)?;
    }

    #[test]
    fn detector_agrees_with_scan(seed in any::<u64>(), which in 0..AGREEMENT_PROGRAMS.len()) {
        detector_agrees(seed, which)?;
    }
}
