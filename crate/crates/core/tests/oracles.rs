//! Program results against independent sequential computations.

mod common;

use std::collections::BTreeSet;

use common::*;
use dl2::explorer::{run, Outcome, Policy, RunOptions};
use dl2::runtime::GraphMode;
use proptest::prelude::*;

const MODES: [GraphMode; 2] = [GraphMode::Cyclic, GraphMode::Standard];

fn final_value(r: &dl2::explorer::RunReport) -> &dl2::ast::Value {
    match &r.outcome {
        Outcome::Final(v) => v,
        other => panic!("expected a final value, got {other}"),
    }
}

#[test]
fn build_flattens_to_a_range() {
    for n in 0..=3u32 {
        for x in [0i64, 5, -3] {
            let p = variant("build", &format!("build [d0] ({n}, {x})"));
            let expected: Vec<i64> = (x..x + (1 << n)).collect();
            for mode in MODES {
                for seed in 0..8 {
                    let r = run(&p, &Policy::Seeded(seed), &RunOptions::new(mode));
                    assert_eq!(flatten_tree(&r.config, final_value(&r)), expected, "n={n} x={x} {mode}");
                    assert!(r.all_safe && !r.entangled());
                }
            }
        }
    }
}

fn sequential_dedup(input: &[i64]) -> BTreeSet<i64> {
    input.iter().copied().collect()
}

#[test]
fn dedup_matches_sequential_oracle_across_seeds() {
    let p = program("dedup");
    let input = [3, 1, 3, 5, 1, 7, 5, 3];
    let expected = sequential_dedup(&input);
    for seed in 0..100 {
        let r = run(&p, &Policy::Seeded(seed), &RunOptions::new(GraphMode::Cyclic).record(false));
        let out = int_array(&r.config, final_value(&r));
        let set: BTreeSet<i64> = out.iter().copied().collect();
        assert_eq!(set, expected, "seed {seed}");
        assert_eq!(out.len(), expected.len(), "duplicates survived under seed {seed}: {out:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn dedup_of_random_inputs(input in prop::collection::vec(0i64..6, 1..=8), seed in any::<u64>()) {
        let p = variant("dedup", &dedup_main(&input));
        let r = run(&p, &Policy::Seeded(seed), &RunOptions::new(GraphMode::Standard).record(false));
        let out = int_array(&r.config, final_value(&r));
        let mut sorted = out.clone();
        sorted.sort();
        let expected: Vec<i64> = sequential_dedup(&input).into_iter().collect();
        prop_assert_eq!(sorted, expected);
    }
}

#[test]
fn selectmap_preserves_sharing() {
    let p = program("selectmap");
    for mode in MODES {
        for seed in 0..20 {
            let r = run(&p, &Policy::Seeded(seed), &RunOptions::new(mode));
            assert_eq!(bool_pair(&r.config, final_value(&r)), (true, false));
        }
    }
}

#[test]
fn selectmap_maps_selected_leaves() {
    let p = variant(
        "selectmap",
        "let t = build [d0] (2, 0) in selectmap [d0, d0, d0, d0] (odd, inc, t)",
    );
    let r = run(&p, &Policy::Seeded(4), &RunOptions::new(GraphMode::Cyclic));
    let oracle: Vec<i64> = (0..4).map(|x| if x % 2 == 1 { x + 100 } else { x }).collect();
    assert_eq!(flatten_tree(&r.config, final_value(&r)), oracle);
}

#[test]
fn parfor_squares_and_add_inserts() {
    let r = run(&program("parfor"), &Policy::Seeded(2), &RunOptions::new(GraphMode::Cyclic));
    assert_eq!(int_array(&r.config, final_value(&r)), (0..6).map(|i| i * i).collect::<Vec<_>>());
    let r = run(&program("add"), &Policy::Seeded(2), &RunOptions::new(GraphMode::Cyclic));
    let set = int_array(&r.config, final_value(&r));
    let present: BTreeSet<i64> = set.iter().copied().filter(|x| *x != -1).collect();
    assert_eq!(present, BTreeSet::from([3, 19]));
    assert_eq!(set.iter().filter(|x| **x == 3).count(), 1);
}

#[test]
fn small_programs_compute_their_values() {
    for (name, value) in [("closures", 42), ("par_prime", 3), ("disentangled", 5678)] {
        for mode in MODES {
            let r = run(&program(name), &Policy::Seeded(9), &RunOptions::new(mode));
            assert_eq!(int(final_value(&r)), value, "{name}");
        }
    }
}
