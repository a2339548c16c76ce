//! Prints one pass/fail line per acceptance criterion and exits non-zero if
//! any fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::gen::*;
use common::*;
use dl2::ast::Expr;
use dl2::corpus::{self, Outcome as CorpusOutcome};
use dl2::explorer::{
    explore, fuzz, run, simulate_modes, ExploreOptions, ExploreReport, Outcome, Policy, RunOptions, ViolationKind,
};
use dl2::monitor::Classification;
use dl2::runtime::GraphMode;
use proptest::prelude::*;
use proptest::test_runner::TestRunner;

const MODES: [GraphMode; 2] = [GraphMode::Cyclic, GraphMode::Standard];

struct Verdict {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Verdict {
    Verdict { ok: true, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Verdict {
    Verdict { ok: false, detail: detail.into() }
}

fn criterion_1() -> Verdict {
    let names = ["build", "selectmap", "parfor", "add", "dedup", "par_prime", "closures"];
    for n in names {
        if let CorpusOutcome::Unmet(m) = corpus::check_entry(corpus::get(n).unwrap()) {
            return fail(format!("{n}: {m}"));
        }
    }
    pass(format!("{} programs at their stated types", names.len()))
}

fn criterion_2() -> Verdict {
    let cases = [
        ("entangled", "T-CAS"),
        ("neg_child_store", "T-Store"),
        ("neg_deep_array", "T-Subtiming"),
        ("neg_not_very_pure", "T-TAbs"),
    ];
    for (n, rule) in cases {
        let e = corpus::get(n).unwrap();
        if e.expect != corpus::Expect::Rejected(rule) {
            return fail(format!("{n} is not expected to fail with {rule}"));
        }
        if let CorpusOutcome::Unmet(m) = corpus::check_entry(e) {
            return fail(format!("{n}: {m}"));
        }
    }
    pass("4 programs rejected under the expected rules")
}

const TYPED: [&str; 9] = [
    "build", "selectmap", "parfor", "par_prime", "add", "dedup", "closures", "disentangled", "oob",
];

fn criterion_3() -> Verdict {
    let mut runs = 0;
    for n in TYPED {
        let p = program(n);
        for mode in MODES {
            let s = fuzz(&p, 1000, 0, &RunOptions::new(mode));
            runs += s.trials;
            if !s.clean() || s.hard_stuck > 0 || s.fuel_exhausted > 0 {
                return fail(format!("{n} in {mode} mode: {s:?}"));
            }
        }
    }
    pass(format!("{runs} runs, no violations, every verdict safe"))
}

/// Typed programs small enough to enumerate, with their step bounds.
fn exhaustive_set() -> Vec<(String, Expr, usize)> {
    let parfor = |k: u32| {
        format!(
            "let out = alloc({k}, 0) in parfor [d0, d0] (0, {k}, fun sq [d' | d0 < d'] (i: int) @d' : unit -> out.[i] <- i * i); out"
        )
    };
    let mut v = vec![
        ("build 1".to_string(), variant("build", "build [d0] (1, 0)"), 200),
        ("build 2".to_string(), variant("build", "build [d0] (2, 0)"), 200),
        (
            "selectmap over build 1".to_string(),
            variant("selectmap", "let t = build [d0] (1, 0) in let s = selectmap [d0, d0, d0, d0] (never, inc, t) in (s == t, s == t)"),
            200,
        ),
        ("dedup 2".to_string(), variant("dedup", &dedup_main(&[3, 3])), 400),
    ];
    for k in 2..=4 {
        v.push((format!("parfor {k}"), variant("parfor", &parfor(k)), 200));
    }
    for n in ["par_prime", "add", "closures", "oob"] {
        v.push((n.to_string(), program(n), 200));
    }
    v.push(("disentangled".to_string(), program("disentangled"), 400));
    v
}

fn explore_both(p: &Expr, bound: usize, mode: GraphMode) -> Result<ExploreReport, String> {
    let mut o = ExploreOptions::new(bound, mode);
    o.compare_modes = true;
    o.state_cap = 150_000;
    explore(p, &o).map_err(|e| e.to_string())
}

struct Exhaustive {
    reports: Vec<(String, ExploreReport)>,
    entangled: ExploreReport,
}

fn criterion_4(ex: &Result<Exhaustive, String>) -> Verdict {
    let ex = match ex {
        Ok(e) => e,
        Err(m) => return fail(m.clone()),
    };
    let mut total = 0;
    for (name, r) in &ex.reports {
        if !r.complete() {
            return fail(format!("{name}: {} schedules cut off by the step bound", r.truncated));
        }
        if !r.violations.is_empty() {
            return fail(format!("{name}: {:?}", r.violations[0]));
        }
        if r.states > 100_000 {
            return fail(format!("{name}: {} states", r.states));
        }
        total += r.states;
    }
    let en = &ex.entangled;
    if en.violations.is_empty() {
        return fail("no violation found in the entangled program");
    }
    let p = program("entangled");
    for v in &en.violations {
        let ViolationKind::Entangled(ws) = &v.kind else {
            return fail(format!("unsafe configuration in the entangled program: {v:?}"));
        };
        let r = run(&p, &Policy::Replay(v.schedule.clone()), &RunOptions::new(v.schedule.mode));
        match r.first_violation {
            Some((k, found)) if k as usize == v.schedule.choices.len() && &found == ws => {}
            other => return fail(format!("replay of {:?} gave {other:?}", v.schedule.choices)),
        }
    }
    pass(format!(
        "{} typed programs, {total} states, clean; entangled program: {} replayable violations",
        ex.reports.len(),
        en.violations.len()
    ))
}

fn criterion_5(ex: &Result<Exhaustive, String>) -> Verdict {
    let ex = match ex {
        Ok(e) => e,
        Err(m) => return fail(m.clone()),
    };
    for (name, r) in ex.reports.iter().chain([("entangled".to_string(), ex.entangled.clone())].iter()) {
        if let Some(d) = r.disagreements.first() {
            return fail(format!("{name}: {} after {} steps", d.what, d.schedule.choices.len()));
        }
    }
    // Every violation schedule, and seeded schedules of every program, replayed in both modes.
    let mut sims = 0;
    let p = program("entangled");
    for v in &ex.entangled.violations {
        let s = simulate_modes(&p, &v.schedule);
        sims += 1;
        if !s.agree {
            return fail(format!("entangled: {s:?}"));
        }
    }
    for (name, prog, _) in exhaustive_set() {
        for seed in 0..25 {
            let r = run(&prog, &Policy::Seeded(seed), &RunOptions::new(GraphMode::Cyclic).record(false));
            let s = simulate_modes(&prog, &r.schedule);
            sims += 1;
            if !s.agree {
                return fail(format!("{name} seed {seed}: {s:?}"));
            }
        }
    }
    pass(format!("lockstep exploration found no disagreement; {sims} replayed schedules agree"))
}

fn criterion_6() -> Verdict {
    let e = corpus::get("oob").unwrap();
    if corpus::check_entry(e) != CorpusOutcome::Met {
        return fail("oob program does not type-check");
    }
    let p = program("oob");
    for mode in MODES {
        for seed in 0..10 {
            let r = run(&p, &Policy::Seeded(seed), &RunOptions::new(mode));
            if r.outcome != Outcome::OobStuck {
                return fail(format!("{mode}: {}", r.outcome));
            }
            if !r.verdicts.iter().all(|v| v.safe && v.disentangled) {
                return fail(format!("{mode}: unsafe verdict on the way"));
            }
            if r.verdicts.last().map(|v| v.classification) != Some(Classification::OobStuck) {
                return fail("last verdict is not out-of-bounds stuck");
            }
        }
    }
    pass("type-checks, halts out-of-bounds stuck, every verdict safe")
}

fn final_value(r: &dl2::explorer::RunReport) -> Option<&dl2::ast::Value> {
    match &r.outcome {
        Outcome::Final(v) => Some(v),
        _ => None,
    }
}

fn criterion_7() -> Verdict {
    for n in 0..=3u32 {
        let p = variant("build", &format!("build [d0] ({n}, 10)"));
        let oracle: Vec<i64> = (10..10 + (1i64 << n)).collect();
        for mode in MODES {
            let r = run(&p, &Policy::Seeded(n as u64), &RunOptions::new(mode));
            let Some(v) = final_value(&r) else { return fail(format!("build {n}: {}", r.outcome)) };
            if flatten_tree(&r.config, v) != oracle {
                return fail(format!("build {n} flattens to {:?}", flatten_tree(&r.config, v)));
            }
        }
    }
    let input = [3, 1, 3, 5, 1, 7, 5, 3];
    let oracle: BTreeSet<i64> = input.iter().copied().collect();
    let p = program("dedup");
    for seed in 0..100 {
        let r = run(&p, &Policy::Seeded(seed), &RunOptions::new(GraphMode::Cyclic).record(false));
        let Some(v) = final_value(&r) else { return fail(format!("dedup seed {seed}: {}", r.outcome)) };
        let got: BTreeSet<i64> = int_array(&r.config, v).into_iter().collect();
        if got != oracle {
            return fail(format!("dedup seed {seed}: {got:?}"));
        }
    }
    let p = program("selectmap");
    for seed in 0..10 {
        let r = run(&p, &Policy::Seeded(seed), &RunOptions::new(GraphMode::Cyclic));
        let Some(v) = final_value(&r) else { return fail(format!("selectmap: {}", r.outcome)) };
        if bool_pair(&r.config, v) != (true, false) {
            return fail(format!("selectmap returned {:?}", bool_pair(&r.config, v)));
        }
    }
    pass("build n<=3 ranges, dedup sets over 100 seeds, selectmap sharing")
}

fn law<S: Strategy>(name: &str, s: S, f: impl Fn(S::Value) -> Law) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let config = ProptestConfig { failure_persistence: None, ..cases() };
    TestRunner::new(config).run(&s, f).map_err(|e| format!("{name}: {e}"))
}

fn criterion_8() -> Verdict {
    let idx = || prop::collection::vec(any::<prop::sample::Index>(), 0..6);
    let results = [
        law("reachability preorder", (logical_graph(8), ts(), ts(), ts()), |(g, x, y, z)| {
            logical_preorder(&g, &x, &y, &z)
        }),
        law(
            "runtime precedence",
            (any::<bool>(), prop::collection::vec(any::<u8>(), 0..40)),
            |(c, ops)| runtime_precedence(c, &ops),
        ),
        law(
            "subsumption transitivity",
            (logical_graph(8), idx(), idx(), logical_graph(2)),
            |(g1, p2, p3, x)| subsumption_transitive(&g1, &p2, &p3, &x),
        ),
        law("beta normalization", star_type(), |t| beta_laws(&t)),
        law("subtime reflexivity", (star_type(), logical_graph(4), ts()), |(t, g, d)| {
            subtime_reflexive(&t, &g, &d)
        }),
        law("type round trip", star_type(), |t| type_round_trip(&t)),
        law("detector/scan agreement", (any::<u64>(), 0..AGREEMENT_PROGRAMS.len()), |(s, w)| {
            detector_agrees(s, w)
        }),
    ];
    if let Some(Err(e)) = results.iter().find(|r| r.is_err()) {
        return fail(e.clone());
    }
    pass(format!("{} laws x {} cases", results.len(), cases().cases))
}

fn main() {
    let mut all = true;
    let mut report = |n: u32, limit: Option<Duration>, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = f();
        let took = t.elapsed();
        let in_time = limit.is_none_or(|l| took <= l);
        let ok = v.ok && in_time;
        all &= ok;
        let limit = limit.map_or(String::new(), |l| format!(" / limit {:.0}s", l.as_secs_f64()));
        let late = if in_time { "" } else { " (over the time limit)" };
        println!(
            "criterion {n}: {}  {}{late}  [{:.2}s{limit}]",
            if ok { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64()
        );
    };
    report(1, Some(Duration::from_secs(5)), &mut criterion_1);
    report(2, Some(Duration::from_secs(1)), &mut criterion_2);
    report(3, Some(Duration::from_secs(60)), &mut criterion_3);
    let mut ex = Err("not run".to_string());
    report(4, Some(Duration::from_secs(120)), &mut || {
        ex = (|| {
            let mut reports = Vec::new();
            for (name, p, bound) in exhaustive_set() {
                reports.push((name, explore_both(&p, bound, GraphMode::Cyclic)?));
            }
            let entangled = explore_both(&program("entangled"), 400, GraphMode::Cyclic)?;
            Ok(Exhaustive { reports, entangled })
        })();
        criterion_4(&ex)
    });
    report(5, None, &mut || criterion_5(&ex));
    report(6, None, &mut criterion_6);
    report(7, None, &mut criterion_7);
    report(8, None, &mut criterion_8);
    if !all {
        std::process::exit(1);
    }
}
