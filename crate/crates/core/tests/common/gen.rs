//! Generators and laws shared by the property suites and the acceptance run.

use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use dl2::checker::subtime;
use dl2::explorer::{run, MonitorMode, Policy, RunOptions};
use dl2::runtime::{CompGraph, EdgeKind, GraphMode, Timestamp};
use dl2::surface::{parse_type, print_type};
use dl2::symbol::Symbol;
use dl2::types::{
    alpha_eq, beta_normalize, graph_subsumes, kind_of, reachable, ArrowType, BaseType, BoxedType, Kind,
    LogicalGraph, Type, TypeEnv,
};

use super::program;

pub fn cases() -> ProptestConfig {
    ProptestConfig::with_cases(1000)
}

pub const TS: [&str; 4] = ["d0", "d1", "d2", "d3"];

pub fn ts() -> impl Strategy<Value = Symbol> {
    prop::sample::select(&TS[..]).prop_map(Symbol::new)
}

pub fn logical_graph(max: usize) -> impl Strategy<Value = LogicalGraph> {
    prop::collection::vec((ts(), ts()), 0..max).prop_map(LogicalGraph::from_edges)
}

/// Kind-⋆ types over the type variables `a`, `b` (kind ⋆) and `f` (kind ⋆1),
/// with timestamp redexes sprinkled in.
pub fn star_type() -> impl Strategy<Value = Type> {
    let leaf = prop_oneof![
        Just(Type::Base(BaseType::Int)),
        Just(Type::Base(BaseType::Bool)),
        Just(Type::Base(BaseType::Unit)),
        Just(Type::Var(Symbol::new("a"))),
        Just(Type::Var(Symbol::new("b"))),
        ts().prop_map(|d| Type::TsApp(Box::new(Type::Var(Symbol::new("f"))), d)),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        let boxed = prop_oneof![
            inner.clone().prop_map(BoxedType::Array),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| BoxedType::Product(x, y)),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| BoxedType::Sum(x, y)),
            (
                prop::collection::vec(inner.clone(), 0..3),
                inner.clone(),
                ts(),
                prop::bool::ANY,
                logical_graph(3)
            )
                .prop_map(|(args, ret, run, poly, constraints)| {
                    let ts_params = if poly { vec![Symbol::new("d3")] } else { Vec::new() };
                    BoxedType::Arrow(ArrowType {
                        ts_params,
                        constraints,
                        args,
                        run,
                        ret: Box::new(ret),
                    })
                }),
        ];
        prop_oneof![
            (boxed.clone(), ts()).prop_map(|(b, d)| Type::at(b, d)),
            (boxed, ts()).prop_map(|(b, d)| Type::Rec(Symbol::new("a"), Box::new(b), d)),
            (inner.clone(), ts(), ts()).prop_map(|(t, x, y)| Type::TsApp(Box::new(Type::TsLam(x, Box::new(t))), y)),
            inner.prop_map(|t| Type::Forall(Symbol::new("b"), Kind::STAR, Box::new(t))),
        ]
    })
}

pub fn env() -> TypeEnv {
    TypeEnv::with_tvars([
        (Symbol::new("a"), Kind::STAR),
        (Symbol::new("b"), Kind::STAR),
        (Symbol::new("f"), Kind::STAR1),
    ])
}

/// Plain breadth-first search over the recorded edges.
pub fn bfs_reaches(g: &CompGraph, from: Timestamp, to: Timestamp) -> bool {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(t) = queue.pop_front() {
        if t == to {
            return true;
        }
        for (a, b, _) in g.edges() {
            if *a == t && seen.insert(*b) {
                queue.push_back(*b);
            }
        }
    }
    false
}

enum Task {
    Leaf(Timestamp),
    Node(Timestamp, Box<Task>, Box<Task>),
}

/// Applies operation `k` to the tree: forks the k-th leaf when `fork`,
/// otherwise joins the k-th node whose children are both leaves.
fn apply(g: &mut CompGraph, task: &mut Task, fork: bool, k: &mut usize) -> bool {
    match task {
        Task::Leaf(t) if fork => {
            if *k > 0 {
                *k -= 1;
                return false;
            }
            let t = *t;
            let t1 = g.add_vertex();
            let t2 = g.add_vertex();
            g.add_edge(t, t1, EdgeKind::Fork);
            g.add_edge(t, t2, EdgeKind::Fork);
            *task = Task::Node(t, Box::new(Task::Leaf(t1)), Box::new(Task::Leaf(t2)));
            true
        }
        Task::Leaf(_) => false,
        Task::Node(t, l, r) => {
            if let (false, Task::Leaf(t1), Task::Leaf(t2)) = (fork, &**l, &**r) {
                if *k > 0 {
                    *k -= 1;
                    return false;
                }
                let resumed = match g.mode() {
                    GraphMode::Cyclic => *t,
                    GraphMode::Standard => g.add_vertex(),
                };
                g.add_edge(*t1, resumed, EdgeKind::Join);
                g.add_edge(*t2, resumed, EdgeKind::Join);
                *task = Task::Leaf(resumed);
                return true;
            }
            apply(g, l, fork, k) || apply(g, r, fork, k)
        }
    }
}

/// Builds a computation graph by random structured forks and joins.
pub fn random_graph(mode: GraphMode, ops: &[u8]) -> CompGraph {
    let mut g = CompGraph::new(mode);
    let mut task = Task::Leaf(g.add_vertex());
    for op in ops {
        let mut k = (*op / 2) as usize % 4;
        apply(&mut g, &mut task, op % 2 == 0, &mut k);
    }
    g
}

pub type Law = Result<(), TestCaseError>;

pub fn logical_preorder(g: &LogicalGraph, x: &Symbol, y: &Symbol, z: &Symbol) -> Law {
    prop_assert!(reachable(g, x, x));
    if reachable(g, x, y) && reachable(g, y, z) {
        prop_assert!(reachable(g, x, z));
    }
    Ok(())
}

pub fn runtime_precedence(cyclic: bool, ops: &[u8]) -> Law {
    let mode = if cyclic { GraphMode::Cyclic } else { GraphMode::Standard };
    let g = random_graph(mode, ops);
    let vs: Vec<Timestamp> = g.vertices().collect();
    for a in &vs {
        prop_assert!(g.precedes(*a, *a));
        for b in &vs {
            prop_assert_eq!(g.precedes(*a, *b), bfs_reaches(&g, *a, *b));
            for c in &vs {
                if g.precedes(*a, *b) && g.precedes(*b, *c) {
                    prop_assert!(g.precedes(*a, *c));
                }
            }
        }
    }
    Ok(())
}

fn reachable_pairs(g: &LogicalGraph) -> Vec<(Symbol, Symbol)> {
    let mut out = Vec::new();
    for x in TS {
        for y in TS {
            let (x, y) = (Symbol::new(x), Symbol::new(y));
            if reachable(g, &x, &y) {
                out.push((x, y));
            }
        }
    }
    out
}

/// `g2` and `g3` are drawn from the reachable pairs of `g1` and `g2`, so the
/// premises hold; `extra` is an arbitrary candidate middle graph.
pub fn subsumption_transitive(
    g1: &LogicalGraph,
    pick2: &[prop::sample::Index],
    pick3: &[prop::sample::Index],
    extra: &LogicalGraph,
) -> Law {
    let p1 = reachable_pairs(g1);
    let g2 = LogicalGraph::from_edges(pick2.iter().map(|i| i.get(&p1).clone()));
    let p2 = reachable_pairs(&g2);
    let g3 = LogicalGraph::from_edges(pick3.iter().map(|i| i.get(&p2).clone()));
    prop_assert!(graph_subsumes(g1, &g2));
    prop_assert!(graph_subsumes(&g2, &g3));
    prop_assert!(graph_subsumes(g1, &g3));
    if graph_subsumes(g1, extra) && graph_subsumes(extra, &g3) {
        prop_assert!(graph_subsumes(g1, &g3));
    }
    prop_assert!(graph_subsumes(g1, g1));
    Ok(())
}

pub fn beta_laws(t: &Type) -> Law {
    let n = beta_normalize(t);
    prop_assert!(alpha_eq(&beta_normalize(&n), &n));
    prop_assert_eq!(kind_of(&env(), t), Ok(Kind::STAR));
    prop_assert_eq!(kind_of(&env(), &n), Ok(Kind::STAR));
    let lam = Type::TsLam(Symbol::new("d1"), Box::new(t.clone()));
    prop_assert_eq!(kind_of(&env(), &beta_normalize(&lam)), Ok(Kind::STAR1));
    Ok(())
}

pub fn subtime_reflexive(t: &Type, g: &LogicalGraph, d: &Symbol) -> Law {
    let n = beta_normalize(t);
    prop_assert!(subtime(g, d, &n, &n), "{}", n);
    Ok(())
}

pub fn type_round_trip(t: &Type) -> Law {
    let n = beta_normalize(t);
    let text = print_type(&n);
    let back = parse_type(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
    prop_assert!(alpha_eq(&back, &n), "{} reparsed as {}", text, back);
    Ok(())
}

pub const AGREEMENT_PROGRAMS: [&str; 3] = ["entangled", "disentangled", "par_prime"];

/// Detection halts at step k exactly when k is the first step whose
/// configuration fails the scan.
pub fn detector_agrees(seed: u64, which: usize) -> Law {
    let p = program(AGREEMENT_PROGRAMS[which]);
    let opts = RunOptions::new(GraphMode::Cyclic);
    let scan = run(&p, &Policy::Seeded(seed), &opts);
    let detect = run(&p, &Policy::Seeded(seed), &opts.monitor(MonitorMode::Detect));
    let scan_at = scan.first_violation.as_ref().map(|(k, _)| *k);
    let detect_at = detect.first_violation.as_ref().map(|(k, _)| *k);
    prop_assert_eq!(scan_at, detect_at);
    if let Some(k) = detect_at {
        prop_assert_eq!(detect.steps, k);
        let locs = |r: &dl2::explorer::RunReport| -> BTreeSet<_> {
            r.first_violation.as_ref().unwrap().1.iter().map(|w| (w.loc, w.task)).collect()
        };
        prop_assert!(locs(&detect).is_subset(&locs(&scan)));
    } else {
        prop_assert_eq!(detect.outcome, scan.outcome);
    }
    Ok(())
}
