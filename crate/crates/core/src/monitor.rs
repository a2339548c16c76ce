//! Runtime checks over configurations: disentanglement, safety, and the
//! cheaper per-acquisition entanglement detector.

use serde::Serialize;

use crate::ast::{Block, Expr, ExprKind, Location, Value};
use crate::ast::{focus_ref, FocusRef};
use crate::runtime::{classify, show_path, Configuration, Enabled, Fault, Path, TaskTree, Timestamp};

/// A root held by `task` that was not allocated by a predecessor of it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Witness {
    #[serde(serialize_with = "ser_path")]
    pub path: Path,
    pub loc: Location,
    pub allocated_by: Timestamp,
    pub task: Timestamp,
    pub leaves: Vec<Timestamp>,
}

fn ser_path<S: serde::Serializer>(p: &Path, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&show_path(p))
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "at {}: task {} holds {} allocated by {}",
            show_path(&self.path),
            self.task,
            self.loc,
            self.allocated_by
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Classification {
    Final,
    Reducible,
    OobStuck,
    HardStuck,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub disentangled: bool,
    pub safe: bool,
    pub classification: Classification,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeMismatch(pub Path);

impl std::fmt::Display for ShapeMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "task tree and expression disagree at {}", show_path(&self.0))
    }
}

impl std::error::Error for ShapeMismatch {}

/// Scans the whole configuration. Returns every violating root.
pub fn disentangled(cfg: &Configuration) -> Result<Vec<Witness>, ShapeMismatch> {
    let leaves = cfg.tree.leaves();
    let mut out = Vec::new();
    let mut path = Vec::new();
    scan(cfg, &cfg.tree, &cfg.expr, &mut path, &leaves, &mut out)?;
    out.sort();
    out.dedup();
    Ok(out)
}

fn scan(
    cfg: &Configuration,
    tree: &TaskTree,
    e: &Expr,
    path: &mut Path,
    all_leaves: &[Timestamp],
    out: &mut Vec<Witness>,
) -> Result<(), ShapeMismatch> {
    let check = |l: Location, t: Timestamp, path: &Path, out: &mut Vec<Witness>| {
        let a = cfg.stamp(l).expect("location outside the allocation map");
        if !cfg.graph.precedes(a, t) {
            out.push(Witness {
                path: path.clone(),
                loc: l,
                allocated_by: a,
                task: t,
                leaves: all_leaves.to_vec(),
            });
        }
    };
    match tree {
        TaskTree::Leaf(t) => {
            e.for_each_loc(&mut |l| check(l, *t, path, out));
            Ok(())
        }
        TaskTree::Node(_, lt, rt) => {
            let FocusRef::ParPair(p) = focus_ref(e) else {
                return Err(ShapeMismatch(path.clone()));
            };
            let ExprKind::ActivePar(a, b) = &p.kind else { unreachable!() };
            let below = tree.leaves();
            e.for_each_loc_outside_par(&mut |l| {
                for t in &below {
                    check(l, *t, path, out);
                }
            });
            path.push(crate::ast::Side::Left);
            scan(cfg, lt, a, path, all_leaves, out)?;
            path.pop();
            path.push(crate::ast::Side::Right);
            scan(cfg, rt, b, path, all_leaves, out)?;
            path.pop();
            Ok(())
        }
    }
}

/// Whether the redex faces an out-of-bounds operation.
pub fn oob(store: &[Block], redex: &Expr) -> bool {
    matches!(classify(store, redex), Err(Fault::Oob))
}

pub fn classification(cfg: &Configuration) -> Classification {
    classify_enabled(cfg, &cfg.enabled())
}

/// Same as [`classification`] when the enabled set is already at hand.
pub fn classify_enabled(cfg: &Configuration, en: &Enabled) -> Classification {
    if cfg.is_final() {
        return Classification::Final;
    }
    if !en.stuck.is_empty() {
        Classification::HardStuck
    } else if !en.steps.is_empty() {
        Classification::Reducible
    } else if !en.oob.is_empty() {
        Classification::OobStuck
    } else {
        Classification::HardStuck
    }
}

/// The full verdict: disentanglement plus safety.
pub fn safe(cfg: &Configuration) -> Verdict {
    verdict_with(cfg, &cfg.enabled())
}

pub fn verdict_with(cfg: &Configuration, en: &Enabled) -> Verdict {
    let classification = classify_enabled(cfg, en);
    let (disentangled, witnesses) = match disentangled(cfg) {
        Ok(w) => (w.is_empty(), w),
        Err(_) => (false, Vec::new()),
    };
    Verdict {
        disentangled,
        safe: classification != Classification::HardStuck,
        classification,
        witnesses,
    }
}

/// The check performed when task `t` is about to acquire `v`.
pub fn detect_acquisition(cfg: &Configuration, t: Timestamp, v: &Value) -> bool {
    let mut ok = true;
    v.for_each_loc(&mut |l| ok &= acquisition_ok(cfg, t, l));
    ok
}

pub fn acquisition_ok(cfg: &Configuration, t: Timestamp, l: Location) -> bool {
    cfg.stamp(l).is_some_and(|a| cfg.graph.precedes(a, t))
}
