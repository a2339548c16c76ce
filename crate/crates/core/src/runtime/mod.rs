//! The instrumented fork-join semantics: head reduction, scheduling over a
//! task tree, and the computation graph recorded along the way.

mod graph;
mod head;

use std::fmt;

use serde::Serialize;

pub use graph::{CompGraph, EdgeKind, GraphMode, Timestamp};
pub use head::{classify, head_step, pure_prim_step, Fault, HeadInfo, RedexKind, MAX_ARRAY_LEN};

use crate::ast::{focus_mut, focus_ref, Focus, FocusRef};
use crate::ast::{Block, Expr, ExprKind, Location, Side, Value};

/// Mirrors the nesting of active parallel pairs in the expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TaskTree {
    Leaf(Timestamp),
    Node(Timestamp, Box<TaskTree>, Box<TaskTree>),
}

impl TaskTree {
    pub fn timestamp(&self) -> Timestamp {
        match self {
            TaskTree::Leaf(t) | TaskTree::Node(t, _, _) => *t,
        }
    }

    pub fn leaves(&self) -> Vec<Timestamp> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<Timestamp>) {
        match self {
            TaskTree::Leaf(t) => out.push(*t),
            TaskTree::Node(_, l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }

    pub fn at(&self, path: &[Side]) -> Option<&TaskTree> {
        match (self, path.split_first()) {
            (_, None) => Some(self),
            (TaskTree::Node(_, l, _), Some((Side::Left, rest))) => l.at(rest),
            (TaskTree::Node(_, _, r), Some((Side::Right, rest))) => r.at(rest),
            _ => None,
        }
    }
}

impl fmt::Display for TaskTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskTree::Leaf(t) => write!(f, "{t}"),
            TaskTree::Node(t, l, r) => write!(f, "{t}({l}, {r})"),
        }
    }
}

pub type Path = Vec<Side>;

pub fn show_path(p: &[Side]) -> String {
    if p.is_empty() {
        return "root".to_string();
    }
    p.iter().map(|s| if *s == Side::Left { 'L' } else { 'R' }).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Action {
    Head,
    Fork,
    Join,
}

/// A steppable place in the task tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Position {
    pub path: Path,
    pub action: Action,
}

/// Everything the scheduler can see about a configuration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Enabled {
    pub steps: Vec<Position>,
    /// Leaves facing an out-of-bounds operation.
    pub oob: Vec<Path>,
    /// Places where no rule applies.
    pub stuck: Vec<(Path, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepError {
    InvalidPosition(String),
    Fault(Fault),
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepError::InvalidPosition(m) => write!(f, "invalid position: {m}"),
            StepError::Fault(Fault::Oob) => f.write_str("out of bounds"),
            StepError::Fault(Fault::Stuck(m)) => write!(f, "stuck: {m}"),
        }
    }
}

impl std::error::Error for StepError {}

/// What one scheduler step did.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    #[serde(serialize_with = "ser_path")]
    pub path: Path,
    pub rule: &'static str,
    /// The task that stepped; for a join, the task that resumes.
    pub ts: Timestamp,
    pub allocated: Vec<Location>,
    pub forked: Vec<Timestamp>,
    #[serde(skip)]
    pub acquired: Vec<Location>,
}

fn ser_path<S: serde::Serializer>(p: &Path, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&show_path(p))
}

/// A full machine state. Locations index the store; timestamps index the
/// graph's vertices.
#[derive(Clone, Debug)]
pub struct Configuration {
    pub store: Vec<Block>,
    pub allocmap: Vec<Timestamp>,
    pub graph: CompGraph,
    pub tree: TaskTree,
    pub expr: Expr,
}

impl Configuration {
    /// The initial configuration: empty store, one task `t0`.
    pub fn new(expr: Expr, mode: GraphMode) -> Configuration {
        let mut graph = CompGraph::new(mode);
        let t0 = graph.add_vertex();
        Configuration {
            store: Vec::new(),
            allocmap: Vec::new(),
            graph,
            tree: TaskTree::Leaf(t0),
            expr,
        }
    }

    pub fn mode(&self) -> GraphMode {
        self.graph.mode()
    }

    pub fn block(&self, l: Location) -> Option<&Block> {
        self.store.get(l.0 as usize)
    }

    pub fn stamp(&self, l: Location) -> Option<Timestamp> {
        self.allocmap.get(l.0 as usize).copied()
    }

    pub fn result(&self) -> Option<&Value> {
        match self.tree {
            TaskTree::Leaf(_) => self.expr.as_value(),
            TaskTree::Node(..) => None,
        }
    }

    pub fn is_final(&self) -> bool {
        self.result().is_some()
    }

    pub fn enabled(&self) -> Enabled {
        let mut out = Enabled::default();
        survey(&self.store, &self.tree, &self.expr, &mut Vec::new(), &mut out);
        out
    }

    pub fn step(&mut self, pos: &Position) -> Result<StepRecord, StepError> {
        let Configuration {
            store,
            allocmap,
            graph,
            tree,
            expr,
        } = self;
        let (node, e) = locate(tree, expr, &pos.path)?;
        let mut rec = StepRecord {
            path: pos.path.clone(),
            rule: "",
            ts: node.timestamp(),
            allocated: Vec::new(),
            forked: Vec::new(),
            acquired: Vec::new(),
        };
        match (pos.action, &*node) {
            (Action::Head, TaskTree::Leaf(t)) => {
                let t = *t;
                let Focus::Redex(r) = focus_mut(e) else {
                    return Err(StepError::InvalidPosition("no redex at this leaf".into()));
                };
                if matches!(r.kind, ExprKind::Par(..)) {
                    return Err(StepError::InvalidPosition("this leaf forks".into()));
                }
                let info = head_step(store, allocmap, t, r).map_err(StepError::Fault)?;
                rec.rule = info.rule;
                rec.allocated.extend(info.allocated);
                rec.acquired = info.acquired;
            }
            (Action::Fork, TaskTree::Leaf(t)) => {
                let t = *t;
                let Focus::Redex(r) = focus_mut(e) else {
                    return Err(StepError::InvalidPosition("no redex at this leaf".into()));
                };
                if !matches!(r.kind, ExprKind::Par(..)) {
                    return Err(StepError::InvalidPosition("this leaf does not fork".into()));
                }
                classify(store, r).map_err(StepError::Fault)?;
                let ExprKind::Par(_, _, f1, f2) = std::mem::replace(&mut r.kind, ExprKind::Val(Value::Unit)) else { unreachable!() };
                let span = r.span;
                let unit = || vec![Expr::val(Value::Unit)];
                let c1 = Expr::at(ExprKind::Call(f1, Vec::new(), unit()), span);
                let c2 = Expr::at(ExprKind::Call(f2, Vec::new(), unit()), span);
                r.kind = ExprKind::ActivePar(Box::new(c1), Box::new(c2));
                let t1 = graph.add_vertex();
                let t2 = graph.add_vertex();
                graph.add_edge(t, t1, EdgeKind::Fork);
                graph.add_edge(t, t2, EdgeKind::Fork);
                *node = TaskTree::Node(t, Box::new(TaskTree::Leaf(t1)), Box::new(TaskTree::Leaf(t2)));
                rec.rule = "SchedFork";
                rec.forked = vec![t1, t2];
            }
            (Action::Join, TaskTree::Node(t, l, r)) => {
                let (t, t1, t2) = (*t, l.timestamp(), r.timestamp());
                if !matches!((&**l, &**r), (TaskTree::Leaf(_), TaskTree::Leaf(_))) {
                    return Err(StepError::InvalidPosition("children are still running".into()));
                }
                let FocusRef::ParPair(p) = focus_ref(e) else {
                    return Err(StepError::InvalidPosition("no active pair at this node".into()));
                };
                let ExprKind::ActivePar(a, b) = &p.kind else { unreachable!() };
                let (Some(v1), Some(v2)) = (a.as_value(), b.as_value()) else {
                    return Err(StepError::InvalidPosition("the pair is not finished".into()));
                };
                let (v1, v2) = (v1.clone(), v2.clone());
                let resumed = match graph.mode() {
                    GraphMode::Cyclic => t,
                    GraphMode::Standard => graph.add_vertex(),
                };
                graph.add_edge(t1, resumed, EdgeKind::Join);
                graph.add_edge(t2, resumed, EdgeKind::Join);
                let l = Location(store.len() as u64);
                store.push(Block::Pair(v1, v2));
                allocmap.push(resumed);
                let Focus::ParPair(p) = focus_mut(e) else { unreachable!() };
                p.kind = ExprKind::Val(Value::Loc(l));
                *node = TaskTree::Leaf(resumed);
                rec.rule = "SchedJoin";
                rec.ts = resumed;
                rec.allocated.push(l);
            }
            (action, _) => {
                return Err(StepError::InvalidPosition(format!(
                    "{action:?} does not apply at {}",
                    show_path(&pos.path)
                )))
            }
        }
        Ok(rec)
    }
}

/// Walks to the subtree and subexpression addressed by `path`.
fn locate<'a>(
    tree: &'a mut TaskTree,
    expr: &'a mut Expr,
    path: &[Side],
) -> Result<(&'a mut TaskTree, &'a mut Expr), StepError> {
    let Some((side, rest)) = path.split_first() else {
        return Ok((tree, expr));
    };
    let TaskTree::Node(_, l, r) = tree else {
        return Err(StepError::InvalidPosition("path continues below a leaf".into()));
    };
    let Focus::ParPair(p) = focus_mut(expr) else {
        return Err(StepError::InvalidPosition("no active pair under this node".into()));
    };
    let ExprKind::ActivePar(a, b) = &mut p.kind else { unreachable!() };
    match side {
        Side::Left => locate(l, a, rest),
        Side::Right => locate(r, b, rest),
    }
}

fn survey(store: &[Block], tree: &TaskTree, e: &Expr, path: &mut Path, out: &mut Enabled) {
    match tree {
        TaskTree::Leaf(_) => match focus_ref(e) {
            FocusRef::Value => {}
            FocusRef::Redex(r) => match classify(store, r) {
                Ok(RedexKind::Head) => out.steps.push(Position {
                    path: path.clone(),
                    action: Action::Head,
                }),
                Ok(RedexKind::Fork) => out.steps.push(Position {
                    path: path.clone(),
                    action: Action::Fork,
                }),
                Err(Fault::Oob) => out.oob.push(path.clone()),
                Err(Fault::Stuck(m)) => out.stuck.push((path.clone(), m)),
            },
            FocusRef::ParPair(_) => out
                .stuck
                .push((path.clone(), "active pair under a leaf task".into())),
            FocusRef::Stuck(r) => {
                let m = match &r.kind {
                    ExprKind::Var(x) => format!("unbound variable `{x}`"),
                    _ => "annotation nodes must be erased before running".to_string(),
                };
                out.stuck.push((path.clone(), m))
            }
        },
        TaskTree::Node(_, l, r) => match focus_ref(e) {
            FocusRef::ParPair(p) => {
                let ExprKind::ActivePar(a, b) = &p.kind else { unreachable!() };
                if a.is_value() && b.is_value() {
                    if matches!((&**l, &**r), (TaskTree::Leaf(_), TaskTree::Leaf(_))) {
                        out.steps.push(Position {
                            path: path.clone(),
                            action: Action::Join,
                        });
                    } else {
                        out.stuck.push((path.clone(), "finished pair over running tasks".into()));
                    }
                    return;
                }
                path.push(Side::Left);
                survey(store, l, a, path, out);
                path.pop();
                path.push(Side::Right);
                survey(store, r, b, path, out);
                path.pop();
            }
            _ => out
                .stuck
                .push((path.clone(), "task node without an active pair".into())),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse_expr;

    fn cfg(src: &str, mode: GraphMode) -> Configuration {
        Configuration::new(parse_expr(src).unwrap().erase(), mode)
    }

    fn run_first(c: &mut Configuration) -> Vec<&'static str> {
        let mut rules = Vec::new();
        while let Some(p) = c.enabled().steps.first().cloned() {
            rules.push(c.step(&p).unwrap().rule);
        }
        rules
    }

    const FORK: &str = "par[\\e. int, \\e. int](fun a [e] (u: unit) @e : int -> 1, fun b [e] (u: unit) @e : int -> 2)";

    #[test]
    fn fork_then_join_cyclic() {
        let mut c = cfg(FORK, GraphMode::Cyclic);
        let rules = run_first(&mut c);
        assert_eq!(rules.iter().filter(|r| **r == "SchedFork").count(), 1);
        assert_eq!(*rules.last().unwrap(), "SchedJoin");
        assert_eq!(c.tree, TaskTree::Leaf(Timestamp(0)));
        assert_eq!(c.graph.len(), 3);
        let Some(Value::Loc(l)) = c.result() else { panic!() };
        assert_eq!(c.block(*l), Some(&Block::Pair(Value::int(1), Value::int(2))));
        assert_eq!(c.stamp(*l), Some(Timestamp(0)));
        assert!(c.graph.precedes(Timestamp(1), Timestamp(2)));
    }

    #[test]
    fn fork_then_join_standard() {
        let mut c = cfg(FORK, GraphMode::Standard);
        run_first(&mut c);
        assert_eq!(c.tree, TaskTree::Leaf(Timestamp(3)));
        assert_eq!(c.graph.len(), 4);
        let Some(Value::Loc(l)) = c.result() else { panic!() };
        assert_eq!(c.stamp(*l), Some(Timestamp(3)));
        assert!(!c.graph.precedes(Timestamp(1), Timestamp(2)));
        assert!(c.graph.precedes(Timestamp(0), Timestamp(3)));
    }

    #[test]
    fn both_sides_enabled_after_fork() {
        let mut c = cfg(FORK, GraphMode::Cyclic);
        while c.enabled().steps[0].action != Action::Fork {
            let p = c.enabled().steps[0].clone();
            c.step(&p).unwrap();
        }
        let p = c.enabled().steps[0].clone();
        let rec = c.step(&p).unwrap();
        assert_eq!(rec.forked, vec![Timestamp(1), Timestamp(2)]);
        let en = c.enabled();
        assert_eq!(en.steps.len(), 2);
        assert_eq!(en.steps[0].path, vec![Side::Left]);
        assert_eq!(en.steps[1].path, vec![Side::Right]);
        assert!(c.step(&Position { path: vec![], action: Action::Join }).is_err());
    }

    #[test]
    fn oob_is_flagged_not_steppable() {
        let mut c = cfg("let a = alloc(1, 0) in a.[5]", GraphMode::Cyclic);
        run_first(&mut c);
        let en = c.enabled();
        assert!(en.steps.is_empty());
        assert_eq!(en.oob, vec![Vec::<Side>::new()]);
    }
}
