//! Left-to-right call-by-value evaluation contexts.

use super::{Ann, Expr, ExprKind, Prim, Side, Symbol, Value};
use crate::types::TsVar;

/// One layer of an evaluation context. There is no frame for active
/// parallel pairs: scheduling handles them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Frame {
    Let(Symbol, Expr),
    If(Expr, Expr),
    PrimL(Prim, Expr),
    PrimR(Prim, Value),
    CallCallee(Vec<TsVar>, Vec<Expr>),
    CallArg {
        callee: Value,
        ts: Vec<TsVar>,
        done: Vec<Value>,
        rest: Vec<Expr>,
    },
    PairL(Expr),
    PairR(Value),
    Proj(Side),
    Inj(Side, Ann),
    Case(Symbol, Expr, Symbol, Expr),
    AllocL(Expr),
    AllocR(Value),
    LoadL(Expr),
    LoadR(Value),
    StoreA(Expr, Expr),
    StoreI(Value, Expr),
    StoreV(Value, Value),
    Length,
    CasA(Expr, Expr, Expr),
    CasI(Value, Expr, Expr),
    CasO(Value, Value, Expr),
    CasN(Value, Value, Value),
    Fold(Ann),
    Unfold,
    ParL(Ann, Ann, Expr),
    ParR(Ann, Ann, Value),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decomposition {
    AtValue,
    AtRedex(Vec<Frame>, Expr),
    AtParPair(Vec<Frame>, Expr),
    Stuck(Vec<Frame>, Expr),
}

enum Pending {
    Value,
    Redex,
    ParPair,
    Stuck,
    Descend(usize),
}

fn slot_count(kind: &ExprKind) -> usize {
    use ExprKind::*;
    match kind {
        Let(..) | If(..) | Proj(..) | Inj(..) | Case(..) | Length(_) | Fold(..) | Unfold(_) => 1,
        Prim(..) | Pair(..) | Alloc(..) | Load(..) | Par(..) => 2,
        Store(..) => 3,
        Cas(..) => 4,
        Call(_, _, args) => 1 + args.len(),
        _ => 0,
    }
}

fn slot(kind: &ExprKind, i: usize) -> &Expr {
    use ExprKind::*;
    match (kind, i) {
        (Let(_, a, _) | If(a, ..) | Proj(_, a) | Inj(_, _, a) | Case(a, ..) | Length(a), 0) => a,
        (Fold(_, a) | Unfold(a), 0) => a,
        (Prim(_, a, _) | Pair(a, _) | Alloc(a, _) | Load(a, _) | Par(_, _, a, _), 0) => a,
        (Prim(_, _, b) | Pair(_, b) | Alloc(_, b) | Load(_, b) | Par(_, _, _, b), 1) => b,
        (Store(a, ..), 0) | (Cas(a, ..), 0) => a,
        (Store(_, b, _), 1) | (Cas(_, b, ..), 1) => b,
        (Store(_, _, c), 2) | (Cas(_, _, c, _), 2) => c,
        (Cas(_, _, _, d), 3) => d,
        (Call(callee, ..), 0) => callee,
        (Call(_, _, args), i) => &args[i - 1],
        _ => unreachable!("no evaluation slot {i}"),
    }
}

fn slot_mut(kind: &mut ExprKind, i: usize) -> &mut Expr {
    use ExprKind::*;
    match (kind, i) {
        (Let(_, a, _) | If(a, ..) | Proj(_, a) | Inj(_, _, a) | Case(a, ..) | Length(a), 0) => a,
        (Fold(_, a) | Unfold(a), 0) => a,
        (Prim(_, a, _) | Pair(a, _) | Alloc(a, _) | Load(a, _) | Par(_, _, a, _), 0) => a,
        (Prim(_, _, b) | Pair(_, b) | Alloc(_, b) | Load(_, b) | Par(_, _, _, b), 1) => b,
        (Store(a, ..), 0) | (Cas(a, ..), 0) => a,
        (Store(_, b, _), 1) | (Cas(_, b, ..), 1) => b,
        (Store(_, _, c), 2) | (Cas(_, _, c, _), 2) => c,
        (Cas(_, _, _, d), 3) => d,
        (Call(callee, ..), 0) => callee,
        (Call(_, _, args), i) => &mut args[i - 1],
        _ => unreachable!("no evaluation slot {i}"),
    }
}

fn pending(e: &Expr) -> Pending {
    match &e.kind {
        ExprKind::Val(_) => Pending::Value,
        ExprKind::ActivePar(..) => Pending::ParPair,
        ExprKind::Abs(_) => Pending::Redex,
        ExprKind::Var(_)
        | ExprKind::Sub(..)
        | ExprKind::GetRoot(..)
        | ExprKind::TAbs(..)
        | ExprKind::TApp(..) => Pending::Stuck,
        kind => (0..slot_count(kind))
            .find(|&i| !slot(kind, i).is_value())
            .map_or(Pending::Redex, Pending::Descend),
    }
}

/// The unique split `e = K[e′]` where `e′` is a head redex or an active pair.
pub fn decompose(e: &Expr) -> Decomposition {
    if e.is_value() {
        return Decomposition::AtValue;
    }
    let mut frames = Vec::new();
    let mut cur = e.clone();
    loop {
        match pending(&cur) {
            Pending::Value => unreachable!("values are never descended into"),
            Pending::Redex => return Decomposition::AtRedex(frames, cur),
            Pending::ParPair => return Decomposition::AtParPair(frames, cur),
            Pending::Stuck => return Decomposition::Stuck(frames, cur),
            Pending::Descend(i) => {
                let (frame, inner) = split(cur, i);
                frames.push(frame);
                cur = inner;
            }
        }
    }
}

fn val(e: Expr) -> Value {
    match e.kind {
        ExprKind::Val(v) => v,
        _ => unreachable!("evaluated slot holds a value"),
    }
}

fn split(e: Expr, i: usize) -> (Frame, Expr) {
    use ExprKind as K;
    match (e.kind, i) {
        (K::Let(x, a, b), 0) => (Frame::Let(x, *b), *a),
        (K::If(a, b, c), 0) => (Frame::If(*b, *c), *a),
        (K::Prim(p, a, b), 0) => (Frame::PrimL(p, *b), *a),
        (K::Prim(p, a, b), 1) => (Frame::PrimR(p, val(*a)), *b),
        (K::Call(f, ts, args), 0) => (Frame::CallCallee(ts, args), *f),
        (K::Call(f, ts, args), i) => {
            let mut it = args.into_iter();
            let done: Vec<Value> = it.by_ref().take(i - 1).map(val).collect();
            let hole = it.next().expect("argument slot");
            let rest = it.collect();
            (
                Frame::CallArg {
                    callee: val(*f),
                    ts,
                    done,
                    rest,
                },
                hole,
            )
        }
        (K::Pair(a, b), 0) => (Frame::PairL(*b), *a),
        (K::Pair(a, b), 1) => (Frame::PairR(val(*a)), *b),
        (K::Proj(s, a), 0) => (Frame::Proj(s), *a),
        (K::Inj(s, t, a), 0) => (Frame::Inj(s, t), *a),
        (K::Case(a, x1, e1, x2, e2), 0) => (Frame::Case(x1, *e1, x2, *e2), *a),
        (K::Alloc(a, b), 0) => (Frame::AllocL(*b), *a),
        (K::Alloc(a, b), 1) => (Frame::AllocR(val(*a)), *b),
        (K::Load(a, b), 0) => (Frame::LoadL(*b), *a),
        (K::Load(a, b), 1) => (Frame::LoadR(val(*a)), *b),
        (K::Store(a, b, c), 0) => (Frame::StoreA(*b, *c), *a),
        (K::Store(a, b, c), 1) => (Frame::StoreI(val(*a), *c), *b),
        (K::Store(a, b, c), 2) => (Frame::StoreV(val(*a), val(*b)), *c),
        (K::Length(a), 0) => (Frame::Length, *a),
        (K::Cas(a, b, c, d), 0) => (Frame::CasA(*b, *c, *d), *a),
        (K::Cas(a, b, c, d), 1) => (Frame::CasI(val(*a), *c, *d), *b),
        (K::Cas(a, b, c, d), 2) => (Frame::CasO(val(*a), val(*b), *d), *c),
        (K::Cas(a, b, c, d), 3) => (Frame::CasN(val(*a), val(*b), val(*c)), *d),
        (K::Fold(t, a), 0) => (Frame::Fold(t), *a),
        (K::Unfold(a), 0) => (Frame::Unfold, *a),
        (K::Par(t1, t2, a, b), 0) => (Frame::ParL(t1, t2, *b), *a),
        (K::Par(t1, t2, a, b), 1) => (Frame::ParR(t1, t2, val(*a)), *b),
        _ => unreachable!("split outside the evaluation grammar"),
    }
}

impl Frame {
    pub fn plug(self, e: Expr) -> Expr {
        use ExprKind as K;
        let b = Box::new;
        let v = |v: Value| b(Expr::val(v));
        Expr::new(match self {
            Frame::Let(x, body) => K::Let(x, b(e), b(body)),
            Frame::If(t, f) => K::If(b(e), b(t), b(f)),
            Frame::PrimL(p, r) => K::Prim(p, b(e), b(r)),
            Frame::PrimR(p, l) => K::Prim(p, v(l), b(e)),
            Frame::CallCallee(ts, args) => K::Call(b(e), ts, args),
            Frame::CallArg {
                callee,
                ts,
                done,
                rest,
            } => {
                let mut args: Vec<Expr> = done.into_iter().map(Expr::val).collect();
                args.push(e);
                args.extend(rest);
                K::Call(v(callee), ts, args)
            }
            Frame::PairL(r) => K::Pair(b(e), b(r)),
            Frame::PairR(l) => K::Pair(v(l), b(e)),
            Frame::Proj(s) => K::Proj(s, b(e)),
            Frame::Inj(s, t) => K::Inj(s, t, b(e)),
            Frame::Case(x1, e1, x2, e2) => K::Case(b(e), x1, b(e1), x2, b(e2)),
            Frame::AllocL(r) => K::Alloc(b(e), b(r)),
            Frame::AllocR(l) => K::Alloc(v(l), b(e)),
            Frame::LoadL(r) => K::Load(b(e), b(r)),
            Frame::LoadR(l) => K::Load(v(l), b(e)),
            Frame::StoreA(i, x) => K::Store(b(e), b(i), b(x)),
            Frame::StoreI(a, x) => K::Store(v(a), b(e), b(x)),
            Frame::StoreV(a, i) => K::Store(v(a), v(i), b(e)),
            Frame::Length => K::Length(b(e)),
            Frame::CasA(i, o, n) => K::Cas(b(e), b(i), b(o), b(n)),
            Frame::CasI(a, o, n) => K::Cas(v(a), b(e), b(o), b(n)),
            Frame::CasO(a, i, n) => K::Cas(v(a), v(i), b(e), b(n)),
            Frame::CasN(a, i, o) => K::Cas(v(a), v(i), v(o), b(e)),
            Frame::Fold(t) => K::Fold(t, b(e)),
            Frame::Unfold => K::Unfold(b(e)),
            Frame::ParL(t1, t2, r) => K::Par(t1, t2, b(e), b(r)),
            Frame::ParR(t1, t2, l) => K::Par(t1, t2, v(l), b(e)),
        })
    }
}

/// `K[e]`, with frames listed outermost first.
pub fn plug(frames: Vec<Frame>, e: Expr) -> Expr {
    frames.into_iter().rev().fold(e, |acc, f| f.plug(acc))
}

/// In-place view of the decomposition, used by the interpreter to avoid
/// rebuilding the context on every step.
pub enum Focus<'a> {
    Value,
    Redex(&'a mut Expr),
    ParPair(&'a mut Expr),
    Stuck(&'a mut Expr),
}

pub fn focus_mut(e: &mut Expr) -> Focus<'_> {
    match pending(e) {
        Pending::Value => Focus::Value,
        Pending::Redex => Focus::Redex(e),
        Pending::ParPair => Focus::ParPair(e),
        Pending::Stuck => Focus::Stuck(e),
        Pending::Descend(i) => descend(slot_mut(&mut e.kind, i)),
    }
}

fn descend(e: &mut Expr) -> Focus<'_> {
    match pending(e) {
        Pending::Value => unreachable!("only non-values are descended into"),
        Pending::Redex => Focus::Redex(e),
        Pending::ParPair => Focus::ParPair(e),
        Pending::Stuck => Focus::Stuck(e),
        Pending::Descend(i) => descend(slot_mut(&mut e.kind, i)),
    }
}

/// Read-only counterpart of [`Focus`].
pub enum FocusRef<'a> {
    Value,
    Redex(&'a Expr),
    ParPair(&'a Expr),
    Stuck(&'a Expr),
}

pub fn focus_ref(e: &Expr) -> FocusRef<'_> {
    let mut cur = e;
    loop {
        match pending(cur) {
            Pending::Value => return FocusRef::Value,
            Pending::Redex => return FocusRef::Redex(cur),
            Pending::ParPair => return FocusRef::ParPair(cur),
            Pending::Stuck => return FocusRef::Stuck(cur),
            Pending::Descend(i) => cur = slot(&cur.kind, i),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn b(e: Expr) -> Box<Expr> {
        Box::new(e)
    }

    fn int(n: i64) -> Expr {
        Expr::val(Value::int(n))
    }

    #[test]
    fn let_with_redex() {
        let redex = Expr::new(ExprKind::Prim(Prim::Add, b(int(1)), b(int(2))));
        let e = Expr::new(ExprKind::Let(Symbol::new("x"), b(redex.clone()), b(Expr::var("x"))));
        match decompose(&e) {
            Decomposition::AtRedex(frames, r) => {
                assert_eq!(frames, vec![Frame::Let(Symbol::new("x"), Expr::var("x"))]);
                assert_eq!(r, redex);
                assert_eq!(plug(frames, r), e);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn values_and_pairs() {
        assert_eq!(decompose(&int(3)), Decomposition::AtValue);
        let pair = Expr::new(ExprKind::ActivePar(b(int(1)), b(Expr::var("z"))));
        let e = Expr::new(ExprKind::Let(Symbol::new("y"), b(pair.clone()), b(Expr::var("y"))));
        match decompose(&e) {
            Decomposition::AtParPair(frames, p) => {
                assert_eq!(frames.len(), 1);
                assert_eq!(p, pair);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn call_argument_frames() {
        let arg = Expr::new(ExprKind::Prim(Prim::Mul, b(int(2)), b(int(3))));
        let e = Expr::new(ExprKind::Call(
            b(Expr::val(Value::Loc(super::super::Location(0)))),
            vec![],
            vec![int(1), arg.clone(), Expr::var("w")],
        ));
        let Decomposition::AtRedex(frames, r) = decompose(&e) else { panic!() };
        assert_eq!(r, arg);
        assert!(matches!(&frames[0], Frame::CallArg { done, rest, .. } if done.len() == 1 && rest.len() == 1));
        assert_eq!(plug(frames, r), e);
    }

    #[test]
    fn annotations_are_stuck() {
        let e = Expr::new(ExprKind::Sub(Arc::new(crate::types::Type::int()), b(int(1))));
        assert!(matches!(decompose(&e), Decomposition::Stuck(..)));
    }

    #[test]
    fn focus_matches_decompose() {
        let inner = Expr::new(ExprKind::Prim(Prim::Add, b(int(1)), b(int(2))));
        let mut e = Expr::new(ExprKind::Pair(b(int(0)), b(inner.clone())));
        let Focus::Redex(r) = focus_mut(&mut e) else { panic!() };
        assert_eq!(*r, inner);
        *r = int(3);
        assert_eq!(e, Expr::new(ExprKind::Pair(b(int(0)), b(int(3)))));
    }
}
