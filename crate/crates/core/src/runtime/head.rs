use std::sync::Arc;

use super::Timestamp;
use crate::ast::{Block, Expr, ExprKind, Location, Prim, Side, Value};

/// Arrays longer than this are refused rather than allocated.
pub const MAX_ARRAY_LEN: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fault {
    /// An array operation out of bounds, or an allocation of non-positive
    /// length. Counts as a safe stop.
    Oob,
    /// No rule applies.
    Stuck(String),
}

/// What a leaf facing a redex can do.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RedexKind {
    Head,
    Fork,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HeadInfo {
    pub rule: &'static str,
    pub allocated: Option<Location>,
    /// Locations the task obtains from the heap: the loaded, projected or
    /// matched value, or the locations held in a called closure's body.
    pub acquired: Vec<Location>,
}

fn stuck<T>(msg: impl Into<String>) -> Result<T, Fault> {
    Err(Fault::Stuck(msg.into()))
}

fn block<'a>(store: &'a [Block], v: &Value) -> Result<(Location, &'a Block), Fault> {
    match v {
        Value::Loc(l) => match store.get(l.0 as usize) {
            Some(b) => Ok((*l, b)),
            None => stuck(format!("dangling location {l}")),
        },
        other => stuck(format!("expected a location, found {other}")),
    }
}

fn array<'a>(store: &'a [Block], v: &Value) -> Result<(Location, &'a [Value]), Fault> {
    match block(store, v)? {
        (l, Block::Array(cells)) => Ok((l, cells)),
        (l, _) => stuck(format!("{l} is not an array")),
    }
}

fn index(cells: &[Value], i: &Value) -> Result<usize, Fault> {
    match i {
        Value::Int(n) => n.as_index(cells.len()).ok_or(Fault::Oob),
        other => stuck(format!("expected an integer index, found {other}")),
    }
}

fn closure(store: &[Block], v: &Value, arity: usize) -> Result<(Location, Arc<crate::ast::Abstraction>), Fault> {
    match block(store, v)? {
        (l, Block::Closure(abs)) if abs.params.len() == arity => Ok((l, abs.clone())),
        (l, Block::Closure(abs)) => stuck(format!(
            "closure {l} takes {} argument(s), given {arity}",
            abs.params.len()
        )),
        (l, _) => stuck(format!("{l} is not a closure")),
    }
}

fn val(e: &Expr) -> &Value {
    e.as_value().expect("redex operands are values")
}

fn alloc_len(n: &Value) -> Result<usize, Fault> {
    match n {
        Value::Int(n) => {
            if n.is_negative() || n.is_zero() {
                return Err(Fault::Oob);
            }
            match n.to_i64() {
                Some(k) if (k as u64) <= MAX_ARRAY_LEN as u64 => Ok(k as usize),
                _ => stuck(format!("allocation of {n} cells exceeds the interpreter limit")),
            }
        }
        other => stuck(format!("expected an integer length, found {other}")),
    }
}

/// The meta-level primitive table. Total on operands of the right sorts.
pub fn pure_prim_step(op: Prim, a: &Value, b: &Value) -> Result<Value, Fault> {
    use Prim::*;
    match (op, a, b) {
        (Eq, a, b) => Ok(Value::Bool(a == b)),
        (Or, Value::Bool(x), Value::Bool(y)) => Ok(Value::Bool(*x || *y)),
        (And, Value::Bool(x), Value::Bool(y)) => Ok(Value::Bool(*x && *y)),
        (_, Value::Int(x), Value::Int(y)) => Ok(match op {
            Add => Value::Int(x.add(y)),
            Sub => Value::Int(x.sub(y)),
            Mul => Value::Int(x.mul(y)),
            Div => Value::Int(x.div(y)),
            Mod => Value::Int(x.rem(y)),
            Lt => Value::Bool(x < y),
            Le => Value::Bool(x <= y),
            Gt => Value::Bool(x > y),
            Ge => Value::Bool(x >= y),
            Eq | Or | And => return stuck(format!("{} applied to integers", op.symbol())),
        }),
        _ => stuck(format!("{} applied to {a} and {b}", op.symbol())),
    }
}

/// Decides, without changing anything, whether `redex` can take a head step
/// or fork, or why it cannot.
pub fn classify(store: &[Block], redex: &Expr) -> Result<RedexKind, Fault> {
    use ExprKind::*;
    match &redex.kind {
        Let(..) | Abs(_) | Pair(..) | Inj(..) | Fold(..) => {}
        If(c, _, _) => match val(c) {
            Value::Bool(_) => {}
            other => return stuck(format!("if on {other}")),
        },
        Prim(op, a, b) => {
            pure_prim_step(*op, val(a), val(b))?;
        }
        Call(f, _, args) => {
            closure(store, val(f), args.len())?;
        }
        Proj(_, p) => match block(store, val(p))? {
            (_, Block::Pair(..)) => {}
            (l, _) => return stuck(format!("{l} is not a pair")),
        },
        Case(s, ..) => match block(store, val(s))? {
            (_, Block::Inj(..)) => {}
            (l, _) => return stuck(format!("{l} is not an injection")),
        },
        Alloc(n, _) => {
            alloc_len(val(n))?;
        }
        Load(a, i) => {
            let (_, cells) = array(store, val(a))?;
            index(cells, val(i))?;
        }
        Store(a, i, _) => {
            let (_, cells) = array(store, val(a))?;
            index(cells, val(i))?;
        }
        Length(a) => {
            array(store, val(a))?;
        }
        Cas(a, i, _, _) => {
            let (_, cells) = array(store, val(a))?;
            index(cells, val(i))?;
        }
        Unfold(v) => match val(v) {
            Value::Fold(_) => {}
            other => return stuck(format!("unfold of {other}")),
        },
        Par(_, _, a, b) => {
            closure(store, val(a), 1)?;
            closure(store, val(b), 1)?;
            return Ok(RedexKind::Fork);
        }
        Val(_) | ActivePar(..) => unreachable!("not a redex"),
        Var(x) => return stuck(format!("unbound variable `{x}`")),
        Sub(..) | GetRoot(..) | TAbs(..) | TApp(..) => {
            return stuck("annotation nodes must be erased before running")
        }
    }
    Ok(RedexKind::Head)
}

/// One head reduction of `redex` by the task `t`, in place. `Par` is not a
/// head redex: forking is done by the scheduler.
pub fn head_step(
    store: &mut Vec<Block>,
    allocmap: &mut Vec<Timestamp>,
    t: Timestamp,
    redex: &mut Expr,
) -> Result<HeadInfo, Fault> {
    use ExprKind::*;
    let span = redex.span;
    let mut info = HeadInfo::default();
    let kind = std::mem::replace(&mut redex.kind, Val(Value::Unit));
    let result = match kind {
        Let(x, v, body) => {
            info.rule = "HeadLetVal";
            let mut body = *body;
            body.subst_in_place(&[(x, val(&v).clone())]);
            body
        }
        If(c, a, b) => match val(&c) {
            Value::Bool(true) => {
                info.rule = "HeadIfTrue";
                *a
            }
            Value::Bool(false) => {
                info.rule = "HeadIfFalse";
                *b
            }
            other => {
                let msg = format!("if on {other}");
                return restore(redex, If(c, a, b), stuck(msg));
            }
        },
        Prim(op, a, b) => match pure_prim_step(op, val(&a), val(&b)) {
            Ok(v) => {
                info.rule = "HeadCallPrim";
                Expr::at(Val(v), span)
            }
            Err(e) => return restore(redex, Prim(op, a, b), Err(e)),
        },
        Abs(abs) => {
            info.rule = "HeadClosure";
            push(store, allocmap, t, Block::Closure(abs), &mut info, span)
        }
        Call(f, ts, args) => match closure(store, val(&f), args.len()) {
            Ok((l, abs)) => {
                info.rule = "HeadCall";
                abs.body.for_each_loc(&mut |x| info.acquired.push(x));
                let mut bindings = Vec::with_capacity(args.len() + 1);
                bindings.push((abs.name.clone(), Value::Loc(l)));
                for (x, a) in abs.params.iter().zip(&args) {
                    bindings.push((x.clone(), val(a).clone()));
                }
                abs.body.subst(&bindings)
            }
            Err(e) => return restore(redex, Call(f, ts, args), Err(e)),
        },
        Pair(a, b) => {
            info.rule = "HeadPair";
            push(store, allocmap, t, Block::Pair(val(&a).clone(), val(&b).clone()), &mut info, span)
        }
        Proj(side, p) => match block(store, val(&p)) {
            Ok((_, Block::Pair(x, y))) => {
                info.rule = "HeadProj";
                let v = if side == Side::Left { x.clone() } else { y.clone() };
                v.for_each_loc(&mut |x| info.acquired.push(x));
                Expr::at(Val(v), span)
            }
            Ok((l, _)) => return restore(redex, Proj(side, p), stuck(format!("{l} is not a pair"))),
            Err(e) => return restore(redex, Proj(side, p), Err(e)),
        },
        Inj(side, _, v) => {
            info.rule = "HeadInj";
            push(store, allocmap, t, Block::Inj(side, val(&v).clone()), &mut info, span)
        }
        Case(s, x1, e1, x2, e2) => match block(store, val(&s)) {
            Ok((_, Block::Inj(side, v))) => {
                info.rule = "HeadCase";
                let v = v.clone();
                v.for_each_loc(&mut |x| info.acquired.push(x));
                let (x, mut body) = if *side == Side::Left { (x1, *e1) } else { (x2, *e2) };
                body.subst_in_place(&[(x, v)]);
                body
            }
            Ok((l, _)) => {
                let msg = format!("{l} is not an injection");
                return restore(redex, Case(s, x1, e1, x2, e2), stuck(msg));
            }
            Err(e) => return restore(redex, Case(s, x1, e1, x2, e2), Err(e)),
        },
        Alloc(n, v) => match alloc_len(val(&n)) {
            Ok(len) => {
                info.rule = "HeadAlloc";
                push(store, allocmap, t, Block::Array(vec![val(&v).clone(); len]), &mut info, span)
            }
            Err(e) => return restore(redex, Alloc(n, v), Err(e)),
        },
        Load(a, i) => {
            let r = array(store, val(&a)).and_then(|(_, cells)| Ok(cells[index(cells, val(&i))?].clone()));
            match r {
                Ok(v) => {
                    info.rule = "HeadLoad";
                    v.for_each_loc(&mut |x| info.acquired.push(x));
                    Expr::at(Val(v), span)
                }
                Err(e) => return restore(redex, Load(a, i), Err(e)),
            }
        }
        Store(a, i, v) => {
            let r = array(store, val(&a)).and_then(|(l, cells)| Ok((l, index(cells, val(&i))?)));
            match r {
                Ok((l, k)) => {
                    info.rule = "HeadStore";
                    if let Block::Array(cells) = &mut store[l.0 as usize] {
                        cells[k] = val(&v).clone();
                    }
                    Expr::at(Val(Value::Unit), span)
                }
                Err(e) => return restore(redex, Store(a, i, v), Err(e)),
            }
        }
        Length(a) => match array(store, val(&a)) {
            Ok((_, cells)) => {
                info.rule = "HeadLength";
                Expr::at(Val(Value::int(cells.len() as i64)), span)
            }
            Err(e) => return restore(redex, Length(a), Err(e)),
        },
        Cas(a, i, old, new) => {
            let r = array(store, val(&a)).and_then(|(l, cells)| Ok((l, index(cells, val(&i))?)));
            match r {
                Ok((l, k)) => {
                    info.rule = "HeadCAS";
                    let Block::Array(cells) = &mut store[l.0 as usize] else { unreachable!() };
                    let hit = cells[k] == *val(&old);
                    if hit {
                        cells[k] = val(&new).clone();
                    }
                    Expr::at(Val(Value::Bool(hit)), span)
                }
                Err(e) => return restore(redex, Cas(a, i, old, new), Err(e)),
            }
        }
        Fold(_, v) => {
            info.rule = "HeadFold";
            Expr::at(Val(Value::Fold(Box::new(val(&v).clone()))), span)
        }
        Unfold(v) => match val(&v) {
            Value::Fold(inner) => {
                info.rule = "HeadUnfold";
                Expr::at(Val((**inner).clone()), span)
            }
            other => {
                let msg = format!("unfold of {other}");
                return restore(redex, Unfold(v), stuck(msg));
            }
        },
        other => {
            let msg = match &other {
                Par(..) => "a fork is not a head step".to_string(),
                Var(x) => format!("unbound variable `{x}`"),
                _ => "no head rule applies".to_string(),
            };
            return restore(redex, other, stuck(msg));
        }
    };
    *redex = result;
    Ok(info)
}

fn push(
    store: &mut Vec<Block>,
    allocmap: &mut Vec<Timestamp>,
    t: Timestamp,
    b: Block,
    info: &mut HeadInfo,
    span: crate::ast::Span,
) -> Expr {
    let l = Location(store.len() as u64);
    store.push(b);
    allocmap.push(t);
    info.allocated = Some(l);
    Expr::at(ExprKind::Val(Value::Loc(l)), span)
}

fn restore<T>(redex: &mut Expr, kind: ExprKind, r: Result<T, Fault>) -> Result<T, Fault> {
    redex.kind = kind;
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse_runtime_expr;

    fn e(s: &str) -> Expr {
        parse_runtime_expr(s).unwrap().erase()
    }

    fn step(store: &mut Vec<Block>, s: &str) -> (Result<HeadInfo, Fault>, Expr) {
        let mut alloc = vec![Timestamp(0); store.len()];
        let mut r = e(s);
        let out = head_step(store, &mut alloc, Timestamp(3), &mut r);
        (out, r)
    }

    #[test]
    fn alloc_stamps_the_task() {
        let mut store = Vec::new();
        let mut alloc = Vec::new();
        let mut r = e("alloc(2, 7)");
        let info = head_step(&mut store, &mut alloc, Timestamp(3), &mut r).unwrap();
        assert_eq!(info.rule, "HeadAlloc");
        assert_eq!(store, vec![Block::Array(vec![Value::int(7), Value::int(7)])]);
        assert_eq!(alloc, vec![Timestamp(3)]);
        assert_eq!(r, Expr::val(Value::Loc(Location(0))));
    }

    #[test]
    fn alloc_of_non_positive_length_is_oob() {
        let mut store = Vec::new();
        assert_eq!(step(&mut store, "alloc(0, ())").0, Err(Fault::Oob));
        assert_eq!(step(&mut store, "alloc(-2, ())").0, Err(Fault::Oob));
        assert!(store.is_empty());
    }

    #[test]
    fn unfold_of_fold() {
        let (r, out) = step(&mut Vec::new(), "unfold ⟨fold 4⟩");
        assert_eq!(r.unwrap().rule, "HeadUnfold");
        assert_eq!(out, e("4"));
    }

    #[test]
    fn cas_hits_and_misses() {
        let mut store = vec![Block::Array(vec![Value::int(1)])];
        let (r, out) = step(&mut store, "cas(#0, 0, 1, 9)");
        assert_eq!(r.unwrap().rule, "HeadCAS");
        assert_eq!(out, e("true"));
        assert_eq!(store[0], Block::Array(vec![Value::int(9)]));
        let (_, out) = step(&mut store, "cas(#0, 0, 1, 5)");
        assert_eq!(out, e("false"));
        assert_eq!(store[0], Block::Array(vec![Value::int(9)]));
        assert_eq!(step(&mut store, "cas(#0, 1, 9, 5)").0, Err(Fault::Oob));
    }

    #[test]
    fn faults_leave_the_redex_in_place() {
        let mut store = vec![Block::Array(vec![Value::int(1)])];
        let (r, out) = step(&mut store, "#0.[5]");
        assert_eq!(r, Err(Fault::Oob));
        assert_eq!(out, e("#0.[5]"));
        let (r, out) = step(&mut store, "fst 3");
        assert!(matches!(r, Err(Fault::Stuck(_))));
        assert_eq!(out, e("fst 3"));
    }

    #[test]
    fn call_substitutes_self_and_arguments() {
        let mut store = Vec::new();
        let (_, clo) = step(&mut store, "fun f (x: int) @d : int -> if x <= 0 then #7 else f (x - 1)");
        assert_eq!(clo, Expr::val(Value::Loc(Location(0))));
        let (r, body) = step(&mut store, "#0 (2)");
        let info = r.unwrap();
        assert_eq!(info.rule, "HeadCall");
        assert_eq!(info.acquired, vec![Location(7)]);
        assert_eq!(body, e("if 2 <= 0 then #7 else #0 (2 - 1)"));
    }

    #[test]
    fn prim_table() {
        let p = |op, a: i64, b: i64| pure_prim_step(op, &Value::int(a), &Value::int(b)).unwrap();
        assert_eq!(p(Prim::Add, 3, 4), Value::int(7));
        assert_eq!(p(Prim::Div, 1, 0), Value::int(0));
        assert_eq!(p(Prim::Mod, 5, 0), Value::int(0));
        assert_eq!(p(Prim::Div, -7, 2), Value::int(-4));
        assert_eq!(p(Prim::Mod, -7, 2), Value::int(1));
        assert_eq!(p(Prim::Le, 2, 2), Value::Bool(true));
        let l = |n| Value::Loc(Location(n));
        assert_eq!(pure_prim_step(Prim::Eq, &l(1), &l(1)), Ok(Value::Bool(true)));
        assert_eq!(pure_prim_step(Prim::Eq, &l(1), &l(2)), Ok(Value::Bool(false)));
        assert!(pure_prim_step(Prim::Add, &Value::Bool(true), &Value::int(1)).is_err());
    }
}
