//! The typing judgment δ; Δ; Γ ⊢ e : ρ. Every annotation in the term picks
//! exactly one rule, so checking is a single syntax-directed pass.

mod pure;
mod subtime;

use std::fmt;

use serde::Serialize;

pub use pure::very_pure;
pub use subtime::{subtime, subtime_derivation, SubDerivation};

use crate::ast::{Expr, ExprKind, Prim, Side, Span, Value};
use crate::surface::{print_type_plain, Diagnostic, Program};
use crate::symbol::Symbol;
use crate::types::{
    alpha_eq, beta_normalize, graph_subsumes, kind_of, tsubst, ty_subst, ArrowType, BoxedType,
    Kind, LogicalGraph, TsMap, TsVar, Type, TypeEnv,
};

#[derive(Clone, Debug)]
pub struct CheckCtx {
    pub current: TsVar,
    pub graph: LogicalGraph,
    pub env: TypeEnv,
}

impl CheckCtx {
    pub fn new(current: TsVar) -> CheckCtx {
        CheckCtx {
            current,
            graph: LogicalGraph::new(),
            env: TypeEnv::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TypeError {
    pub rule: String,
    pub span: Span,
    #[serde(serialize_with = "ser_opt_type")]
    pub expected: Option<Type>,
    #[serde(serialize_with = "ser_opt_type")]
    pub found: Option<Type>,
    pub detail: String,
}

fn ser_opt_type<S: serde::Serializer>(t: &Option<Type>, s: S) -> Result<S::Ok, S::Error> {
    match t {
        Some(t) => s.serialize_some(&t.to_string()),
        None => s.serialize_none(),
    }
}

impl TypeError {
    fn new(rule: &str, span: Span, detail: impl Into<String>) -> TypeError {
        TypeError {
            rule: rule.to_string(),
            span,
            expected: None,
            found: None,
            detail: detail.into(),
        }
    }

    fn mismatch(rule: &str, span: Span, what: &str, expected: &Type, found: &Type) -> TypeError {
        TypeError {
            rule: rule.to_string(),
            span,
            expected: Some(expected.clone()),
            found: Some(found.clone()),
            detail: what.to_string(),
        }
    }

    pub fn message(&self) -> String {
        match (&self.expected, &self.found) {
            (Some(e), Some(f)) => format!("{}: expected {}, found {}", self.detail, plain(e), plain(f)),
            (Some(e), None) => format!("{}: expected {}", self.detail, plain(e)),
            (None, Some(f)) => format!("{}: found {}", self.detail, plain(f)),
            (None, None) => self.detail.clone(),
        }
    }

    pub fn to_diagnostic(&self, file: Option<&str>) -> Diagnostic {
        Diagnostic::new(self.span, self.rule.clone(), self.message()).in_file(file)
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: [{}] {}", self.span, self.rule, self.message())
    }
}

impl std::error::Error for TypeError {}

/// Types of each top-level definition and of the main expression.
#[derive(Clone, Debug, PartialEq)]
pub struct ProgramTypes {
    pub decls: Vec<(Symbol, Type)>,
    pub main: Type,
}

impl ProgramTypes {
    pub fn get(&self, name: &str) -> Option<&Type> {
        self.decls
            .iter()
            .rev()
            .find(|(n, _)| n.as_str() == name)
            .map(|(_, t)| t)
    }
}

/// Checks definitions in order at the root timestamp, then main. A
/// definition's annotation must match its synthesized type exactly.
pub fn check_program(p: &Program) -> Result<ProgramTypes, TypeError> {
    check_program_under(p, &LogicalGraph::new())
}

/// As [`check_program`], with extra precedence facts assumed throughout.
pub fn check_program_under(p: &Program, graph: &LogicalGraph) -> Result<ProgramTypes, TypeError> {
    let mut ctx = CheckCtx::new(p.top.clone());
    ctx.graph = graph.clone();
    let mut decls = Vec::new();
    for d in &p.decls {
        let t = typecheck(&ctx, &d.body)?;
        let t = match &d.annot {
            Some(annot) => {
                let annot = beta_normalize(annot);
                if !alpha_eq(&annot, &t) {
                    return Err(TypeError::mismatch(
                        "Def-Annot",
                        d.span,
                        &format!("definition `{}` does not have its declared type", d.name),
                        &annot,
                        &t,
                    ));
                }
                annot
            }
            None => t,
        };
        ctx.env.push(d.name.clone(), t.clone());
        decls.push((d.name.clone(), t));
    }
    let main = typecheck(&ctx, &p.main)?;
    Ok(ProgramTypes { decls, main })
}

/// δ; Δ; Γ ⊢ e : ρ. The result is β-normal.
pub fn typecheck(ctx: &CheckCtx, e: &Expr) -> Result<Type, TypeError> {
    let mut c = Checker {
        current: ctx.current.clone(),
        graph: ctx.graph.clone(),
        env: ctx.env.clone(),
    };
    c.check(e)
}

struct Checker {
    current: TsVar,
    graph: LogicalGraph,
    env: TypeEnv,
}

type R = Result<Type, TypeError>;

fn plain(t: &Type) -> String {
    print_type_plain(t)
}

/// A boxed type shown without its stamp.
fn shape(b: &BoxedType) -> String {
    let t = print_type_plain(&Type::at(b.clone(), Symbol::new("_")));
    t.trim_end_matches(" @ _").to_string()
}

fn same(a: &Type, b: &Type) -> bool {
    alpha_eq(a, b)
}

impl Checker {
    fn kind_is(&self, rule: &str, span: Span, t: &Type, k: Kind) -> Result<(), TypeError> {
        match kind_of(&self.env, t) {
            Ok(found) if found == k => Ok(()),
            Ok(found) => Err(TypeError::new(
                rule,
                span,
                format!("{} has kind {found}, expected {k}", plain(t)),
            )),
            Err(err) => Err(TypeError::new(rule, span, err.to_string())),
        }
    }

    fn bind<T>(&mut self, x: &Symbol, t: Type, f: impl FnOnce(&mut Self) -> T) -> T {
        let depth = self.env.depth();
        self.env.push(x.clone(), t);
        let r = f(self);
        self.env.truncate(depth);
        r
    }

    fn expect(&mut self, rule: &str, what: &str, e: &Expr, want: &Type) -> Result<(), TypeError> {
        let t = self.check(e)?;
        if same(&t, want) {
            Ok(())
        } else {
            Err(TypeError::mismatch(rule, e.span, what, want, &t))
        }
    }

    fn array_elem(&mut self, rule: &str, e: &Expr) -> R {
        match self.check(e)? {
            Type::At(b, _) => match *b {
                BoxedType::Array(elem) => Ok(elem),
                other => Err(TypeError::new(
                    rule,
                    e.span,
                    format!("expected an array, found {}", shape(&other)),
                )),
            },
            t => Err(TypeError::new(rule, e.span, format!("expected an array, found {}", plain(&t)))),
        }
    }

    fn check(&mut self, e: &Expr) -> R {
        use ExprKind::*;
        let span = e.span;
        match &e.kind {
            Val(v) => match v {
                Value::Unit => Ok(Type::unit()),
                Value::Bool(_) => Ok(Type::bool()),
                Value::Int(_) => Ok(Type::int()),
                Value::Loc(_) | Value::Fold(_) => Err(TypeError::new(
                    "T-Val",
                    span,
                    "runtime values cannot be typed in source programs",
                )),
            },
            Var(x) => self
                .env
                .lookup(x)
                .cloned()
                .ok_or_else(|| TypeError::new("T-Var", span, format!("unbound variable `{x}`"))),
            Let(x, e1, e2) => {
                let t1 = self.check(e1)?;
                self.bind(x, t1, |c| c.check(e2))
            }
            If(c, a, b) => {
                self.expect("T-If", "condition", c, &Type::bool())?;
                let ta = self.check(a)?;
                let tb = self.check(b)?;
                if same(&ta, &tb) {
                    Ok(ta)
                } else {
                    Err(TypeError::mismatch("T-If", b.span, "branches differ", &ta, &tb))
                }
            }
            Prim(op, a, b) => self.prim(*op, a, b, span),
            Abs(abs) => {
                let annot = &abs.annot;
                for t in annot.param_types.iter().chain(std::iter::once(&annot.ret)) {
                    self.kind_is("T-Abs", span, t, Kind::STAR)?;
                }
                let arrow = ArrowType {
                    ts_params: annot.ts_params.clone(),
                    constraints: annot.constraints.clone(),
                    args: annot.param_types.iter().map(beta_normalize).collect(),
                    run: annot.run.clone(),
                    ret: Box::new(beta_normalize(&annot.ret)),
                };
                let self_ty = Type::arrow(arrow.clone(), self.current.clone());
                let mut graph = self.graph.union(&arrow.constraints);
                graph.insert(self.current.clone(), arrow.run.clone());
                let saved_graph = std::mem::replace(&mut self.graph, graph);
                let saved_current = std::mem::replace(&mut self.current, arrow.run.clone());
                let depth = self.env.depth();
                self.env.push(abs.name.clone(), self_ty.clone());
                for (x, t) in abs.params.iter().zip(&arrow.args) {
                    self.env.push(x.clone(), t.clone());
                }
                let body = self.check(&abs.body);
                self.env.truncate(depth);
                self.graph = saved_graph;
                self.current = saved_current;
                let body = body?;
                if same(&body, &arrow.ret) {
                    Ok(self_ty)
                } else {
                    Err(TypeError::mismatch(
                        "T-Abs",
                        abs.body.span,
                        &format!("body of `{}` does not have the declared return type", abs.name),
                        &arrow.ret,
                        &body,
                    ))
                }
            }
            Call(callee, ts, args) => self.call(callee, ts, args, span),
            Pair(a, b) => {
                let ta = self.check(a)?;
                let tb = self.check(b)?;
                Ok(Type::product(ta, tb, self.current.clone()))
            }
            Proj(side, a) => match self.check(a)? {
                Type::At(b, _) => match *b {
                    BoxedType::Product(l, r) => Ok(if *side == Side::Left { l } else { r }),
                    other => Err(TypeError::new(
                        "T-Proj",
                        a.span,
                        format!("expected a pair, found {}", shape(&other)),
                    )),
                },
                t => Err(TypeError::new("T-Proj", a.span, format!("expected a pair, found {}", plain(&t)))),
            },
            Inj(side, ann, a) => {
                let ann = beta_normalize(ann);
                self.kind_is("T-Inj", span, &ann, Kind::STAR)?;
                let (l, r) = match &ann {
                    Type::At(b, d) if *d == self.current => match &**b {
                        BoxedType::Sum(l, r) => (l.clone(), r.clone()),
                        _ => {
                            return Err(TypeError::new(
                                "T-Inj",
                                span,
                                format!("injection annotation {} is not a sum", plain(&ann)),
                            ))
                        }
                    },
                    _ => {
                        return Err(TypeError::new(
                            "T-Inj",
                            span,
                            format!(
                                "injection annotation {} must be a sum stamped with the current timestamp {}",
                                plain(&ann),
                                self.current.base()
                            ),
                        ))
                    }
                };
                let want = if *side == Side::Left { l } else { r };
                self.expect("T-Inj", "injected value", a, &want)?;
                Ok(ann)
            }
            Case(scrut, x1, e1, x2, e2) => {
                let (l, r) = match self.check(scrut)? {
                    Type::At(b, _) => match *b {
                        BoxedType::Sum(l, r) => (l, r),
                        other => {
                            return Err(TypeError::new(
                                "T-Case",
                                scrut.span,
                                format!("expected a sum, found {}", shape(&other)),
                            ))
                        }
                    },
                    t => {
                        return Err(TypeError::new(
                            "T-Case",
                            scrut.span,
                            format!("expected a sum, found {}", plain(&t)),
                        ))
                    }
                };
                let t1 = self.bind(x1, l, |c| c.check(e1))?;
                let t2 = self.bind(x2, r, |c| c.check(e2))?;
                if same(&t1, &t2) {
                    Ok(t1)
                } else {
                    Err(TypeError::mismatch("T-Case", e2.span, "arms differ", &t1, &t2))
                }
            }
            Alloc(n, v) => {
                self.expect("T-Array", "array length", n, &Type::int())?;
                let t = self.check(v)?;
                Ok(Type::array(t, self.current.clone()))
            }
            Load(a, i) => {
                let elem = self.array_elem("T-Load", a)?;
                self.expect("T-Load", "index", i, &Type::int())?;
                Ok(elem)
            }
            Store(a, i, v) => {
                let elem = self.array_elem("T-Store", a)?;
                self.expect("T-Store", "index", i, &Type::int())?;
                self.expect("T-Store", "stored value does not match the element type", v, &elem)?;
                Ok(Type::unit())
            }
            Length(a) => {
                self.array_elem("T-Length", a)?;
                Ok(Type::int())
            }
            Cas(a, i, old, new) => {
                let elem = self.array_elem("T-CAS", a)?;
                self.expect("T-CAS", "index", i, &Type::int())?;
                self.expect("T-CAS", "expected value does not match the element type", old, &elem)?;
                self.expect("T-CAS", "new value does not match the element type", new, &elem)?;
                Ok(Type::bool())
            }
            Fold(ann, a) => {
                let ann = beta_normalize(ann);
                self.kind_is("T-Fold", span, &ann, Kind::STAR)?;
                let unrolled = self.unroll("T-Fold", span, &ann)?;
                self.expect("T-Fold", "folded value", a, &unrolled)?;
                Ok(ann)
            }
            Unfold(a) => {
                let t = self.check(a)?;
                self.kind_is("T-Unfold", span, &t, Kind::STAR)?;
                self.unroll("T-Unfold", a.span, &t)
            }
            Par(p1, p2, a, b) => {
                let d = self.current.clone();
                let mut results = Vec::new();
                for (phi, e) in [(p1, a), (p2, b)] {
                    self.kind_is("T-Par", span, phi, Kind::STAR1)?;
                    let t = self.check(e)?;
                    let Type::At(body, stamp) = &t else {
                        return Err(TypeError::new("T-Par", e.span, format!("expected a closure, found {}", plain(&t))));
                    };
                    let child = Symbol::fresh("d'");
                    let want_arrow = ArrowType {
                        ts_params: vec![child.clone()],
                        constraints: LogicalGraph::edge(d.clone(), child.clone()),
                        args: vec![Type::unit()],
                        run: child.clone(),
                        ret: Box::new(beta_normalize(&Type::ts_app((**phi).clone(), child))),
                    };
                    let want = Type::arrow(want_arrow, stamp.clone());
                    if !matches!(&**body, BoxedType::Arrow(_)) || !same(&t, &want) {
                        return Err(TypeError::mismatch("T-Par", e.span, "parallel branch", &want, &t));
                    }
                    results.push(beta_normalize(&Type::ts_app((**phi).clone(), d.clone())));
                }
                let r = results.pop().unwrap();
                let l = results.pop().unwrap();
                Ok(Type::product(l, r, d))
            }
            ActivePar(..) => Err(TypeError::new(
                "T-Par",
                span,
                "active parallel pairs cannot be typed in source programs",
            )),
            Sub(ann, a) => {
                let ann = beta_normalize(ann);
                self.kind_is("T-Subtiming", span, &ann, Kind::STAR)?;
                let t = self.check(a)?;
                if subtime(&self.graph, &self.current, &t, &ann) {
                    Ok(ann)
                } else {
                    Err(TypeError::mismatch(
                        "T-Subtiming",
                        span,
                        &format!("no subtiming derivation at {}", self.current.base()),
                        &ann,
                        &t,
                    ))
                }
            }
            GetRoot(x, a) => {
                let t = self
                    .env
                    .lookup(x)
                    .cloned()
                    .ok_or_else(|| TypeError::new("T-GetRoot", span, format!("unbound variable `{x}`")))?;
                let stamp = match &t {
                    Type::At(b, d) if matches!(**b, BoxedType::Array(_)) => d.clone(),
                    Type::Rec(_, _, d) => d.clone(),
                    _ => {
                        return Err(TypeError::new(
                            "T-GetRoot",
                            span,
                            format!("`{x}` has type {}; only arrays and recursive types have a root", plain(&t)),
                        ))
                    }
                };
                let mut graph = self.graph.clone();
                graph.insert(stamp, self.current.clone());
                let saved = std::mem::replace(&mut self.graph, graph);
                let r = self.check(a);
                self.graph = saved;
                r
            }
            TAbs(a, k, body) => {
                if !very_pure(body) {
                    return Err(TypeError::new(
                        "T-TAbs",
                        span,
                        "the body of a type abstraction must be very pure",
                    ));
                }
                let depth = self.env.depth();
                self.env.push_tvar(a.clone(), *k);
                let t = self.check(body);
                self.env.truncate(depth);
                Ok(Type::forall(a.clone(), *k, t?))
            }
            TApp(a, ann) => match self.check(a)? {
                Type::Forall(v, k, body) => {
                    let ann = beta_normalize(ann);
                    self.kind_is("T-TApp", span, &ann, k)?;
                    Ok(beta_normalize(&ty_subst(&body, &v, &ann)))
                }
                t => Err(TypeError::new(
                    "T-TApp",
                    a.span,
                    format!("expected a universal type, found {}", plain(&t)),
                )),
            },
        }
    }

    /// `[μα.σ@δ / α]σ @ δ`, requiring the stamp to be the current timestamp.
    fn unroll(&self, rule: &str, span: Span, t: &Type) -> R {
        match t {
            Type::Rec(a, body, d) if *d == self.current => {
                let b = Type::At(body.clone(), d.clone());
                Ok(beta_normalize(&ty_subst(&b, a, t)))
            }
            Type::Rec(_, _, d) => Err(TypeError::new(
                rule,
                span,
                format!(
                    "recursive type {} is stamped {} but the current timestamp is {}; restamp it with sub[...] first",
                    plain(t),
                    d.base(),
                    self.current.base()
                ),
            )),
            _ => Err(TypeError::new(rule, span, format!("expected a recursive type, found {}", plain(t)))),
        }
    }

    fn prim(&mut self, op: Prim, a: &Expr, b: &Expr, span: Span) -> R {
        let (arg, res) = match op {
            Prim::Add | Prim::Sub | Prim::Mul | Prim::Div | Prim::Mod => (Type::int(), Type::int()),
            Prim::Lt | Prim::Le | Prim::Gt | Prim::Ge => (Type::int(), Type::bool()),
            Prim::Or | Prim::And => (Type::bool(), Type::bool()),
            Prim::Eq => {
                let ta = self.check(a)?;
                let tb = self.check(b)?;
                if !same(&ta, &tb) {
                    return Err(TypeError::mismatch("T-Prim", b.span, "operands of ==", &ta, &tb));
                }
                self.kind_is("T-Prim", span, &ta, Kind::STAR)?;
                return Ok(Type::bool());
            }
        };
        let what = format!("operand of {}", op.symbol());
        self.expect("T-Prim", &what, a, &arg)?;
        self.expect("T-Prim", &what, b, &arg)?;
        Ok(res)
    }

    fn call(&mut self, callee: &Expr, ts: &[TsVar], args: &[Expr], span: Span) -> R {
        let t = self.check(callee)?;
        let arrow = match &t {
            Type::At(b, _) => match &**b {
                BoxedType::Arrow(a) => a.clone(),
                _ => return Err(TypeError::new("T-App", callee.span, format!("expected a function, found {}", plain(&t)))),
            },
            _ => return Err(TypeError::new("T-App", callee.span, format!("expected a function, found {}", plain(&t)))),
        };
        if ts.len() != arrow.ts_params.len() {
            return Err(TypeError::new(
                "T-App",
                span,
                format!(
                    "function takes {} timestamp argument(s), given {}",
                    arrow.ts_params.len(),
                    ts.len()
                ),
            ));
        }
        if args.len() != arrow.args.len() {
            return Err(TypeError::new(
                "T-App",
                span,
                format!("function takes {} argument(s), given {}", arrow.args.len(), args.len()),
            ));
        }
        let m: TsMap = arrow.ts_params.iter().cloned().zip(ts.iter().cloned()).collect();
        let var = |x: &TsVar| m.get(x).cloned().unwrap_or_else(|| x.clone());
        let run = var(&arrow.run);
        if run != self.current {
            return Err(TypeError::new(
                "T-App",
                span,
                format!("function runs at {} but is called at {}", run.base(), self.current.base()),
            ));
        }
        let constraints = arrow.constraints.map(var);
        if !graph_subsumes(&self.graph, &constraints) {
            let missing: Vec<String> = constraints
                .edges()
                .filter(|(x, y)| !crate::types::reachable(&self.graph, x, y))
                .map(|(x, y)| format!("{} < {}", x.base(), y.base()))
                .collect();
            return Err(TypeError::new(
                "T-App",
                span,
                format!("unsatisfied constraint(s) {}", missing.join(", ")),
            ));
        }
        for (arg, want) in args.iter().zip(&arrow.args) {
            let want = beta_normalize(&tsubst(want, &m));
            self.expect("T-App", "argument", arg, &want)?;
        }
        Ok(beta_normalize(&tsubst(&arrow.ret, &m)))
    }
}
