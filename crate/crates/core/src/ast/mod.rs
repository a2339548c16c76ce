//! Terms of the language: values, heap blocks, expressions including the
//! runtime-only forms, substitution and evaluation contexts.

mod context;

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::Serialize;

pub use context::{decompose, focus_mut, focus_ref, plug, Decomposition, Focus, FocusRef, Frame};

pub use crate::int::Int;
pub use crate::symbol::Symbol;
use crate::types::{ArrowType, LogicalGraph, TsVar, TyVar, Type};

/// A source position. Line 0 marks synthesized nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Span {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Location(pub u64);

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(Int),
    Loc(Location),
    Fold(Box<Value>),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Int(Int::from(n))
    }

    pub fn as_loc(&self) -> Option<Location> {
        match self {
            Value::Loc(l) => Some(*l),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<&Int> {
        match self {
            Value::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn for_each_loc(&self, f: &mut impl FnMut(Location)) {
        match self {
            Value::Loc(l) => f(*l),
            Value::Fold(v) => v.for_each_loc(f),
            _ => {}
        }
    }
}

/// Left/right choice: projections, injections, task-tree positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> u8 {
        match self {
            Side::Left => 1,
            Side::Right => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Prim {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
    Or,
    And,
}

impl Prim {
    pub const ALL: [Prim; 12] = [
        Prim::Add,
        Prim::Sub,
        Prim::Mul,
        Prim::Div,
        Prim::Mod,
        Prim::Eq,
        Prim::Lt,
        Prim::Le,
        Prim::Gt,
        Prim::Ge,
        Prim::Or,
        Prim::And,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Prim::Add => "+",
            Prim::Sub => "-",
            Prim::Mul => "*",
            Prim::Div => "/",
            Prim::Mod => "mod",
            Prim::Eq => "==",
            Prim::Lt => "<",
            Prim::Le => "<=",
            Prim::Gt => ">",
            Prim::Ge => ">=",
            Prim::Or => "||",
            Prim::And => "&&",
        }
    }
}

/// The signature written on an abstraction: everything T-Abs needs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AbsAnnot {
    pub ts_params: Vec<TsVar>,
    pub constraints: LogicalGraph,
    pub param_types: Vec<Type>,
    pub run: TsVar,
    pub ret: Type,
}

impl AbsAnnot {
    pub fn arrow(&self) -> ArrowType {
        ArrowType {
            ts_params: self.ts_params.clone(),
            constraints: self.constraints.clone(),
            args: self.param_types.clone(),
            run: self.run.clone(),
            ret: Box::new(self.ret.clone()),
        }
    }
}

/// `μf.λ[x̄].e` with its annotation. Free term variables are cached so that
/// substitution can skip closed bodies.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Abstraction {
    pub name: Symbol,
    pub params: Vec<Symbol>,
    pub annot: AbsAnnot,
    pub body: Expr,
    free: Vec<Symbol>,
}

impl Abstraction {
    pub fn new(name: Symbol, params: Vec<Symbol>, annot: AbsAnnot, body: Expr) -> Abstraction {
        let mut abs = Abstraction {
            name,
            params,
            annot,
            body,
            free: Vec::new(),
        };
        abs.refresh_free();
        abs
    }

    fn refresh_free(&mut self) {
        let mut set = self.body.free_vars();
        set.remove(&self.name);
        for p in &self.params {
            set.remove(p);
        }
        self.free = set.into_iter().collect();
    }

    pub fn free_vars(&self) -> &[Symbol] {
        &self.free
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    Array(Vec<Value>),
    Pair(Value, Value),
    Inj(Side, Value),
    Closure(Arc<Abstraction>),
}

impl Block {
    pub fn is_mutable(&self) -> bool {
        matches!(self, Block::Array(_))
    }

    pub fn for_each_loc(&self, f: &mut impl FnMut(Location)) {
        match self {
            Block::Array(vs) => vs.iter().for_each(|v| v.for_each_loc(f)),
            Block::Pair(a, b) => {
                a.for_each_loc(f);
                b.for_each_loc(f);
            }
            Block::Inj(_, v) => v.for_each_loc(f),
            Block::Closure(abs) => abs.body.for_each_loc(f),
        }
    }
}

#[derive(Clone, Debug, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

// Spans are metadata: structurally equal terms compare equal wherever they
// were parsed.
impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        self.kind == other.kind
    }
}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.kind.hash(state)
    }
}

impl Default for Expr {
    fn default() -> Expr {
        Expr::val(Value::Unit)
    }
}

pub type Ann = Arc<Type>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Val(Value),
    Var(Symbol),
    Let(Symbol, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Prim(Prim, Box<Expr>, Box<Expr>),
    Abs(Arc<Abstraction>),
    Call(Box<Expr>, Vec<TsVar>, Vec<Expr>),
    Pair(Box<Expr>, Box<Expr>),
    Proj(Side, Box<Expr>),
    Inj(Side, Ann, Box<Expr>),
    Case(Box<Expr>, Symbol, Box<Expr>, Symbol, Box<Expr>),
    Alloc(Box<Expr>, Box<Expr>),
    Load(Box<Expr>, Box<Expr>),
    Store(Box<Expr>, Box<Expr>, Box<Expr>),
    Length(Box<Expr>),
    Cas(Box<Expr>, Box<Expr>, Box<Expr>, Box<Expr>),
    Fold(Ann, Box<Expr>),
    Unfold(Box<Expr>),
    Par(Ann, Ann, Box<Expr>, Box<Expr>),
    ActivePar(Box<Expr>, Box<Expr>),
    Sub(Ann, Box<Expr>),
    GetRoot(Symbol, Box<Expr>),
    TAbs(TyVar, crate::types::Kind, Box<Expr>),
    TApp(Box<Expr>, Ann),
}

impl Expr {
    pub fn new(kind: ExprKind) -> Expr {
        Expr {
            kind,
            span: Span::default(),
        }
    }

    pub fn at(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    pub fn val(v: Value) -> Expr {
        Expr::new(ExprKind::Val(v))
    }

    pub fn var(x: &str) -> Expr {
        Expr::new(ExprKind::Var(Symbol::new(x)))
    }

    pub fn is_value(&self) -> bool {
        matches!(self.kind, ExprKind::Val(_))
    }

    pub fn as_value(&self) -> Option<&Value> {
        match &self.kind {
            ExprKind::Val(v) => Some(v),
            _ => None,
        }
    }

    /// Every location occurring syntactically, including inside abstraction
    /// bodies and active parallel pairs.
    pub fn locs(&self) -> BTreeSet<Location> {
        let mut out = BTreeSet::new();
        self.for_each_loc(&mut |l| {
            out.insert(l);
        });
        out
    }

    pub fn for_each_loc(&self, f: &mut impl FnMut(Location)) {
        self.visit(&mut |e| {
            if let ExprKind::Val(v) = &e.kind {
                v.for_each_loc(f)
            }
            true
        });
    }

    /// Locations outside any active parallel pair: the roots held by the
    /// evaluation context around the pair.
    pub fn for_each_loc_outside_par(&self, f: &mut impl FnMut(Location)) {
        self.visit(&mut |e| match &e.kind {
            ExprKind::Val(v) => {
                v.for_each_loc(f);
                true
            }
            ExprKind::ActivePar(..) => false,
            _ => true,
        });
    }

    /// Pre-order traversal; returning false prunes the subtree.
    pub fn visit(&self, f: &mut impl FnMut(&Expr) -> bool) {
        if !f(self) {
            return;
        }
        self.for_each_child(|c| c.visit(f));
    }

    pub fn for_each_child(&self, mut f: impl FnMut(&Expr)) {
        use ExprKind::*;
        match &self.kind {
            Val(_) | Var(_) => {}
            Abs(abs) => f(&abs.body),
            Proj(_, a) | Inj(_, _, a) | Length(a) | Fold(_, a) | Unfold(a) | Sub(_, a)
            | GetRoot(_, a) | TAbs(_, _, a) | TApp(a, _) => f(a),
            Let(_, a, b) | Prim(_, a, b) | Pair(a, b) | Alloc(a, b) | Load(a, b)
            | Par(_, _, a, b) | ActivePar(a, b) => {
                f(a);
                f(b)
            }
            If(a, b, c) | Store(a, b, c) | Case(a, _, b, _, c) => {
                f(a);
                f(b);
                f(c)
            }
            Cas(a, b, c, d) => {
                f(a);
                f(b);
                f(c);
                f(d)
            }
            Call(callee, _, args) => {
                f(callee);
                args.iter().for_each(f)
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Symbol>, out: &mut BTreeSet<Symbol>) {
        use ExprKind::*;
        let mut note = |x: &Symbol, bound: &Vec<Symbol>| {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        };
        match &self.kind {
            Var(x) => note(x, bound),
            GetRoot(x, e) => {
                note(x, bound);
                e.collect_free(bound, out)
            }
            Let(x, e1, e2) => {
                e1.collect_free(bound, out);
                bound.push(x.clone());
                e2.collect_free(bound, out);
                bound.pop();
            }
            Case(e, x1, e1, x2, e2) => {
                e.collect_free(bound, out);
                bound.push(x1.clone());
                e1.collect_free(bound, out);
                bound.pop();
                bound.push(x2.clone());
                e2.collect_free(bound, out);
                bound.pop();
            }
            Abs(abs) => {
                for x in &abs.free {
                    note(x, bound);
                }
            }
            _ => self.for_each_child(|c| c.collect_free(bound, out)),
        }
    }

    /// `[x̄ ↦ v̄]e`. Values are closed, so no capture can occur.
    pub fn subst(&self, bindings: &[(Symbol, Value)]) -> Expr {
        let mut e = self.clone();
        e.subst_in_place(bindings);
        e
    }

    pub fn subst_in_place(&mut self, bindings: &[(Symbol, Value)]) {
        if bindings.is_empty() {
            return;
        }
        use ExprKind::*;
        match &mut self.kind {
            Var(x) => {
                if let Some((_, v)) = bindings.iter().rev().find(|(y, _)| y == x) {
                    self.kind = Val(v.clone());
                }
            }
            Val(_) => {}
            Let(x, e1, e2) => {
                e1.subst_in_place(bindings);
                let inner = without(bindings, &[&*x]);
                e2.subst_in_place(&inner);
            }
            Case(e, x1, e1, x2, e2) => {
                e.subst_in_place(bindings);
                e1.subst_in_place(&without(bindings, &[&*x1]));
                e2.subst_in_place(&without(bindings, &[&*x2]));
            }
            Abs(abs) => {
                if !abs.free.iter().any(|x| bindings.iter().any(|(y, _)| y == x)) {
                    return;
                }
                let a = Arc::make_mut(abs);
                let mut names: Vec<&Symbol> = a.params.iter().collect();
                names.push(&a.name);
                let inner = without(bindings, &names);
                a.body.subst_in_place(&inner);
                a.free.retain(|x| !inner.iter().any(|(y, _)| y == x));
            }
            _ => self.for_each_child_mut(|c| c.subst_in_place(bindings)),
        }
    }

    pub fn for_each_child_mut(&mut self, mut f: impl FnMut(&mut Expr)) {
        use ExprKind::*;
        match &mut self.kind {
            Val(_) | Var(_) => {}
            Abs(abs) => f(&mut Arc::make_mut(abs).body),
            Proj(_, a) | Inj(_, _, a) | Length(a) | Fold(_, a) | Unfold(a) | Sub(_, a)
            | GetRoot(_, a) | TAbs(_, _, a) | TApp(a, _) => f(a),
            Let(_, a, b) | Prim(_, a, b) | Pair(a, b) | Alloc(a, b) | Load(a, b)
            | Par(_, _, a, b) | ActivePar(a, b) => {
                f(a);
                f(b)
            }
            If(a, b, c) | Store(a, b, c) | Case(a, _, b, _, c) => {
                f(a);
                f(b);
                f(c)
            }
            Cas(a, b, c, d) => {
                f(a);
                f(b);
                f(c);
                f(d)
            }
            Call(callee, _, args) => {
                f(callee);
                args.iter_mut().for_each(f)
            }
        }
    }

    /// Removes the annotation nodes that only select typing rules. The
    /// runtime treats them as transparent.
    pub fn erase(&self) -> Expr {
        use ExprKind::*;
        match &self.kind {
            Sub(_, e) | GetRoot(_, e) | TAbs(_, _, e) | TApp(e, _) => e.erase(),
            Abs(abs) => {
                let mut a = (**abs).clone();
                a.body = a.body.erase();
                Expr::at(Abs(Arc::new(a)), self.span)
            }
            _ => {
                let mut out = self.clone();
                out.for_each_child_mut(|c| *c = c.erase());
                out
            }
        }
    }

    pub fn is_erased(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |e| {
            if matches!(
                e.kind,
                ExprKind::Sub(..) | ExprKind::GetRoot(..) | ExprKind::TAbs(..) | ExprKind::TApp(..)
            ) {
                ok = false;
            }
            ok
        });
        ok
    }

    /// True when the term contains no location, folded value or active pair.
    pub fn is_source(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |e| {
            match &e.kind {
                ExprKind::Val(Value::Loc(_) | Value::Fold(_)) | ExprKind::ActivePar(..) => {
                    ok = false
                }
                _ => {}
            }
            ok
        });
        ok
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| {
            n += 1;
            true
        });
        n
    }
}

fn without(bindings: &[(Symbol, Value)], names: &[&Symbol]) -> Vec<(Symbol, Value)> {
    bindings
        .iter()
        .filter(|(x, _)| !names.contains(&x))
        .cloned()
        .collect()
}
