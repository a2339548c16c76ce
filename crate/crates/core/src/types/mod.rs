//! Types, kinds and logical graphs, with the auxiliary static judgments:
//! kinding, β-normalization, reachability, graph subsumption and the
//! valid-variable check used for recursive subtiming.

mod graph;
mod kind;
mod subst;
mod valid;

use std::collections::BTreeSet;
use std::fmt;

pub use graph::{graph_subsumes, reachable, LogicalGraph};
pub use kind::{kind_of, KindError};
pub use subst::{alpha_eq, beta_normalize, subst_types, tsubst, tsubst_one, ty_subst, TsMap};
pub use valid::{valid_variable, TypeRef};

use crate::symbol::Symbol;

pub type TsVar = Symbol;
pub type TyVar = Symbol;

/// Kind levels: 0 is `*`, n is `*` expecting n timestamp arguments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Kind(pub u32);

impl Kind {
    pub const STAR: Kind = Kind(0);
    pub const STAR1: Kind = Kind(1);

    pub fn succ(self) -> Kind {
        Kind(self.0 + 1)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("*")?;
        for _ in 0..self.0 {
            f.write_str("+")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaseType {
    Unit,
    Bool,
    Int,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Base(BaseType),
    TsLam(TsVar, Box<Type>),
    TsApp(Box<Type>, TsVar),
    Forall(TyVar, Kind, Box<Type>),
    Rec(TyVar, Box<BoxedType>, TsVar),
    Var(TyVar),
    At(Box<BoxedType>, TsVar),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoxedType {
    Array(Type),
    Product(Type, Type),
    Sum(Type, Type),
    Arrow(ArrowType),
}

/// `∀ ts_params. constraints. (args) ->run ret`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ArrowType {
    pub ts_params: Vec<TsVar>,
    pub constraints: LogicalGraph,
    pub args: Vec<Type>,
    pub run: TsVar,
    pub ret: Box<Type>,
}

impl Type {
    pub fn unit() -> Type {
        Type::Base(BaseType::Unit)
    }

    pub fn bool() -> Type {
        Type::Base(BaseType::Bool)
    }

    pub fn int() -> Type {
        Type::Base(BaseType::Int)
    }

    pub fn at(b: BoxedType, d: TsVar) -> Type {
        Type::At(Box::new(b), d)
    }

    pub fn array(elem: Type, d: TsVar) -> Type {
        Type::at(BoxedType::Array(elem), d)
    }

    pub fn product(a: Type, b: Type, d: TsVar) -> Type {
        Type::at(BoxedType::Product(a, b), d)
    }

    pub fn sum(a: Type, b: Type, d: TsVar) -> Type {
        Type::at(BoxedType::Sum(a, b), d)
    }

    pub fn arrow(a: ArrowType, d: TsVar) -> Type {
        Type::at(BoxedType::Arrow(a), d)
    }

    pub fn rec(a: TyVar, body: BoxedType, d: TsVar) -> Type {
        Type::Rec(a, Box::new(body), d)
    }

    pub fn ts_lam(d: TsVar, body: Type) -> Type {
        Type::TsLam(d, Box::new(body))
    }

    pub fn ts_app(f: Type, d: TsVar) -> Type {
        Type::TsApp(Box::new(f), d)
    }

    pub fn forall(a: TyVar, k: Kind, body: Type) -> Type {
        Type::Forall(a, k, Box::new(body))
    }

    /// The outermost stamp of a boxed or recursive type.
    pub fn stamp(&self) -> Option<&TsVar> {
        match self {
            Type::At(_, d) | Type::Rec(_, _, d) => Some(d),
            _ => None,
        }
    }

    pub fn free_ts(&self) -> BTreeSet<TsVar> {
        let mut out = BTreeSet::new();
        self.collect_free_ts(&mut Vec::new(), &mut out);
        out
    }

    pub fn free_tyvars(&self) -> BTreeSet<TyVar> {
        let mut out = BTreeSet::new();
        self.collect_free_ty(&mut Vec::new(), &mut out);
        out
    }

    pub fn mentions_ty(&self, a: &TyVar) -> bool {
        self.free_tyvars().contains(a)
    }

    pub(crate) fn collect_free_ts(&self, bound: &mut Vec<TsVar>, out: &mut BTreeSet<TsVar>) {
        let mut note = |d: &TsVar, bound: &Vec<TsVar>| {
            if !bound.contains(d) {
                out.insert(d.clone());
            }
        };
        match self {
            Type::Base(_) | Type::Var(_) => {}
            Type::TsLam(d, body) => {
                bound.push(d.clone());
                body.collect_free_ts(bound, out);
                bound.pop();
            }
            Type::TsApp(f, d) => {
                note(d, bound);
                f.collect_free_ts(bound, out);
            }
            Type::Forall(_, _, body) => body.collect_free_ts(bound, out),
            Type::Rec(_, b, d) | Type::At(b, d) => {
                note(d, bound);
                b.collect_free_ts(bound, out);
            }
        }
    }

    pub(crate) fn collect_free_ty(&self, bound: &mut Vec<TyVar>, out: &mut BTreeSet<TyVar>) {
        match self {
            Type::Base(_) => {}
            Type::Var(a) => {
                if !bound.contains(a) {
                    out.insert(a.clone());
                }
            }
            Type::TsLam(_, body) | Type::TsApp(body, _) => body.collect_free_ty(bound, out),
            Type::Forall(a, _, body) => {
                bound.push(a.clone());
                body.collect_free_ty(bound, out);
                bound.pop();
            }
            Type::Rec(a, b, _) => {
                bound.push(a.clone());
                b.collect_free_ty(bound, out);
                bound.pop();
            }
            Type::At(b, _) => b.collect_free_ty(bound, out),
        }
    }

    /// Number of nodes, used to bound generators and searches.
    pub fn size(&self) -> usize {
        match self {
            Type::Base(_) | Type::Var(_) => 1,
            Type::TsLam(_, b) | Type::TsApp(b, _) | Type::Forall(_, _, b) => 1 + b.size(),
            Type::Rec(_, b, _) | Type::At(b, _) => 1 + b.size(),
        }
    }
}

impl BoxedType {
    pub(crate) fn collect_free_ts(&self, bound: &mut Vec<TsVar>, out: &mut BTreeSet<TsVar>) {
        match self {
            BoxedType::Array(t) => t.collect_free_ts(bound, out),
            BoxedType::Product(a, b) | BoxedType::Sum(a, b) => {
                a.collect_free_ts(bound, out);
                b.collect_free_ts(bound, out);
            }
            BoxedType::Arrow(arrow) => {
                let n = bound.len();
                bound.extend(arrow.ts_params.iter().cloned());
                for (x, y) in arrow.constraints.edges() {
                    for d in [x, y] {
                        if !bound.contains(d) {
                            out.insert(d.clone());
                        }
                    }
                }
                if !bound.contains(&arrow.run) {
                    out.insert(arrow.run.clone());
                }
                for a in &arrow.args {
                    a.collect_free_ts(bound, out);
                }
                arrow.ret.collect_free_ts(bound, out);
                bound.truncate(n);
            }
        }
    }

    pub(crate) fn collect_free_ty(&self, bound: &mut Vec<TyVar>, out: &mut BTreeSet<TyVar>) {
        match self {
            BoxedType::Array(t) => t.collect_free_ty(bound, out),
            BoxedType::Product(a, b) | BoxedType::Sum(a, b) => {
                a.collect_free_ty(bound, out);
                b.collect_free_ty(bound, out);
            }
            BoxedType::Arrow(arrow) => {
                for a in &arrow.args {
                    a.collect_free_ty(bound, out);
                }
                arrow.ret.collect_free_ty(bound, out);
            }
        }
    }

    pub fn free_ts(&self) -> BTreeSet<TsVar> {
        let mut out = BTreeSet::new();
        self.collect_free_ts(&mut Vec::new(), &mut out);
        out
    }

    pub fn free_tyvars(&self) -> BTreeSet<TyVar> {
        let mut out = BTreeSet::new();
        self.collect_free_ty(&mut Vec::new(), &mut out);
        out
    }

    pub fn size(&self) -> usize {
        match self {
            BoxedType::Array(t) => 1 + t.size(),
            BoxedType::Product(a, b) | BoxedType::Sum(a, b) => 1 + a.size() + b.size(),
            BoxedType::Arrow(a) => 1 + a.args.iter().map(Type::size).sum::<usize>() + a.ret.size(),
        }
    }
}

/// Γ: term variables to types and type variables to kinds. Lookups scan from
/// the most recent binding, so shadowing is positional.
#[derive(Clone, Debug, Default)]
pub struct TypeEnv {
    terms: Vec<(Symbol, Type)>,
    tvars: Vec<(TyVar, Kind)>,
}

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn lookup(&self, x: &Symbol) -> Option<&Type> {
        self.terms.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    pub fn kind_of_var(&self, a: &TyVar) -> Option<Kind> {
        self.tvars.iter().rev().find(|(b, _)| b == a).map(|(_, k)| *k)
    }

    pub fn push(&mut self, x: Symbol, t: Type) {
        self.terms.push((x, t));
    }

    pub fn push_tvar(&mut self, a: TyVar, k: Kind) {
        self.tvars.push((a, k));
    }

    pub fn depth(&self) -> (usize, usize) {
        (self.terms.len(), self.tvars.len())
    }

    pub fn truncate(&mut self, depth: (usize, usize)) {
        self.terms.truncate(depth.0);
        self.tvars.truncate(depth.1);
    }

    pub fn with_tvars(tvars: impl IntoIterator<Item = (TyVar, Kind)>) -> TypeEnv {
        TypeEnv {
            terms: Vec::new(),
            tvars: tvars.into_iter().collect(),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = &(Symbol, Type)> {
        self.terms.iter()
    }
}
