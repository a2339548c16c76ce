use std::collections::{BTreeMap, BTreeSet};

use super::{ArrowType, BoxedType, TsVar, TyVar, Type};
use crate::symbol::Symbol;

pub type TsMap = BTreeMap<TsVar, TsVar>;

/// Simultaneous, capture-avoiding substitution of timestamp variables and
/// type variables.
#[derive(Clone, Default)]
struct Subst {
    ts: TsMap,
    ty: BTreeMap<TyVar, Type>,
    // Free names of the substitution's range; binders that would capture them
    // get renamed.
    ts_range: BTreeSet<TsVar>,
    ty_range: BTreeSet<TyVar>,
}

impl Subst {
    fn new(ts: TsMap, ty: BTreeMap<TyVar, Type>) -> Subst {
        let mut ts_range: BTreeSet<TsVar> = ts.values().cloned().collect();
        let mut ty_range = BTreeSet::new();
        for t in ty.values() {
            ts_range.extend(t.free_ts());
            ty_range.extend(t.free_tyvars());
        }
        Subst {
            ts,
            ty,
            ts_range,
            ty_range,
        }
    }

    fn is_empty(&self) -> bool {
        self.ts.is_empty() && self.ty.is_empty()
    }

    fn ts_var(&self, d: &TsVar) -> TsVar {
        self.ts.get(d).cloned().unwrap_or_else(|| d.clone())
    }

    fn bind_ts(&self, d: &TsVar) -> (TsVar, Subst) {
        let mut inner = self.clone();
        inner.ts.remove(d);
        if inner.ts_range.contains(d) {
            let fresh = Symbol::fresh(d.as_str());
            inner.ts.insert(d.clone(), fresh.clone());
            (fresh, inner)
        } else {
            (d.clone(), inner)
        }
    }

    fn bind_ty(&self, a: &TyVar) -> (TyVar, Subst) {
        let mut inner = self.clone();
        inner.ty.remove(a);
        if inner.ty_range.contains(a) {
            let fresh = Symbol::fresh(a.as_str());
            inner.ty.insert(a.clone(), Type::Var(fresh.clone()));
            (fresh, inner)
        } else {
            (a.clone(), inner)
        }
    }

    fn apply(&self, t: &Type) -> Type {
        if self.is_empty() {
            return t.clone();
        }
        match t {
            Type::Base(_) => t.clone(),
            Type::Var(a) => self.ty.get(a).cloned().unwrap_or_else(|| t.clone()),
            Type::TsLam(d, body) => {
                let (d2, inner) = self.bind_ts(d);
                Type::TsLam(d2, Box::new(inner.apply(body)))
            }
            Type::TsApp(f, d) => Type::TsApp(Box::new(self.apply(f)), self.ts_var(d)),
            Type::Forall(a, k, body) => {
                let (a2, inner) = self.bind_ty(a);
                Type::Forall(a2, *k, Box::new(inner.apply(body)))
            }
            Type::Rec(a, body, d) => {
                let (a2, inner) = self.bind_ty(a);
                Type::Rec(a2, Box::new(inner.apply_boxed(body)), self.ts_var(d))
            }
            Type::At(body, d) => Type::At(Box::new(self.apply_boxed(body)), self.ts_var(d)),
        }
    }

    fn apply_boxed(&self, b: &BoxedType) -> BoxedType {
        match b {
            BoxedType::Array(t) => BoxedType::Array(self.apply(t)),
            BoxedType::Product(x, y) => BoxedType::Product(self.apply(x), self.apply(y)),
            BoxedType::Sum(x, y) => BoxedType::Sum(self.apply(x), self.apply(y)),
            BoxedType::Arrow(a) => BoxedType::Arrow(self.apply_arrow(a)),
        }
    }

    fn apply_arrow(&self, a: &ArrowType) -> ArrowType {
        let mut inner = self.clone();
        let mut params = Vec::with_capacity(a.ts_params.len());
        for d in &a.ts_params {
            let (d2, next) = inner.bind_ts(d);
            params.push(d2);
            inner = next;
        }
        ArrowType {
            ts_params: params,
            constraints: a.constraints.map(|d| inner.ts_var(d)),
            args: a.args.iter().map(|t| inner.apply(t)).collect(),
            run: inner.ts_var(&a.run),
            ret: Box::new(inner.apply(&a.ret)),
        }
    }
}

/// Simultaneous timestamp substitution, reaching stamps, arrow constraint
/// graphs and run stamps.
pub fn tsubst(t: &Type, m: &TsMap) -> Type {
    Subst::new(m.clone(), BTreeMap::new()).apply(t)
}

/// Timestamp and type-variable substitution applied together.
pub fn subst_types(t: &Type, ts: &TsMap, ty: &BTreeMap<TyVar, Type>) -> Type {
    Subst::new(ts.clone(), ty.clone()).apply(t)
}

pub fn tsubst_one(t: &Type, from: &TsVar, to: &TsVar) -> Type {
    if from == to {
        return t.clone();
    }
    tsubst(t, &BTreeMap::from([(from.clone(), to.clone())]))
}

/// `[ρ′/α]ρ`
pub fn ty_subst(t: &Type, a: &TyVar, with: &Type) -> Type {
    Subst::new(BTreeMap::new(), BTreeMap::from([(a.clone(), with.clone())])).apply(t)
}

/// Contracts every `(λδ. ρ) δ′` redex, innermost first.
pub fn beta_normalize(t: &Type) -> Type {
    match t {
        Type::Base(_) | Type::Var(_) => t.clone(),
        Type::TsLam(d, body) => Type::TsLam(d.clone(), Box::new(beta_normalize(body))),
        Type::TsApp(f, d) => match beta_normalize(f) {
            Type::TsLam(x, body) => beta_normalize(&tsubst_one(&body, &x, d)),
            f2 => Type::TsApp(Box::new(f2), d.clone()),
        },
        Type::Forall(a, k, body) => Type::Forall(a.clone(), *k, Box::new(beta_normalize(body))),
        Type::Rec(a, body, d) => Type::Rec(a.clone(), Box::new(normalize_boxed(body)), d.clone()),
        Type::At(body, d) => Type::At(Box::new(normalize_boxed(body)), d.clone()),
    }
}

pub(crate) fn normalize_boxed(b: &BoxedType) -> BoxedType {
    match b {
        BoxedType::Array(t) => BoxedType::Array(beta_normalize(t)),
        BoxedType::Product(x, y) => BoxedType::Product(beta_normalize(x), beta_normalize(y)),
        BoxedType::Sum(x, y) => BoxedType::Sum(beta_normalize(x), beta_normalize(y)),
        BoxedType::Arrow(a) => BoxedType::Arrow(ArrowType {
            ts_params: a.ts_params.clone(),
            constraints: a.constraints.clone(),
            args: a.args.iter().map(beta_normalize).collect(),
            run: a.run.clone(),
            ret: Box::new(beta_normalize(&a.ret)),
        }),
    }
}

/// Renames every binder to a positional name so α-equivalent types become
/// syntactically equal.
struct Canon {
    next: usize,
    ts: Vec<(TsVar, TsVar)>,
    ty: Vec<(TyVar, TyVar)>,
}

impl Canon {
    fn fresh(&mut self) -> Symbol {
        let s = Symbol::new(&format!("${}", self.next));
        self.next += 1;
        s
    }

    fn ts_var(&self, d: &TsVar) -> TsVar {
        self.ts
            .iter()
            .rev()
            .find(|(x, _)| x == d)
            .map(|(_, y)| y.clone())
            .unwrap_or_else(|| d.clone())
    }

    fn ty_var(&self, a: &TyVar) -> TyVar {
        self.ty
            .iter()
            .rev()
            .find(|(x, _)| x == a)
            .map(|(_, y)| y.clone())
            .unwrap_or_else(|| a.clone())
    }

    fn ty(&mut self, t: &Type) -> Type {
        match t {
            Type::Base(_) => t.clone(),
            Type::Var(a) => Type::Var(self.ty_var(a)),
            Type::TsLam(d, body) => {
                let n = self.fresh();
                self.ts.push((d.clone(), n.clone()));
                let body = self.ty(body);
                self.ts.pop();
                Type::TsLam(n, Box::new(body))
            }
            Type::TsApp(f, d) => Type::TsApp(Box::new(self.ty(f)), self.ts_var(d)),
            Type::Forall(a, k, body) => {
                let n = self.fresh();
                self.ty.push((a.clone(), n.clone()));
                let body = self.ty(body);
                self.ty.pop();
                Type::Forall(n, *k, Box::new(body))
            }
            Type::Rec(a, body, d) => {
                let d = self.ts_var(d);
                let n = self.fresh();
                self.ty.push((a.clone(), n.clone()));
                let body = self.boxed(body);
                self.ty.pop();
                Type::Rec(n, Box::new(body), d)
            }
            Type::At(body, d) => Type::At(Box::new(self.boxed(body)), self.ts_var(d)),
        }
    }

    fn boxed(&mut self, b: &BoxedType) -> BoxedType {
        match b {
            BoxedType::Array(t) => BoxedType::Array(self.ty(t)),
            BoxedType::Product(x, y) => BoxedType::Product(self.ty(x), self.ty(y)),
            BoxedType::Sum(x, y) => BoxedType::Sum(self.ty(x), self.ty(y)),
            BoxedType::Arrow(a) => {
                let depth = self.ts.len();
                let mut params = Vec::new();
                for d in &a.ts_params {
                    let n = self.fresh();
                    self.ts.push((d.clone(), n.clone()));
                    params.push(n);
                }
                let out = ArrowType {
                    ts_params: params,
                    constraints: a.constraints.map(|d| self.ts_var(d)),
                    args: a.args.iter().map(|t| self.ty(t)).collect(),
                    run: self.ts_var(&a.run),
                    ret: Box::new(self.ty(&a.ret)),
                };
                self.ts.truncate(depth);
                BoxedType::Arrow(out)
            }
        }
    }
}

pub(crate) fn canonical(t: &Type) -> Type {
    Canon {
        next: 0,
        ts: Vec::new(),
        ty: Vec::new(),
    }
    .ty(&beta_normalize(t))
}

/// Equality up to renaming of bound variables, after β-normalizing both sides.
pub fn alpha_eq(a: &Type, b: &Type) -> bool {
    a == b || canonical(a) == canonical(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Kind, LogicalGraph};

    fn s(x: &str) -> Symbol {
        Symbol::new(x)
    }

    fn tree_at(d: &str) -> Type {
        let a = s("a");
        Type::rec(
            a.clone(),
            BoxedType::Sum(
                Type::int(),
                Type::product(Type::Var(a.clone()), Type::Var(a), s(d)),
            ),
            s(d),
        )
    }

    #[test]
    fn tsubst_restamps_tree() {
        let m = TsMap::from([(s("d'"), s("d"))]);
        assert_eq!(tsubst(&tree_at("d'"), &m), tree_at("d"));
        assert_eq!(tsubst(&tree_at("d'"), &TsMap::new()), tree_at("d'"));
    }

    #[test]
    fn tsubst_reaches_constraints() {
        let arrow = ArrowType {
            ts_params: vec![s("x")],
            constraints: LogicalGraph::edge(s("d1"), s("x")),
            args: vec![Type::unit()],
            run: s("x"),
            ret: Box::new(Type::unit()),
        };
        let t = Type::arrow(arrow, s("d1"));
        let out = tsubst_one(&t, &s("d1"), &s("d2"));
        let Type::At(b, d) = &out else { panic!() };
        assert_eq!(d, &s("d2"));
        let BoxedType::Arrow(a) = &**b else { panic!() };
        assert!(a.constraints.edges().any(|(p, q)| p == &s("d2") && q == &s("x")));
    }

    #[test]
    fn tsubst_avoids_capture() {
        // (λx. (int * int) @ y)[y ↦ x] must not capture.
        let t = Type::ts_lam(s("x"), Type::product(Type::int(), Type::int(), s("y")));
        let out = tsubst_one(&t, &s("y"), &s("x"));
        let Type::TsLam(bound, body) = &out else { panic!() };
        assert_ne!(bound, &s("x"));
        assert_eq!(body.stamp(), Some(&s("x")));
    }

    #[test]
    fn beta_examples() {
        let lam = Type::ts_lam(s("d"), tree_at("d"));
        assert_eq!(beta_normalize(&Type::ts_app(lam.clone(), s("d0"))), tree_at("d0"));
        assert_eq!(beta_normalize(&tree_at("d0")), tree_at("d0"));
        assert!(alpha_eq(&Type::ts_app(lam, s("d0")), &tree_at("d0")));
    }

    #[test]
    fn alpha_examples() {
        let a = Type::forall(s("a"), Kind::STAR, Type::Var(s("a")));
        let b = Type::forall(s("b"), Kind::STAR, Type::Var(s("b")));
        assert!(alpha_eq(&a, &b));
        assert!(!alpha_eq(&tree_at("d1"), &tree_at("d2")));
        let free = Type::forall(s("a"), Kind::STAR, Type::Var(s("c")));
        assert!(!alpha_eq(&a, &free));
    }

    #[test]
    fn ty_subst_unfolds_tree() {
        let Type::Rec(a, body, d) = tree_at("d") else { panic!() };
        let unfolded = ty_subst(&Type::At(body, d.clone()), &a, &tree_at("d"));
        let Type::At(b, _) = unfolded else { panic!() };
        let BoxedType::Sum(_, right) = *b else { panic!() };
        assert_eq!(right, Type::product(tree_at("d"), tree_at("d"), d));
    }
}
