use super::{reachable, BoxedType, LogicalGraph, TsVar, TyVar, Type};

/// Either syntactic class; the stamped case crosses from one to the other.
#[derive(Clone, Copy, Debug)]
pub enum TypeRef<'a> {
    Ty(&'a Type),
    Boxed(&'a BoxedType),
}

impl<'a> From<&'a Type> for TypeRef<'a> {
    fn from(t: &'a Type) -> Self {
        TypeRef::Ty(t)
    }
}

impl<'a> From<&'a BoxedType> for TypeRef<'a> {
    fn from(b: &'a BoxedType) -> Self {
        TypeRef::Boxed(b)
    }
}

/// Checks that every occurrence of α sits under stamps reachable from δ1,
/// and never under a mutable or functional constructor.
pub fn valid_variable<'a>(
    g: &LogicalGraph,
    a: &TyVar,
    d1: &TsVar,
    d2: &TsVar,
    t: impl Into<TypeRef<'a>>,
) -> bool {
    match t.into() {
        TypeRef::Ty(t) => match t {
            Type::Var(b) => a != b || reachable(g, d1, d2),
            Type::Base(_) => true,
            Type::At(body, d) => valid_variable(g, a, d1, d, &**body),
            Type::Forall(b, _, body) => a == b || valid_variable(g, a, d1, d2, &**body),
            Type::Rec(b, body, _) => a == b || !body.free_tyvars().contains(a),
            Type::TsLam(..) | Type::TsApp(..) => false,
        },
        TypeRef::Boxed(b) => match b {
            BoxedType::Product(x, y) | BoxedType::Sum(x, y) => {
                valid_variable(g, a, d1, d2, x) && valid_variable(g, a, d1, d2, y)
            }
            BoxedType::Array(elem) => !elem.free_tyvars().contains(a),
            BoxedType::Arrow(arrow) => {
                !arrow.args.iter().any(|t| t.free_tyvars().contains(a))
                    && !arrow.ret.free_tyvars().contains(a)
            }
        },
    }
}
