use thiserror::Error;

use super::{BoxedType, Kind, TyVar, Type, TypeEnv};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum KindError {
    #[error("unbound type variable {0}")]
    UnboundTypeVar(TyVar),
    #[error("kind mismatch: expected {expected}, found {found} in {ty}")]
    KindMismatch {
        expected: Kind,
        found: Kind,
        ty: String,
    },
    #[error("cannot apply a type of kind * to a timestamp in {0}")]
    NotAFunction(String),
}

/// Γ ⊢ ρ :: κ
pub fn kind_of(env: &TypeEnv, t: &Type) -> Result<Kind, KindError> {
    let mut env = env.clone();
    kind_in(&mut env, t)
}

fn kind_in(env: &mut TypeEnv, t: &Type) -> Result<Kind, KindError> {
    match t {
        Type::Base(_) => Ok(Kind::STAR),
        Type::Var(a) => env
            .kind_of_var(a)
            .ok_or_else(|| KindError::UnboundTypeVar(a.clone())),
        Type::At(b, _) => {
            boxed_star(env, b)?;
            Ok(Kind::STAR)
        }
        Type::TsLam(_, body) => Ok(kind_in(env, body)?.succ()),
        Type::TsApp(f, _) => match kind_in(env, f)? {
            Kind(0) => Err(KindError::NotAFunction(t.to_string())),
            Kind(n) => Ok(Kind(n - 1)),
        },
        Type::Forall(a, k, body) => {
            let depth = env.depth();
            env.push_tvar(a.clone(), *k);
            let r = expect_star(env, body);
            env.truncate(depth);
            r.map(|_| Kind::STAR)
        }
        Type::Rec(a, body, _) => {
            let depth = env.depth();
            env.push_tvar(a.clone(), Kind::STAR);
            let r = boxed_star(env, body);
            env.truncate(depth);
            r.map(|_| Kind::STAR)
        }
    }
}

fn expect_star(env: &mut TypeEnv, t: &Type) -> Result<(), KindError> {
    match kind_in(env, t)? {
        Kind::STAR => Ok(()),
        found => Err(KindError::KindMismatch {
            expected: Kind::STAR,
            found,
            ty: t.to_string(),
        }),
    }
}

fn boxed_star(env: &mut TypeEnv, b: &BoxedType) -> Result<(), KindError> {
    match b {
        BoxedType::Array(t) => expect_star(env, t),
        BoxedType::Product(x, y) | BoxedType::Sum(x, y) => {
            expect_star(env, x)?;
            expect_star(env, y)
        }
        BoxedType::Arrow(a) => {
            for t in &a.args {
                expect_star(env, t)?;
            }
            expect_star(env, &a.ret)
        }
    }
}
