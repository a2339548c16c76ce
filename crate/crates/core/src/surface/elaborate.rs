use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{Diagnostic, SourceProgram};
use crate::ast::{Expr, ExprKind, Span};
use crate::symbol::Symbol;
use crate::types::{subst_types, TsMap, TsVar, TyVar, Type};

/// The timestamp of the root task; free in every top-level type.
pub const TOP_TS: &str = "d0";

#[derive(Clone, Debug, PartialEq)]
pub struct Decl {
    pub name: Symbol,
    pub annot: Option<Type>,
    pub body: Expr,
    pub span: Span,
}

/// A program after elaboration: every timestamp and type-variable binder in
/// a term is unique, so annotations can be compared without capture.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub file: Option<String>,
    pub decls: Vec<Decl>,
    pub main: Expr,
    pub top: TsVar,
}

impl Program {
    /// The definitions as nested `let`s around the main expression.
    pub fn to_expr(&self) -> Expr {
        self.decls.iter().rev().fold(self.main.clone(), |body, d| {
            Expr::at(
                ExprKind::Let(d.name.clone(), Box::new(d.body.clone()), Box::new(body)),
                d.span,
            )
        })
    }

    /// The program the runtime executes.
    pub fn erased(&self) -> Expr {
        self.to_expr().erase()
    }
}

pub(super) fn elaborate(src: &SourceProgram) -> Result<Program, Diagnostic> {
    let mut r = Renamer::default();
    let mut decls = Vec::with_capacity(src.decls.len());
    for d in &src.decls {
        let mut body = d.body.clone();
        r.expr(&mut body)?;
        decls.push(Decl {
            body,
            ..d.clone()
        });
    }
    let mut main = src.main.clone();
    r.expr(&mut main)?;
    Ok(Program {
        file: src.file.clone(),
        decls,
        main,
        top: Symbol::new(TOP_TS),
    })
}

#[derive(Default)]
struct Renamer {
    ts: Vec<(TsVar, TsVar)>,
    ty: Vec<(TyVar, TyVar)>,
}

impl Renamer {
    fn ty(&self, t: &Type) -> Type {
        if self.ts.is_empty() && self.ty.is_empty() {
            return t.clone();
        }
        let ts: TsMap = self.ts.iter().cloned().collect();
        let ty: BTreeMap<TyVar, Type> = self
            .ty
            .iter()
            .map(|(a, b)| (a.clone(), Type::Var(b.clone())))
            .collect();
        subst_types(t, &ts, &ty)
    }

    fn ann(&self, t: &mut Arc<Type>) {
        *t = Arc::new(self.ty(t));
    }

    fn ts_var(&self, d: &TsVar) -> TsVar {
        match self.ts.iter().rev().find(|(a, _)| a == d) {
            Some((_, b)) => b.clone(),
            None => d.clone(),
        }
    }

    fn expr(&mut self, e: &mut Expr) -> Result<(), Diagnostic> {
        let span = e.span;
        match &mut e.kind {
            ExprKind::Abs(abs) => {
                let abs = Arc::make_mut(abs);
                let mut seen = BTreeSet::new();
                if let Some(dup) = abs.params.iter().find(|x| !seen.insert(*x)) {
                    return Err(Diagnostic::syntax(span, format!("duplicate parameter `{dup}`")));
                }
                let mut seen = BTreeSet::new();
                if let Some(dup) = abs.annot.ts_params.iter().find(|x| !seen.insert(*x)) {
                    return Err(Diagnostic::syntax(
                        span,
                        format!("duplicate timestamp parameter `{dup}`"),
                    ));
                }
                let depth = self.ts.len();
                let a = &mut abs.annot;
                for d in a.ts_params.iter_mut() {
                    let fresh = Symbol::fresh(d.as_str());
                    self.ts.push((d.clone(), fresh.clone()));
                    *d = fresh;
                }
                a.constraints = a.constraints.map(|d| self.ts_var(d));
                for t in a.param_types.iter_mut() {
                    *t = self.ty(t);
                }
                a.run = self.ts_var(&a.run);
                a.ret = self.ty(&a.ret);
                let r = self.expr(&mut abs.body);
                self.ts.truncate(depth);
                return r;
            }
            ExprKind::TAbs(a, _, body) => {
                let fresh = Symbol::fresh(a.as_str());
                self.ty.push((a.clone(), fresh.clone()));
                *a = fresh;
                let r = self.expr(body);
                self.ty.pop();
                return r;
            }
            ExprKind::Call(_, ts, _) => {
                for d in ts.iter_mut() {
                    *d = self.ts_var(d);
                }
            }
            ExprKind::Inj(_, t, _) | ExprKind::Fold(t, _) | ExprKind::Sub(t, _) | ExprKind::TApp(_, t) => {
                self.ann(t)
            }
            ExprKind::Par(t1, t2, _, _) => {
                self.ann(t1);
                self.ann(t2);
            }
            _ => {}
        }
        let mut result = Ok(());
        e.for_each_child_mut(|c| {
            if result.is_ok() {
                result = self.expr(c);
            }
        });
        result
    }
}
