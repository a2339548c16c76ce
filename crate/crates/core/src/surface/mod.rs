//! Concrete syntax: lexer, parser, printer and the elaboration pass that
//! freshens type-level binders before checking.

mod elaborate;
mod lexer;
mod parser;
mod print;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

pub use elaborate::{Decl, Program, TOP_TS};
pub use lexer::{lex, Tok};
pub use print::{print_expr, print_program, print_type, print_type_plain, render_symbol};

use crate::ast::{Expr, Span};
use crate::symbol::Symbol;
use crate::types::{ArrowType, BoxedType, Type};

/// A located error or finding. `rule` names the failing judgment or phase.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub file: Option<String>,
    pub span: Span,
    pub rule: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(span: Span, rule: impl Into<String>, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            file: None,
            span,
            rule: rule.into(),
            message: message.into(),
        }
    }

    pub fn syntax(span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic::new(span, "Syntax", message)
    }

    pub fn in_file(mut self, file: Option<&str>) -> Diagnostic {
        if self.file.is_none() {
            self.file = file.map(str::to_string);
        }
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{file}:")?;
        }
        write!(f, "{}: [{}] {}", self.span, self.rule, self.message)
    }
}

impl std::error::Error for Diagnostic {}

/// A parsed file: type aliases (already expanded in the declarations),
/// top-level definitions and the main expression.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceProgram {
    pub file: Option<String>,
    pub aliases: Vec<(Symbol, Type)>,
    pub decls: Vec<Decl>,
    pub main: Expr,
}

impl SourceProgram {
    pub fn parse(text: &str) -> Result<SourceProgram, Diagnostic> {
        parser::program(text, None)
    }

    pub fn parse_file(path: &str, text: &str) -> Result<SourceProgram, Diagnostic> {
        parser::program(text, Some(path)).map_err(|d| d.in_file(Some(path)))
    }

    fn alias_map(&self) -> BTreeMap<Symbol, Type> {
        self.aliases.iter().cloned().collect()
    }

    /// Parses a type in the scope of this file's aliases.
    pub fn parse_type(&self, text: &str) -> Result<Type, Diagnostic> {
        parser::type_with(text, self.alias_map())
    }

    /// Parses an expression in the scope of this file's aliases.
    pub fn parse_expr(&self, text: &str) -> Result<Expr, Diagnostic> {
        parser::expr_with(text, self.alias_map(), false)
    }

    /// The same definitions with a different main expression.
    pub fn with_main(&self, text: &str) -> Result<SourceProgram, Diagnostic> {
        Ok(SourceProgram {
            main: self.parse_expr(text)?,
            ..self.clone()
        })
    }

    pub fn elaborate(&self) -> Result<Program, Diagnostic> {
        elaborate::elaborate(self).map_err(|d| d.in_file(self.file.as_deref()))
    }

    /// Rewrites instances of this file's aliases back into alias
    /// applications, for display. Only aliases over timestamps are folded.
    pub fn fold_aliases(&self, t: &Type) -> Type {
        let aliases: Vec<(Symbol, Vec<Symbol>, Type)> = self
            .aliases
            .iter()
            .map(|(name, t)| {
                let mut params = Vec::new();
                let mut body = t;
                while let Type::TsLam(d, b) = body {
                    params.push(d.clone());
                    body = b;
                }
                (name.clone(), params, crate::types::beta_normalize(body))
            })
            .filter(|(_, params, body)| params.len() <= 3 && !matches!(body, Type::Base(_) | Type::Var(_)))
            .collect();
        fold_with(t, &aliases)
    }
}

fn fold_with(t: &Type, aliases: &[(Symbol, Vec<Symbol>, Type)]) -> Type {
    if let Some(folded) = match_alias(t, aliases) {
        return folded;
    }
    let go = |t: &Type| fold_with(t, aliases);
    let boxed = |b: &BoxedType| match b {
        BoxedType::Array(e) => BoxedType::Array(go(e)),
        BoxedType::Product(a, c) => BoxedType::Product(go(a), go(c)),
        BoxedType::Sum(a, c) => BoxedType::Sum(go(a), go(c)),
        BoxedType::Arrow(f) => BoxedType::Arrow(ArrowType {
            args: f.args.iter().map(go).collect(),
            ret: Box::new(go(&f.ret)),
            ..f.clone()
        }),
    };
    match t {
        Type::Base(_) | Type::Var(_) => t.clone(),
        Type::TsLam(d, b) => Type::TsLam(d.clone(), Box::new(go(b))),
        Type::TsApp(f, d) => Type::TsApp(Box::new(go(f)), d.clone()),
        Type::Forall(a, k, b) => Type::Forall(a.clone(), *k, Box::new(go(b))),
        Type::Rec(a, b, d) => Type::Rec(a.clone(), Box::new(boxed(b)), d.clone()),
        Type::At(b, d) => Type::At(Box::new(boxed(b)), d.clone()),
    }
}

fn match_alias(t: &Type, aliases: &[(Symbol, Vec<Symbol>, Type)]) -> Option<Type> {
    if matches!(t, Type::Base(_) | Type::Var(_)) {
        return None;
    }
    let free: Vec<Symbol> = t.free_ts().into_iter().collect();
    for (name, params, body) in aliases {
        let n = params.len();
        let combos = free.len().checked_pow(n as u32)?;
        for mut code in 0..combos.max(1) {
            if n > 0 && free.is_empty() {
                break;
            }
            let mut args = Vec::with_capacity(n);
            for _ in 0..n {
                args.push(free[code % free.len()].clone());
                code /= free.len();
            }
            let m: crate::types::TsMap = params.iter().cloned().zip(args.iter().cloned()).collect();
            if crate::types::alpha_eq(&crate::types::tsubst(body, &m), t) {
                let head = Type::Var(name.clone());
                return Some(args.into_iter().fold(head, |f, d| Type::TsApp(Box::new(f), d)));
            }
        }
    }
    None
}

pub fn parse_type(text: &str) -> Result<Type, Diagnostic> {
    parser::type_with(text, BTreeMap::new())
}

/// Parses a source expression; locations, folded values and active pairs are
/// rejected.
pub fn parse_expr(text: &str) -> Result<Expr, Diagnostic> {
    parser::expr_with(text, BTreeMap::new(), false)
}

/// Parses any expression, including the forms that only arise during
/// evaluation.
pub fn parse_runtime_expr(text: &str) -> Result<Expr, Diagnostic> {
    parser::expr_with(text, BTreeMap::new(), true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{ExprKind, Prim, Value};
    use crate::types::{alpha_eq, beta_normalize, BoxedType, Kind};

    fn roundtrip(text: &str) {
        let e = parse_runtime_expr(text).unwrap();
        let printed = print_expr(&e);
        let again = parse_runtime_expr(&printed)
            .unwrap_or_else(|d| panic!("reparse of `{printed}` failed: {d}"));
        assert_eq!(e, again, "printed as `{printed}`");
    }

    #[test]
    fn precedence() {
        let e = parse_expr("1 + 2 * 3 == 7 && true || false").unwrap();
        let ExprKind::Prim(Prim::Or, l, _) = &e.kind else { panic!("{e}") };
        let ExprKind::Prim(Prim::And, l, _) = &l.kind else { panic!() };
        let ExprKind::Prim(Prim::Eq, l, _) = &l.kind else { panic!() };
        assert!(matches!(&l.kind, ExprKind::Prim(Prim::Add, _, _)));
        assert!(parse_expr("1 < 2 < 3").is_err());
        let e = parse_expr("a - -1").unwrap();
        let ExprKind::Prim(Prim::Sub, _, r) = &e.kind else { panic!() };
        assert_eq!(r.as_value(), Some(&Value::int(-1)));
    }

    #[test]
    fn sequencing_and_branches() {
        let e = parse_expr("if c then a else b; d").unwrap();
        assert!(matches!(&e.kind, ExprKind::Let(x, _, _) if x.as_str() == "_"));
        let e = parse_expr("let x = 1 in x; y").unwrap();
        let ExprKind::Let(_, _, body) = &e.kind else { panic!() };
        assert!(matches!(&body.kind, ExprKind::Let(..)));
    }

    #[test]
    fn runtime_forms_only_in_runtime_mode() {
        assert!(parse_expr("#3").is_err());
        assert!(parse_expr("⟨1 ∥ 2⟩").is_err());
        assert!(parse_runtime_expr("⟨⟨fold #1⟩ ∥ 2⟩").is_ok());
        let d = parse_expr("let x = #3 in x").unwrap_err();
        assert_eq!(d.rule, "Syntax");
        assert_eq!(d.span.col, 9);
    }

    #[test]
    fn types_parse() {
        let t = parse_type("[d1 d2 | d1 < d2](int, array int @ d1) ->d2 (int * bool) @ d2 @ d0").unwrap();
        let crate::types::Type::At(b, d) = &t else { panic!() };
        assert_eq!(d.as_str(), "d0");
        let BoxedType::Arrow(a) = &**b else { panic!() };
        assert_eq!(a.ts_params.len(), 2);
        assert_eq!(a.constraints.len(), 1);
        assert_eq!(a.args.len(), 2);
        let lenient = parse_type("(int * int @ d)").unwrap();
        assert_eq!(lenient, parse_type("(int * int) @ d").unwrap());
        let f = parse_type("forall a :: *+ . a d").unwrap();
        assert!(matches!(f, crate::types::Type::Forall(_, Kind(1), _)));
    }

    #[test]
    fn aliases_expand() {
        let p = SourceProgram::parse(
            "type tree = \\d. mu a . (int + (a * a) @ d) @ d\nmain fold[tree d0] inj1[(int + (tree d0 * tree d0) @ d0) @ d0] 1",
        )
        .unwrap();
        let t = p.parse_type("tree d0").unwrap();
        let n = beta_normalize(&t);
        assert!(matches!(n, crate::types::Type::Rec(..)));
        assert!(alpha_eq(&n, &p.parse_type("mu b . (int + (b * b) @ d0) @ d0").unwrap()));
    }

    #[test]
    fn print_roundtrips() {
        for text in [
            "let x = alloc(3, 0) in x.[1] <- x.[0] + 1; length x",
            "fun f [d e | d < e] (x: int, y: array int @ e) @d : int -> if x <= 0 then 0 else f [d, e] (x - 1, y)",
            "case inj1[(int + bool) @ d] 3 of inj1 x -> x | inj2 y -> 0",
            "par[\\e. unit, \\e. int](fun a [e] () @e : unit -> (), fun b [e] () @e : int -> 1)",
            "tfun a :: *+ -> fun g (x: a d) @d : a d -> x",
            "getroot t in sub[int] (fst (1, 2)) {int}",
            "⟨#1.[0] <- 2 ∥ ⟨fold ⟨fold ()⟩⟩⟩",
            "f (g (1)) (2) + (if a then b else c)",
            "(a.[0] <- 1) == ()",
        ] {
            roundtrip(text);
        }
    }

    #[test]
    fn elaboration_freshens_binders() {
        let p = SourceProgram::parse(
            "def id = fun id [d] (x: int) @d : int -> x\nmain tfun a -> fun k [d] (y: a) @d : a -> id [d] (1); y",
        )
        .unwrap();
        let prog = p.elaborate().unwrap();
        let ExprKind::Abs(abs) = &prog.decls[0].body.kind else { panic!() };
        let d = &abs.annot.ts_params[0];
        assert_ne!(d.as_str(), "d");
        assert_eq!(&abs.annot.run, d);
        let ExprKind::TAbs(a, _, body) = &prog.main.kind else { panic!() };
        let ExprKind::Abs(k) = &body.kind else { panic!() };
        assert_eq!(k.annot.param_types[0], crate::types::Type::Var(a.clone()));
        assert!(SourceProgram::parse("main fun f (x: int, x: int) @d0 : int -> x")
            .unwrap()
            .elaborate()
            .is_err());
    }

    #[test]
    fn diagnostics_render() {
        let d = SourceProgram::parse_file("a.dl2", "main let = 3").unwrap_err();
        assert_eq!(d.to_string(), "a.dl2:1:10: [Syntax] expected an identifier, found `=`");
    }
}
