use std::collections::BTreeMap;
use std::sync::Arc;

use super::lexer::{lex, Tok};
use super::{Decl, Diagnostic, SourceProgram};
use crate::ast::{AbsAnnot, Abstraction, Expr, ExprKind, Location, Prim, Side, Span, Value};
use crate::int::Int;
use crate::symbol::Symbol;
use crate::types::{ArrowType, BoxedType, Kind, LogicalGraph, TsVar, Type};

type R<T> = Result<T, Diagnostic>;

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    aliases: BTreeMap<Symbol, Type>,
    runtime: bool,
}

pub(super) fn program(text: &str, file: Option<&str>) -> R<SourceProgram> {
    let mut p = Parser::new(text, BTreeMap::new(), false)?;
    let mut aliases = Vec::new();
    let mut decls = Vec::new();
    let main = loop {
        match p.peek() {
            Tok::Kw("type") => {
                let span = p.bump().1;
                let name = p.ident()?;
                p.expect_sym("=")?;
                let t = p.ty()?;
                if !t.free_tyvars().is_empty() {
                    return Err(Diagnostic::syntax(span, format!("type alias `{name}` has free type variables")));
                }
                if p.aliases.insert(name.clone(), t.clone()).is_some() {
                    return Err(Diagnostic::syntax(span, format!("type alias `{name}` is defined twice")));
                }
                aliases.push((name, t));
            }
            Tok::Kw("def") => {
                let span = p.bump().1;
                let name = p.ident()?;
                let annot = if p.eat_sym(":") { Some(p.ty()?) } else { None };
                p.expect_sym("=")?;
                let body = p.expr()?;
                decls.push(Decl {
                    name,
                    annot,
                    body,
                    span,
                });
            }
            Tok::Kw("main") => {
                p.bump();
                break p.expr()?;
            }
            _ if decls.is_empty() && aliases.is_empty() => break p.expr()?,
            _ => return Err(p.unexpected("`type`, `def` or `main`")),
        }
    };
    p.expect_eof()?;
    Ok(SourceProgram {
        file: file.map(str::to_string),
        aliases,
        decls,
        main,
    })
}

pub(super) fn type_with(text: &str, aliases: BTreeMap<Symbol, Type>) -> R<Type> {
    let mut p = Parser::new(text, aliases, false)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

pub(super) fn expr_with(text: &str, aliases: BTreeMap<Symbol, Type>, runtime: bool) -> R<Expr> {
    let mut p = Parser::new(text, aliases, runtime)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

impl Parser {
    fn new(text: &str, aliases: BTreeMap<Symbol, Type>, runtime: bool) -> R<Parser> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            aliases,
            runtime,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        Diagnostic::syntax(
            self.span(),
            format!("expected {wanted}, found {}", self.peek().describe()),
        )
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.is_sym(s);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect_sym(&mut self, s: &str) -> R<Span> {
        if self.is_sym(s) {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    fn expect_kw(&mut self, k: &str) -> R<Span> {
        if self.is_kw(k) {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(&format!("`{k}`")))
        }
    }

    fn expect_eof(&self) -> R<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            _ => Err(self.unexpected("end of input")),
        }
    }

    fn ident(&mut self) -> R<Symbol> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = Symbol::new(s);
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn comma_list<T>(&mut self, close: &str, mut item: impl FnMut(&mut Self) -> R<T>) -> R<Vec<T>> {
        let mut out = Vec::new();
        if self.eat_sym(close) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat_sym(close) {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }

    // ---- types ----

    fn kind(&mut self) -> R<Kind> {
        self.expect_sym("*")?;
        let mut k = Kind::STAR;
        while self.eat_sym("+") {
            k = k.succ();
        }
        Ok(k)
    }

    fn ty(&mut self) -> R<Type> {
        match self.peek() {
            Tok::Kw("forall") => {
                self.bump();
                let a = self.ident()?;
                let k = if self.eat_sym("::") { self.kind()? } else { Kind::STAR };
                self.expect_sym(".")?;
                Ok(Type::forall(a, k, self.ty()?))
            }
            Tok::Sym("\\") => {
                self.bump();
                let d = self.ident()?;
                self.expect_sym(".")?;
                Ok(Type::ts_lam(d, self.ty()?))
            }
            Tok::Kw("mu") => {
                self.bump();
                let a = self.ident()?;
                self.expect_sym(".")?;
                let body = self.boxed()?;
                self.expect_sym("@")?;
                Ok(Type::rec(a, body, self.ident()?))
            }
            _ => {
                let mut t = self.ty_atom()?;
                while let Tok::Ident(_) = self.peek() {
                    t = Type::ts_app(t, self.ident()?);
                }
                Ok(t)
            }
        }
    }

    fn ty_atom(&mut self) -> R<Type> {
        match self.peek().clone() {
            Tok::Kw("unit") => {
                self.bump();
                Ok(Type::unit())
            }
            Tok::Kw("bool") => {
                self.bump();
                Ok(Type::bool())
            }
            Tok::Kw("int") => {
                self.bump();
                Ok(Type::int())
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                Ok(match self.aliases.get(&name) {
                    Some(t) => t.clone(),
                    None => Type::Var(name),
                })
            }
            Tok::Kw("array") | Tok::Sym("[") => {
                let b = self.boxed()?;
                self.expect_sym("@")?;
                Ok(Type::at(b, self.ident()?))
            }
            Tok::Sym("(") => {
                self.bump();
                let first = self.ty()?;
                if self.eat_sym(")") {
                    return Ok(first);
                }
                let b = self.paren_boxed_rest(first)?;
                if self.eat_sym("@") {
                    let d = self.ident()?;
                    self.expect_sym(")")?;
                    return Ok(Type::at(b, d));
                }
                self.expect_sym(")")?;
                self.expect_sym("@")?;
                Ok(Type::at(b, self.ident()?))
            }
            _ => Err(self.unexpected("a type")),
        }
    }

    fn paren_boxed_rest(&mut self, first: Type) -> R<BoxedType> {
        if self.eat_sym("*") {
            Ok(BoxedType::Product(first, self.ty()?))
        } else if self.eat_sym("+") {
            Ok(BoxedType::Sum(first, self.ty()?))
        } else {
            Err(self.unexpected("`*`, `+` or `)`"))
        }
    }

    fn boxed(&mut self) -> R<BoxedType> {
        match self.peek() {
            Tok::Kw("array") => {
                self.bump();
                Ok(BoxedType::Array(self.ty()?))
            }
            Tok::Sym("[") => {
                self.bump();
                let (ts_params, constraints) = self.ts_binder()?;
                self.expect_sym("(")?;
                let args = self.comma_list(")", |p| p.ty())?;
                self.expect_sym("->")?;
                let run = self.ident()?;
                let ret = self.ty()?;
                Ok(BoxedType::Arrow(ArrowType {
                    ts_params,
                    constraints,
                    args,
                    run,
                    ret: Box::new(ret),
                }))
            }
            Tok::Sym("(") => {
                self.bump();
                let first = self.ty()?;
                let b = self.paren_boxed_rest(first)?;
                self.expect_sym(")")?;
                Ok(b)
            }
            _ => Err(self.unexpected("a boxed type")),
        }
    }

    /// After `[`: timestamp names, then optional `| a < b, ...`, then `]`.
    fn ts_binder(&mut self) -> R<(Vec<TsVar>, LogicalGraph)> {
        let mut params = Vec::new();
        loop {
            match self.peek() {
                Tok::Ident(_) => params.push(self.ident()?),
                Tok::Sym(",") => {
                    self.bump();
                }
                _ => break,
            }
        }
        let mut g = LogicalGraph::new();
        if self.eat_sym("|") {
            loop {
                let a = self.ident()?;
                self.expect_sym("<")?;
                let b = self.ident()?;
                g.insert(a, b);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym("]")?;
        Ok((params, g))
    }

    fn bracket_type(&mut self) -> R<Arc<Type>> {
        self.expect_sym("[")?;
        let t = self.ty()?;
        self.expect_sym("]")?;
        Ok(Arc::new(t))
    }

    // ---- expressions ----

    fn expr(&mut self) -> R<Expr> {
        let e = self.nonseq()?;
        if self.is_sym(";") {
            let span = self.bump().1;
            let rest = self.expr()?;
            return Ok(Expr::at(ExprKind::Let(Symbol::new("_"), bx(e), bx(rest)), span));
        }
        Ok(e)
    }

    fn nonseq(&mut self) -> R<Expr> {
        let span = self.span();
        let kind = match self.peek() {
            Tok::Kw("let") => {
                self.bump();
                let x = self.ident()?;
                self.expect_sym("=")?;
                let e1 = self.expr()?;
                self.expect_kw("in")?;
                ExprKind::Let(x, bx(e1), bx(self.expr()?))
            }
            Tok::Kw("if") => {
                self.bump();
                let c = self.expr()?;
                self.expect_kw("then")?;
                let a = self.expr()?;
                self.expect_kw("else")?;
                ExprKind::If(bx(c), bx(a), bx(self.nonseq()?))
            }
            Tok::Kw("fun") => self.abstraction()?,
            Tok::Kw("tfun") => {
                self.bump();
                let a = self.ident()?;
                let k = if self.eat_sym("::") { self.kind()? } else { Kind::STAR };
                self.expect_sym("->")?;
                ExprKind::TAbs(a, k, bx(self.expr()?))
            }
            Tok::Kw("case") => {
                self.bump();
                let scrut = self.expr()?;
                self.expect_kw("of")?;
                self.eat_sym("|");
                self.expect_kw("inj1")?;
                let x1 = self.ident()?;
                self.expect_sym("->")?;
                let e1 = self.nonseq()?;
                self.expect_sym("|")?;
                self.expect_kw("inj2")?;
                let x2 = self.ident()?;
                self.expect_sym("->")?;
                ExprKind::Case(bx(scrut), x1, bx(e1), x2, bx(self.nonseq()?))
            }
            Tok::Kw("getroot") => {
                self.bump();
                let x = self.ident()?;
                self.expect_kw("in")?;
                ExprKind::GetRoot(x, bx(self.expr()?))
            }
            _ => return self.or_expr(),
        };
        Ok(Expr::at(kind, span))
    }

    fn abstraction(&mut self) -> R<ExprKind> {
        self.expect_kw("fun")?;
        let name = self.ident()?;
        let (ts_params, constraints) = if self.eat_sym("[") {
            self.ts_binder()?
        } else {
            (Vec::new(), LogicalGraph::new())
        };
        self.expect_sym("(")?;
        let params = self.comma_list(")", |p| {
            let x = p.ident()?;
            p.expect_sym(":")?;
            Ok((x, p.ty()?))
        })?;
        self.expect_sym("@")?;
        let run = self.ident()?;
        self.expect_sym(":")?;
        let ret = self.ty()?;
        self.expect_sym("->")?;
        let body = self.expr()?;
        let (params, param_types) = params.into_iter().unzip();
        let annot = AbsAnnot {
            ts_params,
            constraints,
            param_types,
            run,
            ret,
        };
        Ok(ExprKind::Abs(Arc::new(Abstraction::new(name, params, annot, body))))
    }

    fn binary(&mut self, ops: &[(&str, Prim)], next: fn(&mut Self) -> R<Expr>, assoc: bool) -> R<Expr> {
        let mut l = next(self)?;
        loop {
            let op = ops.iter().find(|(s, _)| match self.peek() {
                Tok::Sym(x) | Tok::Kw(x) => x == s,
                _ => false,
            });
            let Some((_, prim)) = op else { return Ok(l) };
            let span = self.bump().1;
            let r = next(self)?;
            l = Expr::at(ExprKind::Prim(*prim, bx(l), bx(r)), span);
            if !assoc {
                if let Some((s, _)) = ops.iter().find(|(s, _)| self.is_sym(s)) {
                    return Err(Diagnostic::syntax(
                        self.span(),
                        format!("comparison operators do not associate; parenthesize before `{s}`"),
                    ));
                }
                return Ok(l);
            }
        }
    }

    fn or_expr(&mut self) -> R<Expr> {
        self.binary(&[("||", Prim::Or)], Self::and_expr, true)
    }

    fn and_expr(&mut self) -> R<Expr> {
        self.binary(&[("&&", Prim::And)], Self::cmp_expr, true)
    }

    fn cmp_expr(&mut self) -> R<Expr> {
        self.binary(
            &[
                ("==", Prim::Eq),
                ("<=", Prim::Le),
                (">=", Prim::Ge),
                ("<", Prim::Lt),
                (">", Prim::Gt),
            ],
            Self::add_expr,
            false,
        )
    }

    fn add_expr(&mut self) -> R<Expr> {
        self.binary(&[("+", Prim::Add), ("-", Prim::Sub)], Self::mul_expr, true)
    }

    fn mul_expr(&mut self) -> R<Expr> {
        self.binary(
            &[("*", Prim::Mul), ("/", Prim::Div), ("mod", Prim::Mod)],
            Self::prefix,
            true,
        )
    }

    fn prefix(&mut self) -> R<Expr> {
        let span = self.span();
        let kind = match self.peek() {
            Tok::Kw("fst") => {
                self.bump();
                ExprKind::Proj(Side::Left, bx(self.prefix()?))
            }
            Tok::Kw("snd") => {
                self.bump();
                ExprKind::Proj(Side::Right, bx(self.prefix()?))
            }
            Tok::Kw("length") => {
                self.bump();
                ExprKind::Length(bx(self.prefix()?))
            }
            Tok::Kw("unfold") => {
                self.bump();
                ExprKind::Unfold(bx(self.prefix()?))
            }
            Tok::Kw(k @ ("inj1" | "inj2")) => {
                let side = if *k == "inj1" { Side::Left } else { Side::Right };
                self.bump();
                let t = self.bracket_type()?;
                ExprKind::Inj(side, t, bx(self.prefix()?))
            }
            Tok::Kw("fold") => {
                self.bump();
                let t = self.bracket_type()?;
                ExprKind::Fold(t, bx(self.prefix()?))
            }
            Tok::Kw("sub") => {
                self.bump();
                let t = self.bracket_type()?;
                ExprKind::Sub(t, bx(self.prefix()?))
            }
            _ => return self.postfix(),
        };
        Ok(Expr::at(kind, span))
    }

    fn postfix(&mut self) -> R<Expr> {
        let mut e = self.atom()?;
        loop {
            let span = self.span();
            let kind = match self.peek() {
                Tok::Sym("(") => {
                    self.bump();
                    let args = self.comma_list(")", |p| p.expr())?;
                    ExprKind::Call(bx(e), Vec::new(), args)
                }
                Tok::Sym("[") => {
                    self.bump();
                    let mut ts = Vec::new();
                    while !self.eat_sym("]") {
                        if !self.eat_sym(",") {
                            ts.push(self.ident()?);
                        }
                    }
                    self.expect_sym("(")?;
                    let args = self.comma_list(")", |p| p.expr())?;
                    ExprKind::Call(bx(e), ts, args)
                }
                Tok::Sym(".") => {
                    self.bump();
                    self.expect_sym("[")?;
                    let i = self.expr()?;
                    self.expect_sym("]")?;
                    if self.eat_sym("<-") {
                        let v = self.or_expr()?;
                        return Ok(Expr::at(ExprKind::Store(bx(e), bx(i), bx(v)), span));
                    }
                    ExprKind::Load(bx(e), bx(i))
                }
                Tok::Sym("{") => {
                    self.bump();
                    let t = self.ty()?;
                    self.expect_sym("}")?;
                    ExprKind::TApp(bx(e), Arc::new(t))
                }
                _ => return Ok(e),
            };
            e = Expr::at(kind, span);
        }
    }

    fn runtime_only(&self, span: Span, what: &str) -> R<()> {
        if self.runtime {
            Ok(())
        } else {
            Err(Diagnostic::syntax(span, format!("{what} is a runtime-only construct")))
        }
    }

    fn atom(&mut self) -> R<Expr> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                ExprKind::Val(Value::Int(n))
            }
            Tok::Sym("-") if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.bump();
                let Tok::Int(n) = self.bump().0 else { unreachable!() };
                ExprKind::Val(Value::Int(Int::from(0).sub(&n)))
            }
            Tok::Kw("true") => {
                self.bump();
                ExprKind::Val(Value::Bool(true))
            }
            Tok::Kw("false") => {
                self.bump();
                ExprKind::Val(Value::Bool(false))
            }
            Tok::Ident(_) => ExprKind::Var(self.ident()?),
            Tok::Sym("(") => {
                self.bump();
                if self.eat_sym(")") {
                    ExprKind::Val(Value::Unit)
                } else {
                    let e = self.expr()?;
                    if self.eat_sym(",") {
                        let e2 = self.expr()?;
                        self.expect_sym(")")?;
                        ExprKind::Pair(bx(e), bx(e2))
                    } else {
                        self.expect_sym(")")?;
                        return Ok(e);
                    }
                }
            }
            Tok::Kw("alloc") => {
                self.bump();
                self.expect_sym("(")?;
                let n = self.expr()?;
                self.expect_sym(",")?;
                let v = self.expr()?;
                self.expect_sym(")")?;
                ExprKind::Alloc(bx(n), bx(v))
            }
            Tok::Kw("cas") => {
                self.bump();
                self.expect_sym("(")?;
                let mut args = self.comma_list(")", |p| p.expr())?;
                if args.len() != 4 {
                    return Err(Diagnostic::syntax(span, "cas takes four arguments"));
                }
                let d = args.pop().unwrap();
                let c = args.pop().unwrap();
                let b = args.pop().unwrap();
                let a = args.pop().unwrap();
                ExprKind::Cas(bx(a), bx(b), bx(c), bx(d))
            }
            Tok::Kw("par") => {
                self.bump();
                self.expect_sym("[")?;
                let t1 = self.ty()?;
                self.expect_sym(",")?;
                let t2 = self.ty()?;
                self.expect_sym("]")?;
                self.expect_sym("(")?;
                let e1 = self.expr()?;
                self.expect_sym(",")?;
                let e2 = self.expr()?;
                self.expect_sym(")")?;
                ExprKind::Par(Arc::new(t1), Arc::new(t2), bx(e1), bx(e2))
            }
            Tok::Loc(n) => {
                self.runtime_only(span, "a location")?;
                self.bump();
                ExprKind::Val(Value::Loc(Location(n)))
            }
            Tok::Sym("⟨") => {
                self.bump();
                if self.is_kw("fold") {
                    self.runtime_only(span, "a folded value")?;
                    self.bump();
                    let inner = self.atom()?;
                    let Some(v) = inner.as_value() else {
                        return Err(Diagnostic::syntax(inner.span, "expected a value inside ⟨fold …⟩"));
                    };
                    let v = v.clone();
                    self.expect_sym("⟩")?;
                    ExprKind::Val(Value::Fold(Box::new(v)))
                } else {
                    self.runtime_only(span, "an active parallel pair")?;
                    let e1 = self.expr()?;
                    self.expect_sym("∥")?;
                    let e2 = self.expr()?;
                    self.expect_sym("⟩")?;
                    ExprKind::ActivePar(bx(e1), bx(e2))
                }
            }
            _ => return Err(self.unexpected("an expression")),
        };
        Ok(Expr::at(kind, span))
    }
}
