use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use super::SourceProgram;
use crate::ast::{Expr, ExprKind, Side, Value};
use crate::symbol::Symbol;
use crate::types::{ArrowType, BoxedType, LogicalGraph, Type};

/// Names minted by elaboration carry a `%N` suffix; this spells them so the
/// output still lexes as an identifier.
pub fn render_symbol(s: &Symbol) -> String {
    s.as_str().replace('%', "'")
}

pub fn print_type(t: &Type) -> String {
    let mut p = TypePrinter::new(t.free_ts().into_iter().chain(t.free_tyvars()), false);
    p.ty(t);
    p.out
}

/// Like [`print_type`], but free names minted by elaboration are shown by
/// their source spelling whenever that is unambiguous. Meant for messages.
pub fn print_type_plain(t: &Type) -> String {
    let mut p = TypePrinter::new(t.free_ts().into_iter().chain(t.free_tyvars()), true);
    p.ty(t);
    p.out
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e, TOP);
    out
}

pub fn print_program(p: &SourceProgram) -> String {
    let mut out = String::new();
    for (name, t) in &p.aliases {
        let _ = writeln!(out, "type {} = {}", render_symbol(name), print_type(t));
    }
    for d in &p.decls {
        let _ = write!(out, "def {}", render_symbol(&d.name));
        if let Some(t) = &d.annot {
            let _ = write!(out, " : {}", print_type(t));
        }
        let _ = writeln!(out, " =\n  {}", print_expr(&d.body));
    }
    let _ = writeln!(out, "main\n  {}", print_expr(&p.main));
    out
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_type(self))
    }
}

impl fmt::Display for BoxedType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut p = TypePrinter::new(self.free_ts().into_iter().chain(self.free_tyvars()), false);
        p.boxed(self);
        f.write_str(&p.out)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_expr(self))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        value(&mut out, self);
        f.write_str(&out)
    }
}

/// Bound names are shown by their base spelling when that cannot be
/// confused with a free name or an enclosing binder.
struct TypePrinter {
    scope: Vec<(Symbol, String)>,
    free: BTreeSet<String>,
    shown: BTreeMap<Symbol, String>,
    out: String,
}

impl TypePrinter {
    fn new(free: impl IntoIterator<Item = Symbol>, plain: bool) -> TypePrinter {
        let free: Vec<Symbol> = free.into_iter().collect();
        let mut shown = BTreeMap::new();
        for s in &free {
            let mut n = render_symbol(s);
            if plain && free.iter().all(|o| o == s || o.base() != s.base()) {
                n = s.base().to_string();
            }
            shown.insert(s.clone(), n);
        }
        TypePrinter {
            scope: Vec::new(),
            free: shown.values().cloned().collect(),
            shown,
            out: String::new(),
        }
    }

    fn name(&self, s: &Symbol) -> String {
        match self.scope.iter().rev().find(|(b, _)| b == s) {
            Some((_, n)) => n.clone(),
            None => self.shown.get(s).cloned().unwrap_or_else(|| render_symbol(s)),
        }
    }

    fn bind(&mut self, s: &Symbol) -> String {
        let clash = |n: &str, me: &TypePrinter| {
            me.free.contains(n) || me.scope.iter().any(|(b, shown)| shown == n && b != s)
        };
        let mut n = s.base().to_string();
        while clash(&n, self) {
            n.push('\'');
        }
        self.scope.push((s.clone(), n.clone()));
        n
    }

    fn ty(&mut self, t: &Type) {
        match t {
            Type::Base(b) => self.out.push_str(match b {
                crate::types::BaseType::Unit => "unit",
                crate::types::BaseType::Bool => "bool",
                crate::types::BaseType::Int => "int",
            }),
            Type::Var(a) => {
                let n = self.name(a);
                self.out.push_str(&n)
            }
            Type::TsLam(d, body) => {
                let n = self.bind(d);
                let _ = write!(self.out, "\\{n}. ");
                self.ty(body);
                self.scope.pop();
            }
            Type::TsApp(f, d) => {
                let paren = matches!(**f, Type::TsLam(..) | Type::Forall(..) | Type::Rec(..));
                if paren {
                    self.out.push('(');
                }
                self.ty(f);
                if paren {
                    self.out.push(')');
                }
                let n = self.name(d);
                let _ = write!(self.out, " {n}");
            }
            Type::Forall(a, k, body) => {
                let n = self.bind(a);
                let _ = write!(self.out, "forall {n} :: {k}. ");
                self.ty(body);
                self.scope.pop();
            }
            Type::Rec(a, body, d) => {
                let stamp = self.name(d);
                let n = self.bind(a);
                let _ = write!(self.out, "mu {n}. ");
                self.boxed(body);
                self.scope.pop();
                let _ = write!(self.out, " @ {stamp}");
            }
            Type::At(body, d) => {
                self.boxed(body);
                let n = self.name(d);
                let _ = write!(self.out, " @ {n}");
            }
        }
    }

    fn boxed(&mut self, b: &BoxedType) {
        match b {
            BoxedType::Array(t) => {
                self.out.push_str("array ");
                let paren = !matches!(t, Type::Base(_) | Type::Var(_));
                if paren {
                    self.out.push('(');
                }
                self.ty(t);
                if paren {
                    self.out.push(')');
                }
            }
            BoxedType::Product(x, y) | BoxedType::Sum(x, y) => {
                let op = if matches!(b, BoxedType::Product(..)) { '*' } else { '+' };
                self.out.push('(');
                self.ty(x);
                let _ = write!(self.out, " {op} ");
                self.ty(y);
                self.out.push(')');
            }
            BoxedType::Arrow(a) => self.arrow(a),
        }
    }

    fn arrow(&mut self, a: &ArrowType) {
        let depth = self.scope.len();
        let names: Vec<String> = a.ts_params.iter().map(|d| self.bind(d)).collect();
        self.out.push('[');
        self.out.push_str(&names.join(" "));
        self.graph(&a.constraints, !names.is_empty());
        self.out.push_str("](");
        for (i, t) in a.args.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.ty(t);
        }
        let run = self.name(&a.run);
        let _ = write!(self.out, ") ->{run} ");
        self.ty(&a.ret);
        self.scope.truncate(depth);
    }

    fn graph(&mut self, g: &LogicalGraph, space: bool) {
        if g.is_empty() {
            return;
        }
        self.out.push_str(if space { " | " } else { "| " });
        let edges: Vec<String> = g
            .edges()
            .map(|(x, y)| format!("{} < {}", self.name(x), self.name(y)))
            .collect();
        self.out.push_str(&edges.join(", "));
    }
}

const TOP: u8 = 0;
const NONSEQ: u8 = 1;
const BIN: u8 = 2;
const PREFIX: u8 = 3;
const ATOM: u8 = 4;

fn level(e: &Expr) -> u8 {
    use ExprKind::*;
    match &e.kind {
        Let(..) | If(..) | Abs(_) | TAbs(..) | Case(..) | GetRoot(..) | Store(..) => NONSEQ,
        Prim(..) => BIN,
        Proj(..) | Inj(..) | Fold(..) | Unfold(_) | Sub(..) | Length(_) => PREFIX,
        Val(_) | Var(_) | Call(..) | Pair(..) | Alloc(..) | Load(..) | Cas(..) | Par(..)
        | ActivePar(..) | TApp(..) => ATOM,
    }
}

fn value(out: &mut String, v: &Value) {
    match v {
        Value::Unit => out.push_str("()"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Value::Loc(l) => {
            let _ = write!(out, "{l}");
        }
        Value::Fold(v) => {
            out.push_str("⟨fold ");
            value(out, v);
            out.push('⟩');
        }
    }
}

fn list(out: &mut String, es: &[Expr]) {
    for (i, e) in es.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, e, TOP);
    }
}

fn side_kw(s: Side, base: &str) -> String {
    format!("{base}{}", s.index())
}

fn expr(out: &mut String, e: &Expr, min: u8) {
    use ExprKind::*;
    let paren = level(e) < min;
    if paren {
        out.push('(');
    }
    let sym = render_symbol;
    match &e.kind {
        Val(v) => value(out, v),
        Var(x) => out.push_str(&sym(x)),
        Let(x, e1, e2) => {
            let _ = write!(out, "let {} = ", sym(x));
            expr(out, e1, TOP);
            out.push_str(" in ");
            expr(out, e2, TOP);
        }
        If(c, a, b) => {
            out.push_str("if ");
            expr(out, c, TOP);
            out.push_str(" then ");
            expr(out, a, TOP);
            out.push_str(" else ");
            expr(out, b, NONSEQ);
        }
        Prim(op, a, b) => {
            expr(out, a, PREFIX);
            let _ = write!(out, " {} ", op.symbol());
            expr(out, b, PREFIX);
        }
        Abs(abs) => {
            let a = &abs.annot;
            let _ = write!(out, "fun {}", sym(&abs.name));
            if !a.ts_params.is_empty() || !a.constraints.is_empty() {
                out.push_str(" [");
                let names: Vec<String> = a.ts_params.iter().map(sym).collect();
                out.push_str(&names.join(" "));
                if !a.constraints.is_empty() {
                    out.push_str(if names.is_empty() { "| " } else { " | " });
                    let edges: Vec<String> = a
                        .constraints
                        .edges()
                        .map(|(x, y)| format!("{} < {}", sym(x), sym(y)))
                        .collect();
                    out.push_str(&edges.join(", "));
                }
                out.push(']');
            }
            out.push_str(" (");
            for (i, (x, t)) in abs.params.iter().zip(&a.param_types).enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{}: {}", sym(x), print_type(t));
            }
            let _ = write!(out, ") @{} : {} -> ", sym(&a.run), print_type(&a.ret));
            expr(out, &abs.body, TOP);
        }
        Call(callee, ts, args) => {
            expr(out, callee, ATOM);
            if !ts.is_empty() {
                let names: Vec<String> = ts.iter().map(sym).collect();
                let _ = write!(out, " [{}] ", names.join(", "));
            }
            out.push('(');
            list(out, args);
            out.push(')');
        }
        Pair(a, b) => {
            out.push('(');
            expr(out, a, TOP);
            out.push_str(", ");
            expr(out, b, TOP);
            out.push(')');
        }
        Proj(s, a) => {
            out.push_str(if *s == Side::Left { "fst " } else { "snd " });
            expr(out, a, PREFIX);
        }
        Inj(s, t, a) => {
            let _ = write!(out, "{}[{}] ", side_kw(*s, "inj"), print_type(t));
            expr(out, a, PREFIX);
        }
        Case(scrut, x1, e1, x2, e2) => {
            out.push_str("case ");
            expr(out, scrut, TOP);
            let _ = write!(out, " of inj1 {} -> ", sym(x1));
            expr(out, e1, NONSEQ);
            let _ = write!(out, " | inj2 {} -> ", sym(x2));
            expr(out, e2, NONSEQ);
        }
        Alloc(n, v) => {
            out.push_str("alloc(");
            expr(out, n, TOP);
            out.push_str(", ");
            expr(out, v, TOP);
            out.push(')');
        }
        Load(a, i) => {
            expr(out, a, ATOM);
            out.push_str(".[");
            expr(out, i, TOP);
            out.push(']');
        }
        Store(a, i, v) => {
            expr(out, a, ATOM);
            out.push_str(".[");
            expr(out, i, TOP);
            out.push_str("] <- ");
            expr(out, v, BIN);
        }
        Length(a) => {
            out.push_str("length ");
            expr(out, a, PREFIX);
        }
        Cas(a, i, old, new) => {
            out.push_str("cas(");
            list(out, &[(**a).clone(), (**i).clone(), (**old).clone(), (**new).clone()]);
            out.push(')');
        }
        Fold(t, a) => {
            let _ = write!(out, "fold[{}] ", print_type(t));
            expr(out, a, PREFIX);
        }
        Unfold(a) => {
            out.push_str("unfold ");
            expr(out, a, PREFIX);
        }
        Par(t1, t2, a, b) => {
            let _ = write!(out, "par[{}, {}](", print_type(t1), print_type(t2));
            expr(out, a, TOP);
            out.push_str(", ");
            expr(out, b, TOP);
            out.push(')');
        }
        ActivePar(a, b) => {
            out.push('⟨');
            expr(out, a, TOP);
            out.push_str(" ∥ ");
            expr(out, b, TOP);
            out.push('⟩');
        }
        Sub(t, a) => {
            let _ = write!(out, "sub[{}] ", print_type(t));
            expr(out, a, PREFIX);
        }
        GetRoot(x, a) => {
            let _ = write!(out, "getroot {} in ", sym(x));
            expr(out, a, TOP);
        }
        TAbs(a, k, body) => {
            let _ = write!(out, "tfun {} :: {} -> ", sym(a), k);
            expr(out, body, TOP);
        }
        TApp(a, t) => {
            expr(out, a, ATOM);
            let _ = write!(out, " {{{}}}", print_type(t));
        }
    }
    if paren {
        out.push(')');
    }
}
