use crate::ast::{Expr, ExprKind};

/// veryPure: no allocation of mutable data, no load, store, call,
/// projection, case or fork. Annotation nodes are looked through.
pub fn very_pure(e: &Expr) -> bool {
    use ExprKind::*;
    match &e.kind {
        Val(_) | Abs(_) | Var(_) => true,
        Prim(_, a, b) | Let(_, a, b) | Pair(a, b) => very_pure(a) && very_pure(b),
        Fold(_, a) | Unfold(a) => very_pure(a),
        If(a, b, c) => very_pure(a) && very_pure(b) && very_pure(c),
        Sub(_, a) | GetRoot(_, a) | TAbs(_, _, a) | TApp(a, _) => very_pure(a),
        Call(..) | Proj(..) | Inj(..) | Case(..) | Alloc(..) | Load(..) | Store(..) | Length(_)
        | Cas(..) | Par(..) | ActivePar(..) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse_expr;

    fn vp(s: &str) -> bool {
        very_pure(&parse_expr(s).unwrap())
    }

    #[test]
    fn table() {
        assert!(vp("fun f (x: int) @d : array int @ d -> alloc(1, x)"));
        assert!(!vp("alloc(1, 0)"));
        assert!(vp("(1, fold[mu a . (int * int) @ d] 2)"));
        assert!(vp("let x = 1 + 2 in if x == 3 then x else unfold y"));
        assert!(!vp("fst (1, 2)"));
        assert!(!vp("f(1)"));
        assert!(!vp("if true then 1 else a.[0]"));
        assert!(vp("sub[int] (getroot x in 3)"));
    }
}
