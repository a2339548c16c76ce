use std::collections::{BTreeMap, BTreeSet};

use crate::symbol::Symbol;
use crate::types::{
    alpha_eq, graph_subsumes, reachable, subst_types, tsubst, valid_variable, ArrowType, BoxedType,
    LogicalGraph, TsMap, TsVar, Type,
};

/// The rules used by a successful subtiming derivation, in the order they
/// were applied.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SubDerivation {
    pub rules: Vec<&'static str>,
}

/// Δ; δ ⊢ ρ1 ≤ ρ2 on β-normal types.
pub fn subtime(g: &LogicalGraph, d: &TsVar, r1: &Type, r2: &Type) -> bool {
    subtime_derivation(g, d, r1, r2).is_some()
}

pub fn subtime_derivation(g: &LogicalGraph, d: &TsVar, r1: &Type, r2: &Type) -> Option<SubDerivation> {
    let mut s = Search { rules: Vec::new() };
    s.ty(g, d, r1, r2).then_some(SubDerivation { rules: s.rules })
}

struct Search {
    rules: Vec<&'static str>,
}

fn boxed_eq(a: &BoxedType, b: &BoxedType) -> bool {
    let stamp = Symbol::new("$stamp");
    alpha_eq(&Type::at(a.clone(), stamp.clone()), &Type::at(b.clone(), stamp))
}

fn rename_ty(b: &BoxedType, from: &Symbol, to: &Symbol) -> BoxedType {
    let t = Type::at(b.clone(), Symbol::new("$stamp"));
    let m = BTreeMap::from([(from.clone(), Type::Var(to.clone()))]);
    match subst_types(&t, &TsMap::new(), &m) {
        Type::At(b, _) => *b,
        _ => unreachable!(),
    }
}

/// S-At and S-Rec share their stamp premises.
fn restamp_ok(g: &LogicalGraph, d: &TsVar, d1: &TsVar, d2: &TsVar) -> bool {
    reachable(g, d1, d2) && (d1 == d2 || reachable(g, d2, d))
}

impl Search {
    fn attempt(&mut self, f: impl FnOnce(&mut Search) -> bool) -> bool {
        let mark = self.rules.len();
        let ok = f(self);
        if !ok {
            self.rules.truncate(mark);
        }
        ok
    }

    fn ty(&mut self, g: &LogicalGraph, d: &TsVar, r1: &Type, r2: &Type) -> bool {
        if alpha_eq(r1, r2) {
            self.rules.push("S-Refl");
            return true;
        }
        match (r1, r2) {
            (Type::At(b1, d1), Type::At(b2, d2)) => self.attempt(|s| {
                s.rules.push("S-At");
                restamp_ok(g, d, d1, d2) && s.boxed(g, d2, b1, b2)
            }),
            (Type::Rec(a1, b1, d1), Type::Rec(a2, b2, d2)) => self.attempt(|s| {
                s.rules.push("S-Rec");
                let a = Symbol::fresh(a2.base());
                let b1 = rename_ty(b1, a1, &a);
                let b2 = rename_ty(b2, a2, &a);
                restamp_ok(g, d, d1, d2)
                    && s.boxed(g, d2, &b1, &b2)
                    && valid_variable(g, &a, d2, d2, &b2)
            }),
            (Type::Forall(a1, k1, t1), Type::Forall(a2, k2, t2)) if k1 == k2 => self.attempt(|s| {
                s.rules.push("S-TAbs");
                let a = Type::Var(Symbol::fresh(a2.base()));
                let t1 = subst_types(t1, &TsMap::new(), &BTreeMap::from([(a1.clone(), a.clone())]));
                let t2 = subst_types(t2, &TsMap::new(), &BTreeMap::from([(a2.clone(), a)]));
                s.ty(g, d, &t1, &t2)
            }),
            _ => false,
        }
    }

    fn boxed(&mut self, g: &LogicalGraph, d: &TsVar, b1: &BoxedType, b2: &BoxedType) -> bool {
        if boxed_eq(b1, b2) {
            self.rules.push("S-ReflAt");
            return true;
        }
        match (b1, b2) {
            (BoxedType::Product(l1, r1), BoxedType::Product(l2, r2)) => self.attempt(|s| {
                s.rules.push("S-Pair");
                s.ty(g, d, l1, l2) && s.ty(g, d, r1, r2)
            }),
            (BoxedType::Sum(l1, r1), BoxedType::Sum(l2, r2)) => self.attempt(|s| {
                s.rules.push("S-Sum");
                s.ty(g, d, l1, l2) && s.ty(g, d, r1, r2)
            }),
            (BoxedType::Arrow(a1), BoxedType::Arrow(a2)) => self.arrow(g, d, a1, a2),
            _ => false,
        }
    }

    /// S-Abs, preceded by one S-Inst per quantifier that the right-hand side
    /// lacks. Kept quantifiers are matched positionally; each dropped one is
    /// instantiated with a timestamp already in scope.
    fn arrow(&mut self, g: &LogicalGraph, d: &TsVar, a1: &ArrowType, a2: &ArrowType) -> bool {
        let (n1, n2) = (a1.ts_params.len(), a2.ts_params.len());
        if n1 < n2 || a1.args.len() != a2.args.len() {
            return false;
        }
        // Both sides are opened with the same fresh names so that neither
        // side's free timestamps can be captured.
        let fresh: Vec<TsVar> = a2.ts_params.iter().map(|p| Symbol::fresh(p.base())).collect();
        let m2: TsMap = a2.ts_params.iter().cloned().zip(fresh.iter().cloned()).collect();
        let open2 = open(a2, &m2);
        let dropped = n1 - n2;
        let mut candidates: BTreeSet<TsVar> = fresh.iter().cloned().collect();
        candidates.extend(Type::at(BoxedType::Arrow(a2.clone()), d.clone()).free_ts());
        for (x, y) in g.edges() {
            candidates.insert(x.clone());
            candidates.insert(y.clone());
        }
        let candidates: Vec<TsVar> = candidates.into_iter().collect();
        for kept in combinations(n1, n2) {
            let drop_at: Vec<usize> = (0..n1).filter(|i| !kept.contains(i)).collect();
            let mut choice = vec![0usize; dropped];
            loop {
                let mut m = TsMap::new();
                for (j, &i) in kept.iter().enumerate() {
                    m.insert(a1.ts_params[i].clone(), fresh[j].clone());
                }
                for (k, &i) in drop_at.iter().enumerate() {
                    m.insert(a1.ts_params[i].clone(), candidates[choice[k]].clone());
                }
                let open1 = open(a1, &m);
                let ok = self.attempt(|s| {
                    for _ in 0..dropped {
                        s.rules.push("S-Inst");
                    }
                    s.rules.push("S-Abs");
                    s.abs(g, &open1, &open2)
                });
                if ok {
                    return true;
                }
                if !advance(&mut choice, candidates.len()) {
                    break;
                }
            }
        }
        false
    }

    /// S-Abs on two arrows whose quantifiers have already been opened to the
    /// same names.
    fn abs(&mut self, g: &LogicalGraph, a1: &Opened, a2: &Opened) -> bool {
        if a1.run != a2.run {
            return false;
        }
        let g2 = g.union(&a2.constraints);
        if !graph_subsumes(&g2, &a1.constraints) {
            return false;
        }
        for (t1, t2) in a1.args.iter().zip(&a2.args) {
            if !self.ty(&g2, &a2.run, t2, t1) {
                return false;
            }
        }
        self.ty(&g2, &a2.run, &a1.ret, &a2.ret)
    }
}

struct Opened {
    constraints: LogicalGraph,
    args: Vec<Type>,
    run: TsVar,
    ret: Type,
}

fn open(a: &ArrowType, m: &TsMap) -> Opened {
    let var = |x: &TsVar| m.get(x).cloned().unwrap_or_else(|| x.clone());
    Opened {
        constraints: a.constraints.map(var),
        args: a.args.iter().map(|t| tsubst(t, m)).collect(),
        run: var(&a.run),
        ret: tsubst(&a.ret, m),
    }
}

/// All increasing index sequences of length k drawn from 0..n.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn advance(choice: &mut [usize], base: usize) -> bool {
    for c in choice.iter_mut() {
        *c += 1;
        if *c < base {
            return true;
        }
        *c = 0;
    }
    false
}
