use std::collections::{BTreeMap, BTreeSet};

use super::TsVar;

/// Δ: a finite set of precedence edges between timestamp variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LogicalGraph {
    edges: BTreeSet<(TsVar, TsVar)>,
}

impl LogicalGraph {
    pub fn new() -> LogicalGraph {
        LogicalGraph::default()
    }

    pub fn from_edges(edges: impl IntoIterator<Item = (TsVar, TsVar)>) -> LogicalGraph {
        LogicalGraph {
            edges: edges.into_iter().collect(),
        }
    }

    pub fn edge(a: TsVar, b: TsVar) -> LogicalGraph {
        LogicalGraph::from_edges([(a, b)])
    }

    pub fn insert(&mut self, a: TsVar, b: TsVar) -> bool {
        self.edges.insert((a, b))
    }

    pub fn remove(&mut self, a: &TsVar, b: &TsVar) -> bool {
        self.edges.remove(&(a.clone(), b.clone()))
    }

    pub fn edges(&self) -> impl Iterator<Item = (&TsVar, &TsVar)> {
        self.edges.iter().map(|(a, b)| (a, b))
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn union(&self, other: &LogicalGraph) -> LogicalGraph {
        LogicalGraph {
            edges: self.edges.union(&other.edges).cloned().collect(),
        }
    }

    pub fn extend(&mut self, other: &LogicalGraph) {
        self.edges.extend(other.edges.iter().cloned());
    }

    pub fn map(&self, f: impl Fn(&TsVar) -> TsVar) -> LogicalGraph {
        LogicalGraph {
            edges: self.edges.iter().map(|(a, b)| (f(a), f(b))).collect(),
        }
    }

    /// Every vertex reachable from `from`, including itself.
    pub fn reach_set(&self, from: &TsVar) -> BTreeSet<TsVar> {
        let mut succ: BTreeMap<&TsVar, Vec<&TsVar>> = BTreeMap::new();
        for (a, b) in &self.edges {
            succ.entry(a).or_default().push(b);
        }
        let mut seen = BTreeSet::new();
        seen.insert(from.clone());
        let mut stack = vec![from];
        while let Some(x) = stack.pop() {
            for &y in succ.get(x).into_iter().flatten() {
                if seen.insert(y.clone()) {
                    stack.push(y);
                }
            }
        }
        seen
    }
}

/// R-Refl / R-Cons: reflexive-transitive closure of Δ.
pub fn reachable(g: &LogicalGraph, from: &TsVar, to: &TsVar) -> bool {
    from == to || g.reach_set(from).contains(to)
}

/// R-Logical: Δ ⊢ Δ′ when every edge of Δ′ is reachable in Δ.
pub fn graph_subsumes(g: &LogicalGraph, sub: &LogicalGraph) -> bool {
    let mut memo: BTreeMap<&TsVar, BTreeSet<TsVar>> = BTreeMap::new();
    sub.edges().all(|(a, b)| {
        a == b || memo.entry(a).or_insert_with(|| g.reach_set(a)).contains(b)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::Symbol;

    fn s(x: &str) -> TsVar {
        Symbol::new(x)
    }

    fn g(edges: &[(&str, &str)]) -> LogicalGraph {
        LogicalGraph::from_edges(edges.iter().map(|(a, b)| (s(a), s(b))))
    }

    #[test]
    fn reachability_examples() {
        assert!(reachable(&LogicalGraph::new(), &s("d"), &s("d")));
        let chain = g(&[("d1", "d2"), ("d2", "d3")]);
        assert!(reachable(&chain, &s("d1"), &s("d3")));
        assert!(!reachable(&g(&[("d1", "d2")]), &s("d2"), &s("d1")));
    }

    #[test]
    fn subsumption_examples() {
        let abc = g(&[("a", "b"), ("b", "c")]);
        assert!(graph_subsumes(&abc, &LogicalGraph::new()));
        assert!(graph_subsumes(&abc, &g(&[("a", "c")])));
        assert!(!graph_subsumes(&g(&[("a", "b")]), &g(&[("b", "a")])));
    }

    #[test]
    fn cycles_terminate() {
        let cyc = g(&[("a", "b"), ("b", "a"), ("b", "c")]);
        assert!(reachable(&cyc, &s("a"), &s("c")));
        assert!(!reachable(&cyc, &s("c"), &s("a")));
    }
}
