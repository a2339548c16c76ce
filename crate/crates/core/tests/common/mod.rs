#![allow(dead_code)]

pub mod gen;

use dl2::ast::{Block, Expr, Side, Value};
use dl2::corpus;
use dl2::runtime::Configuration;

pub fn program(name: &str) -> Expr {
    corpus::get(name).unwrap().program().unwrap().erased()
}

/// A corpus entry's definitions under a different main expression.
pub fn variant(name: &str, main: &str) -> Expr {
    let src = corpus::get(name).unwrap().parse().unwrap();
    src.with_main(main).unwrap().elaborate().unwrap().erased()
}

pub fn int(v: &Value) -> i64 {
    v.as_int().and_then(|i| i.to_i64()).expect("an integer")
}

/// Leaf labels of a `tree`, left to right.
pub fn flatten_tree(cfg: &Configuration, v: &Value) -> Vec<i64> {
    let Value::Fold(inner) = v else { panic!("not a folded tree: {v}") };
    match cfg.block(inner.as_loc().unwrap()) {
        Some(Block::Inj(Side::Left, x)) => vec![int(x)],
        Some(Block::Inj(Side::Right, p)) => match cfg.block(p.as_loc().unwrap()) {
            Some(Block::Pair(l, r)) => {
                let mut out = flatten_tree(cfg, l);
                out.extend(flatten_tree(cfg, r));
                out
            }
            other => panic!("bad node {other:?}"),
        },
        other => panic!("bad tree block {other:?}"),
    }
}

pub fn int_array(cfg: &Configuration, v: &Value) -> Vec<i64> {
    match cfg.block(v.as_loc().expect("an array location")) {
        Some(Block::Array(vs)) => vs.iter().map(int).collect(),
        other => panic!("not an array: {other:?}"),
    }
}

pub fn bool_pair(cfg: &Configuration, v: &Value) -> (bool, bool) {
    match cfg.block(v.as_loc().expect("a pair location")) {
        Some(Block::Pair(Value::Bool(a), Value::Bool(b))) => (*a, *b),
        other => panic!("not a pair of booleans: {other:?}"),
    }
}

/// The main expression for dedup over `input`.
pub fn dedup_main(input: &[i64]) -> String {
    let mut s = format!("let input = alloc({}, 0) in ", input.len());
    for (i, x) in input.iter().enumerate() {
        s.push_str(&format!("input.[{i}] <- {x}; "));
    }
    s.push_str("dedup {int} [d0, d0, d0] (hash, -1, input)");
    s
}
