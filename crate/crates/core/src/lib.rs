//! A fork-join language with timestamped types, the checker that guarantees
//! disentanglement, and an instrumented runtime that observes it.

pub mod ast;
pub mod checker;
pub mod corpus;
pub mod explorer;
pub mod int;
pub mod monitor;
pub mod runtime;
pub mod surface;
pub mod symbol;
pub mod types;
