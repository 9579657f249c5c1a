//! Automatic differentiation.
//!
//! [`Tape`] is a scalar graph whose derivatives are themselves recorded on the
//! graph, giving arbitrary-order derivatives. [`Graph`] is a batched
//! matrix-level reverse-mode engine used by the training loop.

mod graph;
mod real;
mod tape;

pub use graph::{ordered_sum, Graph, Jet, Tid};
pub use real::Real;
pub use tape::{input_gradient, record, Diagnostics, Node, NodeId, Op, Tape, Var};
