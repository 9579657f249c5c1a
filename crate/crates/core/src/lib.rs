// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod experiments;
pub mod geometry;
pub mod losses;
pub mod networks;
pub mod theory_lab;
pub mod trainer;
pub mod error;

pub use error::{Result, WanError};
