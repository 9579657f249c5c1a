//! Finite-dimensional surrogates for the trial and test classes: dual
//! norms, stabilized suprema, inf-sup constants and quasi-optimality.

mod cea;
mod operator;
mod space;
mod verify;

pub use cea::{cea_experiment, CeaBound, CeaReport};
pub use operator::{Ascent, BilinearOperator, InfSup, SupResult};
pub use space::{Form1d, InnerProduct, Quadrature, Sampled, SurrogateSpace};
pub use verify::{cea_instances, infsup_eigen_oracle, nested_hat_operator, random_instance, stabilized_discrepancy, verify_suite, Check, Fault};
