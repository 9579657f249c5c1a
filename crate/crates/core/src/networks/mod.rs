//! Trainable function classes: feed-forward and recursive DNNs and the
//! XNODE family.

mod dnn;
mod model;
mod xnode;

pub use dnn::{
    dnn_forward_generic, flatten_grads, linear_forward_generic, linear_param_count, Activation, DnnArch, DnnParams,
    LinearParams,
};
pub use model::{adversary_arch, DatumJet, ModelKind, TrialNet, TrialSpec};
pub use xnode::{euler_trajectory, xnode_eval_generic, xnode_trajectory_generic, TimeGrid, XnodeArch, XnodeBatch, XnodeParams};
