use super::problems::{problem, ProblemId};
use crate::error::Result;
use crate::losses::{LossKind, PdeSpec};
use crate::networks::ModelKind;
use crate::trainer::TrainConfig;

/// A benchmark problem with its default run configuration.
pub struct Preset {
    pub id: ProblemId,
    pub pde: PdeSpec,
    pub config: TrainConfig,
}

/// Default configuration of each benchmark.
pub fn preset_config(id: ProblemId) -> TrainConfig {
    let base = TrainConfig {
        problem: id,
        d: 5,
        n_r: 4000,
        n_b: 4000,
        n_t: 20,
        k_u: 2,
        k_phi: 1,
        alpha: 1e7,
        beta: 1e5,
        gamma: 0.0,
        gamma_d: 1e-3,
        epsilon: 1e-2,
        l_theta: 0.015,
        l_eta: 0.04,
        u_layers: 8,
        u_hid_dim1: 20,
        u_hid_dim2: 10,
        v_layers: 9,
        v_hid_dim: 50,
        n_max: 300,
        loss: LossKind::Cwan,
        model: ModelKind::XnodeRecursive,
        seed: 1,
    };
    match id {
        ProblemId::Ex1 => base,
        ProblemId::Ex2 => TrainConfig { alpha: 1e5, beta: 1e7, gamma: 1e5, model: ModelKind::PseudoTimeXnode, ..base },
        ProblemId::Ex3 => TrainConfig {
            alpha: 6e7,
            beta: 12e7,
            gamma: 12e7,
            gamma_d: 0.5,
            l_eta: 0.03,
            u_layers: 12,
            n_max: 600,
            model: ModelKind::PseudoTimeXnode,
            ..base
        },
    }
}

pub fn build_preset(id: ProblemId) -> Result<Preset> {
    let config = preset_config(id);
    Ok(Preset { id, pde: problem(id, config.d)?, config })
}

/// Parses a preset name.
pub fn build_preset_named(name: &str) -> Result<Preset> {
    build_preset(ProblemId::parse(name)?)
}
