use serde::{Deserialize, Serialize};

use crate::error::{Result, WanError};
use crate::experiments::ProblemId;
use crate::losses::{LossKind, LossSpec};
use crate::networks::ModelKind;

/// All knobs of one training run. Serialized as flat JSON with the
/// hyperparameter names of the benchmark tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub problem: ProblemId,
    /// Spatial dimension.
    pub d: usize,
    #[serde(rename = "N_r")]
    pub n_r: usize,
    #[serde(rename = "N_b")]
    pub n_b: usize,
    #[serde(rename = "n_T")]
    pub n_t: usize,
    #[serde(rename = "K_u")]
    pub k_u: usize,
    #[serde(rename = "K_phi")]
    pub k_phi: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub gamma_d: f64,
    pub epsilon: f64,
    pub l_theta: f64,
    pub l_eta: f64,
    pub u_layers: usize,
    #[serde(rename = "u_hid-dim1")]
    pub u_hid_dim1: usize,
    #[serde(rename = "u_hid-dim2")]
    pub u_hid_dim2: usize,
    pub v_layers: usize,
    #[serde(rename = "v_hid-dim")]
    pub v_hid_dim: usize,
    #[serde(rename = "N_max")]
    pub n_max: usize,
    pub loss: LossKind,
    pub model: ModelKind,
    pub seed: u64,
}

fn bad(field: &str, reason: impl Into<String>) -> WanError {
    WanError::Config { field: field.into(), reason: reason.into() }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d", self.d),
            ("N_r", self.n_r),
            ("N_b", self.n_b),
            ("n_T", self.n_t),
            ("u_layers", self.u_layers),
            ("u_hid-dim1", self.u_hid_dim1),
            ("u_hid-dim2", self.u_hid_dim2),
            ("v_hid-dim", self.v_hid_dim),
            ("N_max", self.n_max),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(bad(name, "must be at least 1"));
            }
        }
        if self.d < 2 {
            return Err(bad("d", format!("needs at least 2 dimensions, got {}", self.d)));
        }
        if !(self.epsilon > 0.0) {
            return Err(bad("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        for (name, v) in [("l_theta", self.l_theta), ("l_eta", self.l_eta)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(bad(name, format!("must be a positive number, got {v}")));
            }
        }
        if self.loss != LossKind::Pinn && self.k_u + self.k_phi == 0 {
            return Err(bad("K_u", "K_u and K_phi cannot both be 0"));
        }
        if self.model == ModelKind::PseudoTimeXnode && self.problem == ProblemId::Ex1 {
            return Err(bad("model", "pseudo-time-xnode is for static problems"));
        }
        self.loss_spec().validate()
    }

    /// Pseudo-time models treat the faces `x₁ = 0` and `x₁ = 1` as initial
    /// and terminal slices.
    pub fn pseudo_time(&self) -> bool {
        self.model == ModelKind::PseudoTimeXnode
    }

    pub fn loss_spec(&self) -> LossSpec {
        LossSpec {
            kind: self.loss,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            gamma_d: self.gamma_d,
            include_terminal: self.pseudo_time(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| bad(&serde_field(&e), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

/// Field named in a serde error message, if any.
fn serde_field(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    msg.split('`').nth(1).map(str::to_string).unwrap_or_else(|| "<json>".to_string())
}
