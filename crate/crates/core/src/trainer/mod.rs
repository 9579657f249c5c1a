//! Alternating descent/ascent training with Adam updates.

mod config;

use std::time::Instant;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use config::TrainConfig;

use crate::error::{Result, WanError};
use crate::geometry::{DomainKind, SampleBatch, Slices};
use crate::losses::{evaluate, LossKind, PdeSpec, Prepared, Test, Trial, Wrt};
use crate::networks::{adversary_arch, DnnParams, TrialNet, TrialSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Descent,
    Ascent,
}

/// Adam with bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }

    /// Updates `params` in place. A non-finite gradient leaves parameters
    /// and moments untouched.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64], dir: Direction) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(WanError::Dimension { expected: self.m.len(), got: grads.len() });
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(WanError::Other(format!("non-finite gradient component {i}: {}", grads[i])));
        }
        self.step += 1;
        let sign = match dir {
            Direction::Descent => -1.0,
            Direction::Ascent => 1.0,
        };
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] += sign * self.lr * mh / (vh.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// `Σ(u − u_θ)² / Σu²` over the rows of `pts`.
pub fn relative_error(net: &TrialNet, pde: &PdeSpec, pts: &Array2<f64>) -> Result<f64> {
    let exact = pde.exact.as_ref().ok_or_else(|| WanError::Other("problem has no exact solution".into()))?;
    if pts.nrows() == 0 {
        return Err(WanError::Other("empty test batch".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for r in 0..pts.nrows() {
        let p = pts.row(r).to_vec();
        let u = exact.value(&p);
        let uh = net.eval(&p, datum_at(pde, &p))?;
        num += (u - uh).powi(2);
        den += u * u;
    }
    if den == 0.0 {
        return Err(WanError::IllPosed("exact solution vanishes on the test batch".into()));
    }
    Ok(num / den)
}

/// XNODE datum at `p` with coordinate 0 frozen at its lower bound.
pub fn datum_at(pde: &PdeSpec, p: &[f64]) -> f64 {
    let mut q = p.to_vec();
    q[0] = pde.domain.lower[0];
    pde.datum_field().value(&q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    ToleranceMet,
    MaxIterations,
    Diverged,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::ToleranceMet => "tolerance-met",
            StopReason::MaxIterations => "max-iterations",
            StopReason::Diverged => "diverged",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    /// Loss at the first θ-update of the step.
    pub loss: f64,
    pub rel_error: f64,
    /// Wall time since the start of training.
    pub seconds: f64,
    pub theta_seconds: f64,
    pub eta_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainHistory {
    pub records: Vec<StepRecord>,
    pub stop: StopReason,
    pub steps: usize,
    pub diagnostic: Option<String>,
}

impl TrainHistory {
    pub fn final_error(&self) -> Option<f64> {
        self.records.last().map(|r| r.rel_error)
    }

    /// Equality of everything except wall-clock timings.
    pub fn same_trajectory(&self, other: &TrainHistory) -> bool {
        self.stop == other.stop
            && self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| {
                a.step == b.step && a.loss.to_bits() == b.loss.to_bits() && a.rel_error.to_bits() == b.rel_error.to_bits()
            })
    }

    /// `step,loss,rel_error,seconds`; the timing column is zero unless
    /// `timing` is set, so that reruns are byte-identical.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut s = String::from("step,loss,rel_error,seconds\n");
        for r in &self.records {
            let secs = if timing { r.seconds } else { 0.0 };
            s.push_str(&format!("{},{:e},{:e},{}\n", r.step, r.loss, r.rel_error, secs));
        }
        s
    }
}

pub struct TrainOutcome {
    pub history: TrainHistory,
    pub u: TrialNet,
    pub v: Option<DnnParams>,
}

/// Loss magnitude treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Runs the alternating loop until the test error drops below `epsilon`,
/// `N_max` steps are used, or the run diverges.
pub fn train(cfg: &TrainConfig, pde: &PdeSpec) -> Result<TrainOutcome> {
    train_observed(cfg, pde, |_| {})
}

/// [`train`], calling `observe` after each recorded step.
pub fn train_observed(cfg: &TrainConfig, pde: &PdeSpec, mut observe: impl FnMut(&StepRecord)) -> Result<TrainOutcome> {
    cfg.validate()?;
    let spec = cfg.loss_spec();
    let dim = pde.domain.dim();
    let time_box = pde.domain.kind == DomainKind::TimeBox;
    let slices = Slices { initial: time_box || cfg.pseudo_time(), terminal: cfg.pseudo_time() };
    let (k_u, k_phi) = if cfg.loss == LossKind::Pinn { (1, 0) } else { (cfg.k_u, cfg.k_phi) };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let clock_extent = pde.domain.extent(0);
    let tspec = TrialSpec {
        kind: cfg.model,
        input_dim: dim,
        layers: cfg.u_layers,
        hid1: cfg.u_hid_dim1,
        hid2: cfg.u_hid_dim2,
        n_t: cfg.n_t,
        horizon: clock_extent,
    };
    let mut u = TrialNet::init(&tspec, &mut rng)?;
    let mut v = if cfg.loss.adversarial() {
        Some(DnnParams::init(adversary_arch(dim, cfg.v_layers, cfg.v_hid_dim)?, &mut rng))
    } else {
        None
    };
    let test_pts = pde.domain.sample_interior(cfg.n_r, &mut rng);
    let mut batch = SampleBatch::draw(&pde.domain, cfg.n_r, cfg.n_b, slices, &mut rng)?;

    let mut opt_u = Adam::new(u.len(), cfg.l_theta);
    let mut opt_v = v.as_ref().map(|v| Adam::new(v.len(), cfg.l_eta));
    let second = cfg.loss == LossKind::Pinn;
    let start = Instant::now();
    let mut records = Vec::new();
    let mut diagnostic = None;
    let mut stop = StopReason::MaxIterations;

    for step in 1..=cfg.n_max {
        let prep = Prepared::new(pde, &batch, u.needs_datum(), second)?;
        let mut loss = f64::NAN;
        let t0 = Instant::now();
        let mut failed = None;
        for k in 0..k_u {
            let ev = evaluate(pde, &spec, Trial::Net(&u), v.as_ref().map(Test::Net), &prep, Wrt::Theta)?;
            if k == 0 {
                loss = ev.value;
            }
            let mut w = u.flat();
            if let Err(e) = opt_u.update(&mut w, ev.grad.as_deref().unwrap_or(&[]), Direction::Descent) {
                failed = Some(format!("θ-update at step {step}: {e}"));
                break;
            }
            u.set_flat(&w)?;
        }
        let theta_seconds = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        if failed.is_none() {
            if let (Some(vn), Some(opt)) = (v.as_mut(), opt_v.as_mut()) {
                for _ in 0..k_phi {
                    let ev = evaluate(pde, &spec, Trial::Net(&u), Some(Test::Net(vn)), &prep, Wrt::Eta)?;
                    if k_u == 0 && loss.is_nan() {
                        loss = ev.value;
                    }
                    if let Err(e) = opt.update(&mut vn.data, ev.grad.as_deref().unwrap_or(&[]), Direction::Ascent) {
                        failed = Some(format!("η-update at step {step}: {e}"));
                        break;
                    }
                }
            }
        }
        let eta_seconds = t1.elapsed().as_secs_f64();
        batch = SampleBatch::draw(&pde.domain, cfg.n_r, cfg.n_b, slices, &mut rng)?;
        let rel_error = relative_error(&u, pde, &test_pts)?;
        let rec = StepRecord { step, loss, rel_error, seconds: start.elapsed().as_secs_f64(), theta_seconds, eta_seconds };
        observe(&rec);
        records.push(rec);
        if failed.is_some() || !loss.is_finite() || loss.abs() > DIVERGENCE_LIMIT || !rel_error.is_finite() {
            stop = StopReason::Diverged;
            diagnostic = Some(failed.unwrap_or_else(|| format!("loss {loss:e}, relative error {rel_error:e} at step {step}")));
            break;
        }
        if rel_error < cfg.epsilon {
            stop = StopReason::ToleranceMet;
            break;
        }
    }
    let steps = records.len();
    Ok(TrainOutcome { history: TrainHistory { records, stop, steps, diagnostic }, u, v })
}
