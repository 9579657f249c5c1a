//! Weak and strong residual losses: PINN, WAN, CutWAN and shifted CutWAN,
//! with initial, boundary and terminal penalties.
//!
//! All functionals are assembled on one [`Graph`] per evaluation. The
//! solution network sees its point coordinates through forward tangents, so
//! `∇_x u` is part of the graph and a single reverse sweep yields `∇_θ` or
//! `∇_η` of the loss.

mod field;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

pub use field::{batch_jet, batch_values, field_jet, ConstField, FieldRef, ScalarField};

use crate::autodiff::{Graph, Jet, Tid};
use crate::error::{Result, WanError};
use crate::geometry::{BoxDomain, Cutoff, DomainKind, PointSet, SampleBatch};
use crate::networks::{flatten_grads, Activation, DatumJet, DnnParams, TrialNet};

/// Zeroth-order term `c(u, x)·u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Reaction {
    None,
    /// `c·u`
    Linear(f64),
    /// `−u²`
    NegSquare,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FormKind {
    /// `∂t u − a Δu + b·∇u + c(u)u = f` on a time box.
    Parabolic { diffusion: f64, drift: Vec<f64>, reaction: Reaction },
    /// `−Δu = f`.
    Poisson,
    /// `−∇·((1 + |x|²)∇u) + ½|∇u|² = f`.
    GradientNonlinear,
}

/// A boundary-value problem on a box.
#[derive(Clone)]
pub struct PdeSpec {
    pub form: FormKind,
    pub domain: BoxDomain,
    pub source: FieldRef,
    /// Dirichlet datum on the lateral boundary (and on both coordinate-0
    /// slices for pseudo-time models).
    pub boundary: FieldRef,
    /// Initial datum `h` for parabolic problems.
    pub initial: Option<FieldRef>,
    pub exact: Option<FieldRef>,
}

impl PdeSpec {
    /// Coordinates the diffusion acts on.
    pub fn spatial_dirs(&self) -> Vec<usize> {
        match self.domain.kind {
            DomainKind::TimeBox => (1..self.domain.dim()).collect(),
            DomainKind::StaticBox => (0..self.domain.dim()).collect(),
        }
    }

    /// Datum fed to XNODE models: `h` on a time box, `g` otherwise, read
    /// with coordinate 0 frozen at its lower bound.
    pub fn datum_field(&self) -> &dyn ScalarField {
        self.initial.as_deref().unwrap_or(&*self.boundary)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Pinn,
    Wan,
    Cwan,
    Scwan,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Pinn => "pinn",
            LossKind::Wan => "wan",
            LossKind::Cwan => "cwan",
            LossKind::Scwan => "scwan",
        }
    }

    pub fn adversarial(self) -> bool {
        self != LossKind::Pinn
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Weight of the initial-slice penalty.
    pub alpha: f64,
    /// Weight of the lateral-boundary penalty.
    pub beta: f64,
    /// Weight of the terminal-slice penalty.
    pub gamma: f64,
    /// Stabilisation constant of cwan/scwan.
    pub gamma_d: f64,
    pub include_terminal: bool,
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(WanError::Config { field: name.into(), reason: format!("must be a nonnegative number, got {v}") });
            }
        }
        if matches!(self.kind, LossKind::Cwan | LossKind::Scwan) && !(self.gamma_d > 0.0) {
            return Err(WanError::Config { field: "gamma_d".into(), reason: format!("must be positive, got {}", self.gamma_d) });
        }
        Ok(())
    }
}

/// What plays the role of `u`: a network or an analytic field.
#[derive(Clone, Copy)]
pub enum Trial<'a> {
    Net(&'a TrialNet),
    Field(&'a dyn ScalarField),
}

/// What plays the role of the test function `v`.
#[derive(Clone, Copy)]
pub enum Test<'a> {
    Net(&'a DnnParams),
    Field(&'a dyn ScalarField),
}

/// Which parameters receive gradients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wrt {
    Nothing,
    Theta,
    Eta,
}

/// A penalised point set with its target values.
#[derive(Clone, Debug)]
struct Penalty {
    set: PointSet,
    target: Array2<f64>,
    datum: Option<DatumJet>,
}

/// Batch-dependent constants shared by all evaluations between resamples:
/// cutoff values, source values, boundary targets and XNODE datum jets.
#[derive(Clone, Debug)]
pub struct Prepared {
    interior: PointSet,
    phi: Array2<f64>,
    grad_phi: Array2<f64>,
    source: Array2<f64>,
    datum: Option<DatumJet>,
    boundary: Penalty,
    initial: Option<Penalty>,
    terminal: Option<Penalty>,
    second: bool,
}

fn column(v: Vec<f64>) -> Array2<f64> {
    let n = v.len();
    Array2::from_shape_vec((n, 1), v).unwrap()
}

impl Prepared {
    /// `with_datum` precomputes initial-datum jets for XNODE models;
    /// `second` adds second derivatives (PINN).
    pub fn new(pde: &PdeSpec, batch: &SampleBatch, with_datum: bool, second: bool) -> Result<Self> {
        let dim = pde.domain.dim();
        if batch.interior.points.ncols() != dim || batch.boundary.points.ncols() != dim {
            return Err(WanError::Dimension { expected: dim, got: batch.interior.points.ncols() });
        }
        let clock = Some(pde.domain.lower[0]);
        let all: Vec<usize> = (0..dim).collect();
        let cutoff = Cutoff::for_domain(&pde.domain);
        let (phi, grad_phi) = cutoff.eval_batch(&batch.interior.points);
        let source = column(batch_values(&*pde.source, &batch.interior.points));
        let datum = with_datum.then(|| batch_jet(pde.datum_field(), &batch.interior.points, &all, second, clock));
        let penalty = |set: &PointSet, target: &dyn ScalarField| Penalty {
            set: set.clone(),
            target: column(batch_values(target, &set.points)),
            datum: with_datum.then(|| batch_jet(pde.datum_field(), &set.points, &[], false, clock)),
        };
        let boundary = penalty(&batch.boundary, &*pde.boundary);
        let initial = batch.initial.as_ref().map(|s| penalty(s, pde.datum_field()));
        let terminal = batch.terminal.as_ref().map(|s| penalty(s, &*pde.boundary));
        Ok(Self { interior: batch.interior.clone(), phi, grad_phi, source, datum, boundary, initial, terminal, second })
    }
}

/// Per-term values of one evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LossParts {
    /// Weak pairing `(A(u) − f, φv)`, or the strong residual norm for PINN.
    pub residual: f64,
    pub test_l2_sq: f64,
    pub test_h1_sq: f64,
    pub test_h1_semi: f64,
    pub l_init: f64,
    pub l_bdry: f64,
    pub l_last: f64,
}

#[derive(Clone, Debug)]
pub struct LossEval {
    pub value: f64,
    pub parts: LossParts,
    /// Flat gradient with respect to the parameters named by [`Wrt`].
    pub grad: Option<Vec<f64>>,
}

struct Built {
    jet: Jet,
    leaves: Vec<Tid>,
}

fn build_trial(
    g: &mut Graph,
    trial: Trial,
    pts: &Array2<f64>,
    dirs: &[usize],
    datum: Option<&DatumJet>,
    trainable: bool,
    second: bool,
) -> Result<Built> {
    match trial {
        Trial::Net(net) => {
            let (jet, leaves) = net.build(g, pts, dirs, datum, trainable, second)?;
            Ok(Built { jet, leaves })
        }
        Trial::Field(f) => {
            let d = batch_jet(f, pts, dirs, second, None);
            let val = g.column(&d.val);
            let mut jet = Jet::constant(val, dirs.len());
            for k in 0..dirs.len() {
                jet.d1[k] = Some(g.column(&d.d1[k]));
                if second {
                    jet.d2[k] = Some(g.column(&d.d2[k]));
                }
            }
            Ok(Built { jet, leaves: Vec::new() })
        }
    }
}

fn const_col(g: &mut Graph, a: &Array2<f64>, j: usize) -> Tid {
    g.constant(a.column(j).to_owned().insert_axis(Axis(1)))
}

/// `factor · mean(x)` as a 1×1 node.
fn mc(g: &mut Graph, x: Tid, factor: f64) -> Tid {
    let m = g.mean(x);
    g.scale(m, factor)
}

fn sum_opt(g: &mut Graph, terms: Vec<Tid>) -> Option<Tid> {
    terms.into_iter().reduce(|a, b| g.add(a, b))
}

/// Squared Monte Carlo L² misfit `factor·mean((u − target)²)`.
fn misfit_sq(g: &mut Graph, trial: Trial, p: &Penalty, trainable: bool) -> Result<(Tid, Vec<Tid>)> {
    let u = build_trial(g, trial, &p.set.points, &[], p.datum.as_ref(), trainable, false)?;
    let t = g.constant(p.target.clone());
    let diff = g.sub(u.jet.val, t);
    let sq = g.square(diff);
    Ok((mc(g, sq, p.set.factor), u.leaves))
}

/// Graph nodes of the interior test function `φv` and its spatial gradient.
struct TestFn {
    pv: Tid,
    grad: Vec<Tid>,
    leaves: Vec<Tid>,
}

fn build_test(g: &mut Graph, v: Test, prep: &Prepared, spatial: &[usize], trainable: bool) -> Result<TestFn> {
    let pts = &prep.interior.points;
    let (vj, leaves) = match v {
        Test::Net(v) => {
            if v.arch.input_dim() != pts.ncols() {
                return Err(WanError::Dimension { expected: pts.ncols(), got: v.arch.input_dim() });
            }
            let x = g.constant(pts.clone());
            let mut input = Jet::constant(x, spatial.len());
            for (k, &c) in spatial.iter().enumerate() {
                let mut e = Array2::zeros(pts.dim());
                e.column_mut(c).fill(1.0);
                input.d1[k] = Some(g.constant(e));
            }
            v.build(g, &input, trainable, false)
        }
        Test::Field(f) => {
            let d = batch_jet(f, pts, spatial, false, None);
            let val = g.column(&d.val);
            let mut jet = Jet::constant(val, spatial.len());
            for k in 0..spatial.len() {
                jet.d1[k] = Some(g.column(&d.d1[k]));
            }
            (jet, Vec::new())
        }
    };
    let phi = g.constant(prep.phi.clone());
    let pv = g.mul(phi, vj.val);
    let mut grad = Vec::with_capacity(spatial.len());
    for (k, &c) in spatial.iter().enumerate() {
        let gp = const_col(g, &prep.grad_phi, c);
        let a = g.mul(vj.val, gp);
        grad.push(match vj.d1[k] {
            Some(dv) => {
                let b = g.mul(phi, dv);
                g.add(a, b)
            }
            None => a,
        });
    }
    Ok(TestFn { pv, grad, leaves })
}

fn zero_if_none(g: &mut Graph, t: Option<Tid>, rows: usize) -> Tid {
    t.unwrap_or_else(|| g.filled(rows, 1, 0.0))
}

/// Interior integrand of the weak form, `rows × 1`.
fn weak_integrand(g: &mut Graph, pde: &PdeSpec, prep: &Prepared, u: &Jet, test: &TestFn, spatial: &[usize]) -> Result<Tid> {
    let rows = prep.interior.len();
    let du: Vec<Tid> = spatial.iter().map(|&c| zero_if_none(g, u.d1[c], rows)).collect();
    let dot_terms: Vec<Tid> = du.iter().zip(&test.grad).map(|(&a, &b)| g.mul(a, b)).collect();
    let flux = sum_opt(g, dot_terms).unwrap();
    let f = g.constant(prep.source.clone());
    let fpv = g.mul(f, test.pv);
    let body = match &pde.form {
        FormKind::Parabolic { diffusion, drift, reaction } => {
            let dt = zero_if_none(g, u.d1[0], rows);
            let mut acc = g.mul(dt, test.pv);
            let fl = g.scale(flux, *diffusion);
            acc = g.add(acc, fl);
            if !drift.is_empty() {
                let terms: Vec<Tid> = drift.iter().zip(&du).map(|(&b, &d)| g.scale(d, b)).collect();
                let adv = sum_opt(g, terms).unwrap();
                let t = g.mul(adv, test.pv);
                acc = g.add(acc, t);
            }
            if let Some(r) = reaction_term(g, *reaction, u.val) {
                let t = g.mul(r, test.pv);
                acc = g.add(acc, t);
            }
            acc
        }
        FormKind::Poisson => flux,
        FormKind::GradientNonlinear => {
            let a = g.constant(ex3_coefficient(&prep.interior.points));
            let diff = g.mul(a, flux);
            let sq: Vec<Tid> = du.iter().map(|&d| g.square(d)).collect();
            let half = sum_opt(g, sq).unwrap();
            let half = g.scale(half, 0.5);
            let t = g.mul(half, test.pv);
            g.add(diff, t)
        }
    };
    Ok(g.sub(body, fpv))
}

fn reaction_term(g: &mut Graph, r: Reaction, u: Tid) -> Option<Tid> {
    match r {
        Reaction::None => None,
        Reaction::Linear(c) => Some(g.scale(u, c)),
        Reaction::NegSquare => {
            let s = g.square(u);
            Some(g.neg(s))
        }
    }
}

/// `1 + |x|²` per row.
fn ex3_coefficient(pts: &Array2<f64>) -> Array2<f64> {
    pts.map_axis(Axis(1), |r| 1.0 + r.iter().map(|v| v * v).sum::<f64>()).insert_axis(Axis(1))
}

/// Strong residual `A(u) − f`, `rows × 1`.
fn strong_residual(g: &mut Graph, pde: &PdeSpec, prep: &Prepared, u: &Jet, spatial: &[usize]) -> Tid {
    let rows = prep.interior.len();
    let lap_terms: Vec<Tid> = spatial.iter().map(|&c| zero_if_none(g, u.d2[c], rows)).collect();
    let lap = sum_opt(g, lap_terms).unwrap();
    let du: Vec<Tid> = spatial.iter().map(|&c| zero_if_none(g, u.d1[c], rows)).collect();
    let f = g.constant(prep.source.clone());
    let body = match &pde.form {
        FormKind::Parabolic { diffusion, drift, reaction } => {
            let dt = zero_if_none(g, u.d1[0], rows);
            let l = g.scale(lap, *diffusion);
            let mut acc = g.sub(dt, l);
            if !drift.is_empty() {
                let terms: Vec<Tid> = drift.iter().zip(&du).map(|(&b, &d)| g.scale(d, b)).collect();
                let adv = sum_opt(g, terms).unwrap();
                acc = g.add(acc, adv);
            }
            if let Some(r) = reaction_term(g, *reaction, u.val) {
                acc = g.add(acc, r);
            }
            acc
        }
        FormKind::Poisson => g.neg(lap),
        FormKind::GradientNonlinear => {
            let pts = &prep.interior.points;
            let a = g.constant(ex3_coefficient(pts));
            let alap = g.mul(a, lap);
            let terms: Vec<Tid> = spatial
                .iter()
                .zip(&du)
                .map(|(&c, &d)| {
                    let x = const_col(g, pts, c);
                    let t = g.mul(x, d);
                    g.scale(t, 2.0)
                })
                .collect();
            let adv = sum_opt(g, terms).unwrap();
            let div = g.add(alap, adv);
            let sq: Vec<Tid> = du.iter().map(|&d| g.square(d)).collect();
            let half = sum_opt(g, sq).unwrap();
            let half = g.scale(half, 0.5);
            g.sub(half, div)
        }
    };
    g.sub(body, f)
}

fn check_pinn(pde: &PdeSpec, trial: Trial) -> Result<()> {
    if let Trial::Net(net) = trial {
        if let TrialNet::Dnn(p) = net {
            if p.arch.activations.iter().all(|a| *a == Activation::Relu) {
                return Err(WanError::IllPosed("ReLU network has a vanishing Laplacian almost everywhere".into()));
            }
        }
        if net.piecewise_linear_clock() && pde.domain.kind == DomainKind::StaticBox {
            return Err(WanError::IllPosed(
                "pseudo-time model is piecewise linear along its clock; the strong residual needs its second derivative"
                    .into(),
            ));
        }
    }
    Ok(())
}

/// Assembles the loss selected by `spec`, optionally with its gradient.
/// `v` is required for the adversarial kinds.
pub fn evaluate(
    pde: &PdeSpec,
    spec: &LossSpec,
    trial: Trial,
    v: Option<Test>,
    prep: &Prepared,
    wrt: Wrt,
) -> Result<LossEval> {
    spec.validate()?;
    let mut g = Graph::new();
    let train_u = wrt == Wrt::Theta;
    let train_v = wrt == Wrt::Eta;
    let spatial = pde.spatial_dirs();
    let all: Vec<usize> = (0..pde.domain.dim()).collect();
    let mut parts = LossParts::default();
    let mut leaves_u = Vec::new();
    let mut leaves_v = Vec::new();

    let second = spec.kind == LossKind::Pinn;
    if second {
        check_pinn(pde, trial)?;
        if !prep.second && matches!(trial, Trial::Net(n) if n.needs_datum()) {
            return Err(WanError::Other("batch was prepared without second derivatives".into()));
        }
    }
    let u = build_trial(&mut g, trial, &prep.interior.points, &all, prep.datum.as_ref(), train_u, second)?;
    leaves_u.extend(u.leaves);

    // penalties (squared Monte Carlo misfits)
    let (bdry_sq, l) = misfit_sq(&mut g, trial, &prep.boundary, train_u)?;
    leaves_u.extend(l);
    let init_sq = match &prep.initial {
        Some(p) => {
            let (t, l) = misfit_sq(&mut g, trial, p, train_u)?;
            leaves_u.extend(l);
            Some(t)
        }
        None => None,
    };
    let last_sq = if spec.include_terminal {
        let p = prep.terminal.as_ref().ok_or(WanError::MissingSlice("terminal"))?;
        let (t, l) = misfit_sq(&mut g, trial, p, train_u)?;
        leaves_u.extend(l);
        Some(t)
    } else {
        None
    };
    parts.l_bdry = g.scalar(bdry_sq).sqrt();
    parts.l_init = init_sq.map_or(0.0, |t| g.scalar(t).sqrt());
    parts.l_last = last_sq.map_or(0.0, |t| g.scalar(t).sqrt());

    let mut terms: Vec<Tid> = Vec::new();
    let sqrt_of = |g: &mut Graph, t: Tid| g.sqrt(t);
    let linear_penalties = |g: &mut Graph, terms: &mut Vec<Tid>, squared: bool| {
        let pick = |g: &mut Graph, t: Tid| if squared { t } else { sqrt_of(g, t) };
        if let Some(t) = init_sq {
            let t = pick(g, t);
            terms.push(g.scale(t, spec.alpha));
        }
        let t = pick(g, bdry_sq);
        terms.push(g.scale(t, spec.beta));
    };

    match spec.kind {
        LossKind::Pinn => {
            let r = strong_residual(&mut g, pde, prep, &u.jet, &spatial);
            let r2 = g.square(r);
            let r2 = mc(&mut g, r2, prep.interior.factor);
            let norm = g.sqrt(r2);
            parts.residual = g.scalar(norm);
            terms.push(norm);
            linear_penalties(&mut g, &mut terms, false);
            if let Some(t) = last_sq {
                let t = g.sqrt(t);
                terms.push(g.scale(t, spec.gamma));
            }
        }
        kind => {
            let v = v.ok_or_else(|| WanError::Other(format!("{} needs a test network", kind.name())))?;
            let test = build_test(&mut g, v, prep, &spatial, train_v)?;
            leaves_v = test.leaves.clone();
            let integrand = weak_integrand(&mut g, pde, prep, &u.jet, &test, &spatial)?;
            let pairing = mc(&mut g, integrand, prep.interior.factor);
            parts.residual = g.scalar(pairing);
            let pv2 = g.square(test.pv);
            let l2 = mc(&mut g, pv2, prep.interior.factor);
            let grads: Vec<Tid> = test.grad.iter().map(|&d| g.square(d)).collect();
            let gsum = sum_opt(&mut g, grads).unwrap();
            let semi_sq = mc(&mut g, gsum, prep.interior.factor);
            let h1 = g.add(l2, semi_sq);
            parts.test_l2_sq = g.scalar(l2);
            parts.test_h1_sq = g.scalar(h1);
            parts.test_h1_semi = g.scalar(semi_sq).sqrt();
            match kind {
                LossKind::Wan => {
                    if parts.test_l2_sq < 1e-12 {
                        return Err(WanError::DegenerateTestFunction(parts.test_l2_sq));
                    }
                    let p2 = g.square(pairing);
                    let q = g.div(p2, l2);
                    terms.push(g.ln(q));
                    linear_penalties(&mut g, &mut terms, true);
                    if let Some(t) = last_sq {
                        let t = g.sqrt(t);
                        terms.push(g.scale(t, spec.gamma));
                    }
                }
                _ => {
                    terms.push(g.abs(pairing));
                    terms.push(g.scale(h1, -spec.gamma_d));
                    if kind == LossKind::Scwan {
                        terms.push(g.sqrt(semi_sq));
                    }
                    linear_penalties(&mut g, &mut terms, true);
                    if let Some(t) = last_sq {
                        terms.push(g.scale(t, spec.gamma));
                    }
                }
            }
        }
    }
    let total = sum_opt(&mut g, terms).unwrap();
    let value = g.scalar(total);
    let grad = match wrt {
        Wrt::Nothing => None,
        Wrt::Theta => {
            // each point set built its own copy of the parameter leaves
            let flat = flatten_grads(&g.backward(total, &leaves_u));
            let n = match trial {
                Trial::Net(net) => net.len(),
                Trial::Field(_) => 0,
            };
            let mut acc = vec![0.0; n];
            for chunk in flat.chunks(n.max(1)) {
                for (a, b) in acc.iter_mut().zip(chunk) {
                    *a += b;
                }
            }
            Some(acc)
        }
        Wrt::Eta => Some(flatten_grads(&g.backward(total, &leaves_v))),
    };
    Ok(LossEval { value, parts, grad })
}

/// Monte Carlo estimate of `(A(u) − f, φv)`.
pub fn weak_pairing(pde: &PdeSpec, trial: Trial, v: Test, prep: &Prepared) -> Result<f64> {
    let spec = LossSpec { kind: LossKind::Cwan, alpha: 0.0, beta: 0.0, gamma: 0.0, gamma_d: 1.0, include_terminal: false };
    Ok(evaluate(pde, &spec, trial, Some(v), prep, Wrt::Nothing)?.parts.residual)
}

/// `(L_init, L_bdry, L_last)`, unsquared; errors when a slice is missing.
pub fn loss_boundary_terms(pde: &PdeSpec, trial: Trial, prep: &Prepared) -> Result<(f64, f64, f64)> {
    if prep.initial.is_none() {
        return Err(WanError::MissingSlice("initial"));
    }
    if prep.terminal.is_none() {
        return Err(WanError::MissingSlice("terminal"));
    }
    let spec = LossSpec { kind: LossKind::Cwan, alpha: 0.0, beta: 0.0, gamma: 0.0, gamma_d: 1.0, include_terminal: true };
    let zero = ConstField(0.0);
    let p = evaluate(pde, &spec, trial, Some(Test::Field(&zero)), prep, Wrt::Nothing)?.parts;
    Ok((p.l_init, p.l_bdry, p.l_last))
}

fn with_kind(spec: &LossSpec, kind: LossKind) -> LossSpec {
    LossSpec { kind, ..*spec }
}

pub fn loss_pinn(pde: &PdeSpec, spec: &LossSpec, trial: Trial, prep: &Prepared) -> Result<f64> {
    Ok(evaluate(pde, &with_kind(spec, LossKind::Pinn), trial, None, prep, Wrt::Nothing)?.value)
}

pub fn loss_wan(pde: &PdeSpec, spec: &LossSpec, trial: Trial, v: Test, prep: &Prepared) -> Result<f64> {
    Ok(evaluate(pde, &with_kind(spec, LossKind::Wan), trial, Some(v), prep, Wrt::Nothing)?.value)
}

pub fn loss_cwan(pde: &PdeSpec, spec: &LossSpec, trial: Trial, v: Test, prep: &Prepared) -> Result<f64> {
    Ok(evaluate(pde, &with_kind(spec, LossKind::Cwan), trial, Some(v), prep, Wrt::Nothing)?.value)
}

pub fn loss_scwan(pde: &PdeSpec, spec: &LossSpec, trial: Trial, v: Test, prep: &Prepared) -> Result<f64> {
    Ok(evaluate(pde, &with_kind(spec, LossKind::Scwan), trial, Some(v), prep, Wrt::Nothing)?.value)
}
