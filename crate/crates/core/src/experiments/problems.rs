//! Exact solutions and manufactured sources of the three benchmark problems.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::autodiff::Real;
use crate::error::{Result, WanError};
use crate::geometry::BoxDomain;
use crate::losses::{FormKind, PdeSpec, Reaction};
use crate::scalar_field;

/// `2 sin(πx₁/2) cos(πx₂/2) e^{−t}` at `p = (t, x₁, …, x_d)`.
pub fn ex1_u<S: Real>(p: &[S]) -> S {
    (p[1] * (PI / 2.0)).sin() * (p[2] * (PI / 2.0)).cos() * (-p[0]).exp() * 2.0
}

/// `∂t u − Δu − u²` for [`ex1_u`]: `(π²/2 − 1)u − u²`.
pub fn ex1_f<S: Real>(p: &[S]) -> S {
    let u = ex1_u(p);
    u * (PI * PI / 2.0 - 1.0) - u * u
}

/// `Σ sin(πxᵢ/2)`.
pub fn ex2_u<S: Real>(p: &[S]) -> S {
    let mut acc = (p[0] * (PI / 2.0)).sin();
    for x in &p[1..] {
        acc = acc + (*x * (PI / 2.0)).sin();
    }
    acc
}

/// `−Δu = (π²/4) Σ sin(πxᵢ/2)`.
pub fn ex2_f<S: Real>(p: &[S]) -> S {
    ex2_u(p) * (PI * PI / 4.0)
}

/// `sin(πx₁²/2 + x₂²/2)`.
pub fn ex3_u<S: Real>(p: &[S]) -> S {
    (p[0] * p[0] * (0.5 * PI) + p[1] * p[1] * 0.5).sin()
}

/// `−∇·((1 + |x|²)∇u) + ½|∇u|²` for [`ex3_u`].
pub fn ex3_f<S: Real>(p: &[S]) -> S {
    let s = p[0] * p[0] * (0.5 * PI) + p[1] * p[1] * 0.5;
    let (sn, cs) = (s.sin(), s.cos());
    // ∇s = (πx₁, x₂, 0, …), Δs = π + 1
    let grad_sq = p[0] * p[0] * (PI * PI) + p[1] * p[1];
    let x_dot_grad_s = p[0] * p[0] * PI + p[1] * p[1];
    let mut a = p[0] * p[0] + 1.0;
    for x in &p[1..] {
        a = a + *x * *x;
    }
    let lap_u = cs * (PI + 1.0) - sn * grad_sq;
    let div = cs * x_dot_grad_s * 2.0 + a * lap_u;
    cs * cs * grad_sq * 0.5 - div
}

scalar_field!(pub Ex1Exact => ex1_u);
scalar_field!(pub Ex1Source => ex1_f);
scalar_field!(pub Ex2Exact => ex2_u);
scalar_field!(pub Ex2Source => ex2_f);
scalar_field!(pub Ex3Exact => ex3_u);
scalar_field!(pub Ex3Source => ex3_f);

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemId {
    Ex1,
    Ex2,
    Ex3,
}

impl ProblemId {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ex1" => Ok(ProblemId::Ex1),
            "ex2" => Ok(ProblemId::Ex2),
            "ex3" => Ok(ProblemId::Ex3),
            other => Err(WanError::UnknownPreset(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Ex1 => "ex1",
            ProblemId::Ex2 => "ex2",
            ProblemId::Ex3 => "ex3",
        }
    }
}

/// The problem in `d` space dimensions. Boundary and initial data are
/// restrictions of the exact solution.
pub fn problem(id: ProblemId, d: usize) -> Result<PdeSpec> {
    if d < 2 {
        return Err(WanError::Config { field: "d".into(), reason: format!("needs at least 2 dimensions, got {d}") });
    }
    Ok(match id {
        ProblemId::Ex1 => PdeSpec {
            form: FormKind::Parabolic { diffusion: 1.0, drift: vec![], reaction: Reaction::NegSquare },
            domain: BoxDomain::time_cube(1.0, -1.0, 1.0, d)?,
            source: Arc::new(Ex1Source),
            boundary: Arc::new(Ex1Exact),
            initial: Some(Arc::new(Ex1Exact)),
            exact: Some(Arc::new(Ex1Exact)),
        },
        ProblemId::Ex2 => PdeSpec {
            form: FormKind::Poisson,
            domain: BoxDomain::static_cube(0.0, 1.0, d)?,
            source: Arc::new(Ex2Source),
            boundary: Arc::new(Ex2Exact),
            initial: None,
            exact: Some(Arc::new(Ex2Exact)),
        },
        ProblemId::Ex3 => PdeSpec {
            form: FormKind::GradientNonlinear,
            domain: BoxDomain::static_cube(0.0, 1.0, d)?,
            source: Arc::new(Ex3Source),
            boundary: Arc::new(Ex3Exact),
            initial: None,
            exact: Some(Arc::new(Ex3Exact)),
        },
    })
}

/// Pointwise strong residual of the exact solution, using tape derivatives.
pub fn exact_residual(pde: &PdeSpec, p: &[f64]) -> f64 {
    use crate::losses::field_jet;
    let exact = pde.exact.as_ref().expect("exact solution");
    let spatial = pde.spatial_dirs();
    let all: Vec<usize> = (0..p.len()).collect();
    let (u, d1, d2) = field_jet(&**exact, p, &all, true, None);
    let lap: f64 = spatial.iter().map(|&c| d2[c]).sum();
    let f = pde.source.value(p);
    match &pde.form {
        FormKind::Parabolic { diffusion, drift, reaction } => {
            let adv: f64 = drift.iter().zip(&spatial).map(|(b, &c)| b * d1[c]).sum();
            let r = match reaction {
                Reaction::None => 0.0,
                Reaction::Linear(c) => c * u,
                Reaction::NegSquare => -u * u,
            };
            d1[0] - diffusion * lap + adv + r - f
        }
        FormKind::Poisson => -lap - f,
        FormKind::GradientNonlinear => {
            let a = 1.0 + p.iter().map(|v| v * v).sum::<f64>();
            let xg: f64 = spatial.iter().map(|&c| p[c] * d1[c]).sum();
            let g2: f64 = spatial.iter().map(|&c| d1[c] * d1[c]).sum();
            -(2.0 * xg + a * lap) + 0.5 * g2 - f
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_values() {
        assert!((ex1_u(&[0.0, 1.0, 0.0, 0.3, -0.4]) - 2.0).abs() < 1e-15);
        assert!((ex2_u(&[1.0; 5]) - 5.0).abs() < 1e-15);
        assert_eq!(ex3_u(&[0.0; 5]), 0.0);
        assert_eq!(ex1_f(&[0.0; 3]), 0.0);
        assert!((ex3_f(&[0.0; 3]) + (PI + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn unknown_id() {
        assert!(matches!(ProblemId::parse("ex9"), Err(WanError::UnknownPreset(_))));
    }

    #[test]
    fn exact_solutions_satisfy_their_pdes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for id in [ProblemId::Ex1, ProblemId::Ex2, ProblemId::Ex3] {
            let pde = problem(id, 5).unwrap();
            let pts = pde.domain.sample_interior(1000, &mut rng);
            for r in 0..1000 {
                let res = exact_residual(&pde, &pts.row(r).to_vec());
                assert!(res.abs() <= 1e-10, "{id:?}: residual {res}");
            }
        }
    }

    /// Second-order central differences of the exact solution.
    fn fd_residual(pde: &PdeSpec, p: &[f64]) -> f64 {
        let u = |q: &[f64]| pde.exact.as_ref().unwrap().value(q);
        let h = 1e-4;
        let shift = |c: usize, s: f64| {
            let mut q = p.to_vec();
            q[c] += s;
            q
        };
        let d1 = |c: usize| (u(&shift(c, h)) - u(&shift(c, -h))) / (2.0 * h);
        let d2 = |c: usize| (u(&shift(c, h)) - 2.0 * u(p) + u(&shift(c, -h))) / (h * h);
        let spatial = pde.spatial_dirs();
        let lap: f64 = spatial.iter().map(|&c| d2(c)).sum();
        let f = pde.source.value(p);
        match pde.form {
            FormKind::Parabolic { .. } => d1(0) - lap - u(p) * u(p) - f,
            FormKind::Poisson => -lap - f,
            FormKind::GradientNonlinear => {
                let a = 1.0 + p.iter().map(|v| v * v).sum::<f64>();
                let xg: f64 = spatial.iter().map(|&c| p[c] * d1(c)).sum();
                let g2: f64 = spatial.iter().map(|&c| d1(c).powi(2)).sum();
                -(2.0 * xg + a * lap) + 0.5 * g2 - f
            }
        }
    }

    #[test]
    fn sources_match_finite_differences() {
        let pde1 = problem(ProblemId::Ex1, 3).unwrap();
        assert!(fd_residual(&pde1, &[0.0, 0.0, 0.0, 0.0]).abs() < 1e-5);
        let pde3 = problem(ProblemId::Ex3, 3).unwrap();
        assert!(fd_residual(&pde3, &[0.0, 0.0, 0.0]).abs() < 1e-5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for id in [ProblemId::Ex1, ProblemId::Ex2, ProblemId::Ex3] {
            let pde = problem(id, 3).unwrap();
            let pts = pde.domain.sample_interior(20, &mut rng);
            for r in 0..20 {
                assert!(fd_residual(&pde, &pts.row(r).to_vec()).abs() < 1e-5);
            }
        }
    }
}
