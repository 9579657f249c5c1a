use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Result, WanError};

/// Matrix of a bilinear form between two finite bases, `A_ij = 𝒜(w_i, v_j)`,
/// together with the Gram matrices of both bases.
#[derive(Clone, Debug)]
pub struct BilinearOperator {
    pub a: DMatrix<f64>,
    pub gram_w: DMatrix<f64>,
    pub gram_v: DMatrix<f64>,
    chol_w: Cholesky<f64, Dyn>,
    chol_v: Cholesky<f64, Dyn>,
}

/// Result of maximizing over the test span.
#[derive(Clone, Debug)]
pub struct SupResult {
    pub value: f64,
    /// Test coefficients at the maximizer.
    pub maximizer: DVector<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfSup {
    pub kappa: f64,
    /// Operator does not separate the trial span from zero.
    pub rank_deficient: bool,
}

/// Stopping rule for the preconditioned ascent.
#[derive(Clone, Copy, Debug)]
pub struct Ascent {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Ascent {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 500 }
    }
}

fn chol(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(WanError::LinearAlgebra(format!("{what} Gram matrix must be square and nonempty")));
    }
    let bad = || WanError::LinearAlgebra(format!("{what} Gram matrix is singular or indefinite"));
    let c = Cholesky::new(m.clone()).ok_or_else(bad)?;
    if !well_conditioned(&c, m) {
        return Err(bad());
    }
    Ok(c)
}

/// Rejects factorizations that only succeeded through round-off.
pub(crate) fn well_conditioned(c: &Cholesky<f64, Dyn>, m: &DMatrix<f64>) -> bool {
    let l = c.l_dirty();
    let min = (0..m.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    let max = m.diagonal().max();
    min > 1e-12 * max
}

impl BilinearOperator {
    pub fn new(a: DMatrix<f64>, gram_w: DMatrix<f64>, gram_v: DMatrix<f64>) -> Result<Self> {
        let chol_w = chol(&gram_w, "trial")?;
        let chol_v = chol(&gram_v, "test")?;
        if a.nrows() != gram_w.nrows() {
            return Err(WanError::Dimension { expected: gram_w.nrows(), got: a.nrows() });
        }
        if a.ncols() != gram_v.nrows() {
            return Err(WanError::Dimension { expected: gram_v.nrows(), got: a.ncols() });
        }
        Ok(Self { a, gram_w, gram_v, chol_w, chol_v })
    }

    pub fn trial_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn test_dim(&self) -> usize {
        self.a.ncols()
    }

    /// `L_w⁻¹ A L_v⁻ᵀ`: the operator in orthonormal coordinates.
    pub fn whitened(&self) -> DMatrix<f64> {
        let lw = self.chol_w.l();
        let lv = self.chol_v.l();
        let left = lw.solve_lower_triangular(&self.a).expect("nonsingular factor");
        lv.solve_lower_triangular(&left.transpose()).expect("nonsingular factor").transpose()
    }

    /// Functional `v ↦ 𝒜(w, v)` in test coefficients.
    fn functional(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        if w.len() != self.trial_dim() {
            return Err(WanError::Dimension { expected: self.trial_dim(), got: w.len() });
        }
        Ok(self.a.transpose() * w)
    }

    /// `sup_v 𝒜(w, v)/‖v‖_V` over the test span, via the dual norm
    /// `√(rᵀ G_v⁻¹ r)`.
    pub fn op_norm(&self, w: &DVector<f64>) -> Result<f64> {
        let r = self.functional(w)?;
        let y = self.chol_v.l().solve_lower_triangular(&r).expect("nonsingular factor");
        Ok(y.norm())
    }

    fn v_norm(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.gram_v * v)).max(0.0).sqrt()
    }

    /// `sup_v 𝒜(w, v) − γ_d/2 ‖v‖²`.
    pub fn stabilized_sup(&self, w: &DVector<f64>, gamma_d: f64, ascent: Ascent) -> Result<SupResult> {
        self.maximize(w, gamma_d, false, ascent)
    }

    /// `sup_v 𝒜(w, v) − γ_d/2 ‖v‖² + ‖v‖`.
    pub fn shifted_sup(&self, w: &DVector<f64>, gamma_d: f64, ascent: Ascent) -> Result<SupResult> {
        self.maximize(w, gamma_d, true, ascent)
    }

    /// Newton ascent, falling back to the gradient preconditioned by the
    /// test Gram matrix where the objective is not locally concave, with
    /// Armijo backtracking.
    fn maximize(&self, w: &DVector<f64>, gamma_d: f64, shifted: bool, ascent: Ascent) -> Result<SupResult> {
        if !(gamma_d > 0.0) || !gamma_d.is_finite() {
            return Err(WanError::IllPosed(format!("γ_d must be positive, got {gamma_d}")));
        }
        let r = self.functional(w)?;
        let objective = |v: &DVector<f64>| {
            let nv = self.v_norm(v);
            r.dot(v) - 0.5 * gamma_d * nv * nv + if shifted { nv } else { 0.0 }
        };
        let gradient = |v: &DVector<f64>| {
            let gv = &self.gram_v * v;
            let mut g = &r - &gv * gamma_d;
            let nv = self.v_norm(v);
            if shifted && nv > 0.0 {
                g += gv / nv;
            }
            g
        };
        let neg_hessian = |v: &DVector<f64>| {
            let mut h = &self.gram_v * gamma_d;
            let nv = self.v_norm(v);
            if shifted && nv > 0.0 {
                let gv = &self.gram_v * v;
                h -= &self.gram_v / nv - &gv * gv.transpose() / nv.powi(3);
            }
            h
        };
        // start away from the kink of ‖v‖ at the origin, on the side of the
        // Riesz representer: in one dimension the other side holds a local max
        let mut e = DVector::zeros(self.test_dim());
        e[0] = if r[0] < 0.0 { -1.0 } else { 1.0 };
        let e = &e / self.v_norm(&e);
        let mut v = (self.chol_v.solve(&r) + e) / gamma_d;
        let mut val = objective(&v);
        let residual = |g: &DVector<f64>| self.v_norm(&self.chol_v.solve(g));
        for it in 0..ascent.max_iter {
            let g = gradient(&v);
            let dn = residual(&g);
            if dn <= ascent.tol * self.v_norm(&v).max(1.0 / gamma_d) {
                return Ok(SupResult { value: val, maximizer: v, iterations: it });
            }
            let (d, mut t) = match Cholesky::new(neg_hessian(&v)) {
                Some(c) => (c.solve(&g), 1.0),
                None => (self.chol_v.solve(&g), 1.0 / gamma_d),
            };
            let slope = g.dot(&d);
            let mut moved = false;
            for _ in 0..60 {
                let cand = &v + &d * t;
                let cv = objective(&cand);
                if cv > val && cv >= val + 1e-4 * t * slope {
                    v = cand;
                    val = cv;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !val.is_finite() || val.abs() > 1e12 * (1.0 + r.norm().powi(2) / gamma_d) {
                return Err(WanError::NoConvergence { iterations: it + 1, residual: dn });
            }
            if !moved {
                // stalled at round-off level
                if dn <= 1e-6 * self.v_norm(&v).max(1.0 / gamma_d) {
                    return Ok(SupResult { value: val, maximizer: v, iterations: it });
                }
                return Err(WanError::NoConvergence { iterations: it + 1, residual: dn });
            }
        }
        Err(WanError::NoConvergence { iterations: ascent.max_iter, residual: residual(&gradient(&v)) })
    }

    /// `κ = inf_w sup_v 𝒜(w, v)/(‖w‖‖v‖)`, the smallest singular value of
    /// the whitened matrix.
    pub fn infsup(&self) -> InfSup {
        if self.trial_dim() > self.test_dim() {
            return InfSup { kappa: 0.0, rank_deficient: true };
        }
        let s = self.whitened().svd(false, false).singular_values;
        let max = s.max();
        let min = s.min();
        let rank_deficient = min <= 1e-12 * max.max(1.0);
        InfSup { kappa: if rank_deficient { 0.0 } else { min }, rank_deficient }
    }

    /// Continuity constant on the spans: the largest singular value.
    pub fn continuity(&self) -> f64 {
        self.whitened().svd(false, false).singular_values.max()
    }

    /// Coercivity constant `inf 𝒜(φ, φ)/‖φ‖²` for a square operator on a
    /// single space. Nonpositive when the form is not coercive there.
    pub fn coercivity(&self) -> Result<f64> {
        if self.trial_dim() != self.test_dim() {
            return Err(WanError::Dimension { expected: self.trial_dim(), got: self.test_dim() });
        }
        let b = self.whitened();
        let sym = (&b + b.transpose()) * 0.5;
        Ok(SymmetricEigen::new(sym).eigenvalues.min())
    }
}
