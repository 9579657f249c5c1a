use nalgebra::DVector;

use super::operator::BilinearOperator;
use super::space::{Form1d, Sampled, SurrogateSpace};
use crate::error::{Result, WanError};

/// Which quasi-optimality constant applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CeaBound {
    /// `1 + 2M/α`.
    Coercive,
    /// `1 + 2(M*/α*)(M/κ)` with the transposed operator as the stabilizer.
    InfSup,
}

#[derive(Clone, Debug)]
pub struct CeaReport {
    /// `‖u − u*‖_W` for the residual minimizer `u*`.
    pub error: f64,
    /// `inf_w ‖u − w‖_W` over the trial span.
    pub best_error: f64,
    pub ratio: f64,
    pub bound: f64,
    pub kind: CeaBound,
    pub continuity: f64,
    pub coercivity: f64,
    pub kappa: f64,
    /// Trial coefficients of `u*`.
    pub minimizer: DVector<f64>,
}

impl CeaReport {
    pub fn holds(&self) -> bool {
        self.ratio <= self.bound * (1.0 + 1e-9)
    }
}

/// Minimizes the dual norm of the residual of `exact` over the trial span,
/// with the test span as the adversary, and compares the result with the
/// best approximation.
pub fn cea_experiment(form: &Form1d, exact: &Sampled, trial: &SurrogateSpace, test: &SurrogateSpace) -> Result<CeaReport> {
    if trial.inner != test.inner {
        return Err(WanError::IllPosed("trial and test spans must share an inner product".into()));
    }
    if trial.quad != test.quad {
        return Err(WanError::IllPosed("trial and test spans must share a quadrature".into()));
    }
    let op = BilinearOperator::new(form.matrix(trial, test), trial.gram.clone(), test.gram.clone())?;
    let b = form.apply(exact, test);

    // least squares in the whitened test metric: min_c |L⁻¹(b − Aᵀc)|
    let lv = nalgebra::Cholesky::new(test.gram.clone()).expect("checked SPD").l();
    let k = lv.solve_lower_triangular(&op.a.transpose()).expect("nonsingular");
    let y = lv.solve_lower_triangular(&b).expect("nonsingular");
    let minimizer = k.svd(true, true).solve(&y, 1e-13).map_err(|e| WanError::LinearAlgebra(e.to_string()))?;
    let error = trial.norm(&exact.axpy(-1.0, &trial.combine(&minimizer)));

    let proj = nalgebra::Cholesky::new(trial.gram.clone()).expect("checked SPD").solve(&trial.inner_with(exact));
    let best_error = trial.norm(&exact.axpy(-1.0, &trial.combine(&proj)));

    // constants on span(trial ∪ {u}), which contains every u − w
    let (continuity, alpha_star) = match trial.with(exact) {
        Ok(ext) => {
            let e = BilinearOperator::new(form.matrix(&ext, test), ext.gram.clone(), test.gram.clone())?;
            (e.continuity(), e.infsup().kappa)
        }
        Err(_) => (op.continuity(), op.infsup().kappa),
    };
    let square = BilinearOperator::new(form.matrix(trial, trial), trial.gram.clone(), trial.gram.clone())?;
    let coercivity = square.coercivity()?;
    let kappa = op.infsup().kappa;

    let (kind, bound) = if coercivity > 1e-10 * continuity.max(1.0) {
        (CeaBound::Coercive, 1.0 + 2.0 * continuity / coercivity)
    } else if kappa > 0.0 && alpha_star > 0.0 {
        (CeaBound::InfSup, 1.0 + 2.0 * (continuity / alpha_star) * (continuity / kappa))
    } else {
        return Err(WanError::IllPosed("test span does not control the trial span (κ = 0)".into()));
    };

    let scale = trial.norm(exact).max(1e-300);
    let ratio = if best_error <= 1e-12 * scale {
        if error <= 1e-9 * scale {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        error / best_error
    };
    Ok(CeaReport { error, best_error, ratio, bound, kind, continuity, coercivity, kappa, minimizer })
}
