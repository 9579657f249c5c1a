use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Result, WanError};

/// Basis function returning its value and derivative.
pub type BasisFn = dyn Fn(f64) -> (f64, f64);
type Basis = Box<BasisFn>;

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Composite four-point Gauss rule on `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadrature {
    pub cells: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn composite_gauss(cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(WanError::Domain("quadrature needs at least one cell".into()));
        }
        let h = 1.0 / cells as f64;
        let mut nodes = Vec::with_capacity(4 * cells);
        let mut weights = Vec::with_capacity(4 * cells);
        for c in 0..cells {
            let mid = (c as f64 + 0.5) * h;
            for (x, w) in GAUSS4 {
                nodes.push(mid + 0.5 * h * x);
                weights.push(0.5 * h * w);
            }
        }
        Ok(Self { cells, nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

impl Default for Quadrature {
    /// 1680 cells, divisible by every mesh size up to 8 and by 10, 12, 14,
    /// 16, 20, 24.
    fn default() -> Self {
        Self::composite_gauss(1680).expect("nonzero cells")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerProduct {
    /// `∫ w′v′`, a norm on functions vanishing at both ends.
    H1Semi,
    H1,
    L2,
}

impl InnerProduct {
    fn weigh(self, wv: f64, wg: f64, vv: f64, vg: f64) -> f64 {
        match self {
            InnerProduct::H1Semi => wg * vg,
            InnerProduct::H1 => wv * vv + wg * vg,
            InnerProduct::L2 => wv * vv,
        }
    }
}

/// Values and derivatives of one function at the quadrature nodes.
#[derive(Clone, Debug)]
pub struct Sampled {
    pub values: DVector<f64>,
    pub grads: DVector<f64>,
}

impl Sampled {
    pub fn from_fn(q: &Quadrature, f: impl Fn(f64) -> (f64, f64)) -> Self {
        let (v, g): (Vec<f64>, Vec<f64>) = q.nodes.iter().map(|&x| f(x)).unzip();
        Self { values: DVector::from_vec(v), grads: DVector::from_vec(g) }
    }

    pub fn axpy(&self, a: f64, other: &Sampled) -> Sampled {
        Sampled { values: &self.values + &other.values * a, grads: &self.grads + &other.grads * a }
    }
}

/// Linear span of finitely many functions on `[0, 1]`, sampled at a shared
/// quadrature, with its Gram matrix.
#[derive(Clone, Debug)]
pub struct SurrogateSpace {
    pub quad: Quadrature,
    pub inner: InnerProduct,
    /// Row per node, column per basis function.
    pub values: DMatrix<f64>,
    pub grads: DMatrix<f64>,
    pub gram: DMatrix<f64>,
}

impl SurrogateSpace {
    pub fn from_fns(q: &Quadrature, inner: InnerProduct, fns: &[&BasisFn]) -> Result<Self> {
        let n = fns.len();
        let mut values = DMatrix::zeros(q.len(), n);
        let mut grads = DMatrix::zeros(q.len(), n);
        for (j, f) in fns.iter().enumerate() {
            for (i, &x) in q.nodes.iter().enumerate() {
                let (v, g) = f(x);
                values[(i, j)] = v;
                grads[(i, j)] = g;
            }
        }
        Self::from_samples(q.clone(), inner, values, grads)
    }

    pub fn from_samples(quad: Quadrature, inner: InnerProduct, values: DMatrix<f64>, grads: DMatrix<f64>) -> Result<Self> {
        if values.ncols() == 0 {
            return Err(WanError::LinearAlgebra("empty basis".into()));
        }
        let mut s = Self { quad, inner, values, grads, gram: DMatrix::zeros(0, 0) };
        s.gram = s.inner_matrix(&s);
        let ok = Cholesky::new(s.gram.clone()).is_some_and(|c| super::operator::well_conditioned(&c, &s.gram));
        if !ok {
            return Err(WanError::LinearAlgebra("Gram matrix is not positive definite".into()));
        }
        Ok(s)
    }

    /// `n` hat functions on the uniform mesh with `n + 1` cells.
    pub fn hats(n: usize, q: &Quadrature, inner: InnerProduct) -> Result<Self> {
        if n == 0 || !q.cells.is_multiple_of(n + 1) {
            return Err(WanError::Domain(format!("{n} hats do not align with {} quadrature cells", q.cells)));
        }
        let h = 1.0 / (n + 1) as f64;
        let fns: Vec<Basis> = (1..=n)
            .map(|k| {
                let c = k as f64 * h;
                Box::new(move |x: f64| {
                    let r = (x - c) / h;
                    if r.abs() >= 1.0 {
                        (0.0, 0.0)
                    } else {
                        (1.0 - r.abs(), -r.signum() / h)
                    }
                }) as Basis
            })
            .collect();
        let refs: Vec<&BasisFn> = fns.iter().map(|b| b.as_ref()).collect();
        Self::from_fns(q, inner, &refs)
    }

    /// `sin(kπx)` for `k = 1..=n`.
    pub fn sines(n: usize, q: &Quadrature, inner: InnerProduct) -> Result<Self> {
        let fns: Vec<Basis> = (1..=n)
            .map(|k| {
                let w = k as f64 * PI;
                Box::new(move |x: f64| ((w * x).sin(), w * (w * x).cos())) as Basis
            })
            .collect();
        let refs: Vec<&BasisFn> = fns.iter().map(|b| b.as_ref()).collect();
        Self::from_fns(q, inner, &refs)
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    /// Basis extended by one more function.
    pub fn with(&self, extra: &Sampled) -> Result<Self> {
        let n = self.dim();
        let mut values = self.values.clone().insert_column(n, 0.0);
        let mut grads = self.grads.clone().insert_column(n, 0.0);
        values.set_column(n, &extra.values);
        grads.set_column(n, &extra.grads);
        Self::from_samples(self.quad.clone(), self.inner, values, grads)
    }

    /// `(w_i, v_j)` for `w_i` in `self`, `v_j` in `other`.
    pub fn inner_matrix(&self, other: &SurrogateSpace) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim(), other.dim());
        let take = |m: &DMatrix<f64>, o: &DMatrix<f64>| m.transpose() * weighted(&self.quad, o);
        match self.inner {
            InnerProduct::H1Semi => out += take(&self.grads, &other.grads),
            InnerProduct::H1 => out += take(&self.grads, &other.grads) + take(&self.values, &other.values),
            InnerProduct::L2 => out += take(&self.values, &other.values),
        }
        out
    }

    pub fn combine(&self, coeffs: &DVector<f64>) -> Sampled {
        Sampled { values: &self.values * coeffs, grads: &self.grads * coeffs }
    }

    /// `(f, w_i)` for each basis function.
    pub fn inner_with(&self, f: &Sampled) -> DVector<f64> {
        DVector::from_fn(self.dim(), |j, _| self.pair(f, &self.values.column(j).into(), &self.grads.column(j).into()))
    }

    pub fn norm(&self, f: &Sampled) -> f64 {
        self.pair(f, &f.values, &f.grads).max(0.0).sqrt()
    }

    fn pair(&self, f: &Sampled, v: &DVector<f64>, g: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for (i, &wt) in self.quad.weights.iter().enumerate() {
            acc += wt * self.inner.weigh(f.values[i], f.grads[i], v[i], g[i]);
        }
        acc
    }
}

/// Rows scaled by the quadrature weights.
fn weighted(q: &Quadrature, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, &w) in q.weights.iter().enumerate() {
        out.row_mut(i).scale_mut(w);
    }
    out
}

/// `𝒜(w, v) = ∫ p w′v′ + q w′v + r wv` on `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Form1d {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl Form1d {
    pub fn laplace() -> Self {
        Self { p: 1.0, q: 0.0, r: 0.0 }
    }

    /// `A_ij = 𝒜(w_i, v_j)`.
    pub fn matrix(&self, trial: &SurrogateSpace, test: &SurrogateSpace) -> DMatrix<f64> {
        let wd = weighted(&trial.quad, &test.grads);
        let wv = weighted(&trial.quad, &test.values);
        trial.grads.transpose() * &wd * self.p + trial.grads.transpose() * &wv * self.q + trial.values.transpose() * &wv * self.r
    }

    /// `𝒜(f, v_j)` for each test basis function.
    pub fn apply(&self, f: &Sampled, test: &SurrogateSpace) -> DVector<f64> {
        let mut out = DVector::zeros(test.dim());
        for (i, &wt) in test.quad.weights.iter().enumerate() {
            for j in 0..test.dim() {
                out[j] += wt * (self.p * f.grads[i] * test.grads[(i, j)] + (self.q * f.grads[i] + self.r * f.values[i]) * test.values[(i, j)]);
            }
        }
        out
    }
}
