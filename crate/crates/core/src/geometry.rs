//! Box domains, Monte Carlo point sets, product cutoffs and Monte Carlo
//! integrals.
//!
//! Points are rows of an `n × dim` array. On a time box coordinate 0 is `t`.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WanError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    StaticBox,
    TimeBox,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub kind: DomainKind,
    /// Bounds of every coordinate; `[0, T]` first on a time box.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(kind: DomainKind, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(WanError::Domain("bounds must be nonempty and of equal length".into()));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(WanError::Domain("every lower bound must be below its upper bound".into()));
        }
        if kind == DomainKind::TimeBox && (lower[0] != 0.0 || lower.len() < 2) {
            return Err(WanError::Domain("a time box starts at t = 0 and has a spatial part".into()));
        }
        Ok(Self { kind, lower, upper })
    }

    /// `[lo, hi]^d`.
    pub fn static_cube(lo: f64, hi: f64, d: usize) -> Result<Self> {
        Self::new(DomainKind::StaticBox, vec![lo; d], vec![hi; d])
    }

    /// `[0, T] × [lo, hi]^d`.
    pub fn time_cube(t_end: f64, lo: f64, hi: f64, d: usize) -> Result<Self> {
        if !(t_end > 0.0) {
            return Err(WanError::Domain(format!("horizon must be positive, got {t_end}")));
        }
        let mut lower = vec![0.0];
        let mut upper = vec![t_end];
        lower.extend(std::iter::repeat_n(lo, d));
        upper.extend(std::iter::repeat_n(hi, d));
        Self::new(DomainKind::TimeBox, lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn extent(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.extent(i)).product()
    }

    /// Measure of the face `x_i = const`.
    pub fn face_measure(&self, i: usize) -> f64 {
        (0..self.dim()).filter(|&j| j != i).map(|j| self.extent(j)).product()
    }

    pub fn horizon(&self) -> Option<f64> {
        match self.kind {
            DomainKind::TimeBox => Some(self.upper[0]),
            DomainKind::StaticBox => None,
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().enumerate().all(|(i, &v)| v >= self.lower[i] && v <= self.upper[i])
    }

    fn open_coord<R: Rng>(&self, rng: &mut R, i: usize) -> f64 {
        let (a, b) = (self.lower[i], self.upper[i]);
        loop {
            let v = a + (b - a) * rng.random::<f64>();
            if v > a && v < b {
                return v;
            }
        }
    }

    /// `n` i.i.d. uniform points in the open box.
    pub fn sample_interior<R: Rng>(&self, n: usize, rng: &mut R) -> Array2<f64> {
        let d = self.dim();
        let mut out = Array2::zeros((n, d));
        for r in 0..n {
            for i in 0..d {
                out[[r, i]] = self.open_coord(rng, i);
            }
        }
        out
    }

    /// `n` points on the boundary faces not listed in `excluded`
    /// (`(coordinate, upper side?)`). Faces are picked with probability
    /// proportional to their measure; the other coordinates are uniform in
    /// their open intervals. Returns the points and the total measure of the
    /// admissible faces.
    pub fn sample_faces<R: Rng>(&self, n: usize, excluded: &[(usize, bool)], rng: &mut R) -> Result<(Array2<f64>, f64)> {
        let faces: Vec<(usize, bool, f64)> = (0..self.dim())
            .flat_map(|i| [(i, false), (i, true)])
            .filter(|f| !excluded.contains(f))
            .map(|(i, up)| (i, up, self.face_measure(i)))
            .collect();
        if faces.is_empty() {
            return Err(WanError::Domain("no boundary faces left to sample".into()));
        }
        let total: f64 = faces.iter().map(|f| f.2).sum();
        let d = self.dim();
        let mut out = Array2::zeros((n, d));
        for r in 0..n {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = faces[faces.len() - 1];
            for f in &faces {
                acc += f.2;
                if target < acc {
                    pick = *f;
                    break;
                }
            }
            for i in 0..d {
                out[[r, i]] = if i == pick.0 {
                    if pick.1 {
                        self.upper[i]
                    } else {
                        self.lower[i]
                    }
                } else {
                    self.open_coord(rng, i)
                };
            }
        }
        Ok((out, total))
    }

    /// Lateral boundary: every face except those of coordinate 0 on a time
    /// box.
    pub fn sample_boundary<R: Rng>(&self, n: usize, rng: &mut R) -> Result<(Array2<f64>, f64)> {
        match self.kind {
            DomainKind::TimeBox => self.sample_faces(n, &[(0, false), (0, true)], rng),
            DomainKind::StaticBox => self.sample_faces(n, &[], rng),
        }
    }

    /// `n` points on the slice `x_0 = value` with the remaining coordinates
    /// uniform; returns the slice measure too.
    pub fn sample_slice<R: Rng>(&self, n: usize, value: f64, rng: &mut R) -> (Array2<f64>, f64) {
        let d = self.dim();
        let mut out = Array2::zeros((n, d));
        for r in 0..n {
            out[[r, 0]] = value;
            for i in 1..d {
                out[[r, i]] = self.open_coord(rng, i);
            }
        }
        (out, self.face_measure(0))
    }
}

/// Points with the Monte Carlo measure factor of the set they cover.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    pub points: Array2<f64>,
    pub factor: f64,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Which slices of coordinate 0 are penalised separately from the lateral
/// boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Slices {
    pub initial: bool,
    pub terminal: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub interior: PointSet,
    pub boundary: PointSet,
    pub initial: Option<PointSet>,
    pub terminal: Option<PointSet>,
}

impl SampleBatch {
    /// Draws `n_r` interior points, `n_b` boundary points and `n_b` points on
    /// each requested slice. Faces covered by a slice are left out of the
    /// boundary set.
    pub fn draw<R: Rng>(domain: &BoxDomain, n_r: usize, n_b: usize, slices: Slices, rng: &mut R) -> Result<Self> {
        if n_r == 0 || n_b == 0 {
            return Err(WanError::Domain("N_r and N_b must be positive".into()));
        }
        let interior = PointSet { points: domain.sample_interior(n_r, rng), factor: domain.volume() };
        let mut excluded = Vec::new();
        if slices.initial {
            excluded.push((0, false));
        }
        if slices.terminal {
            excluded.push((0, true));
        }
        let (points, factor) = domain.sample_faces(n_b, &excluded, rng)?;
        let boundary = PointSet { points, factor };
        let slice = |v: f64, rng: &mut R| {
            let (points, factor) = domain.sample_slice(n_b, v, rng);
            PointSet { points, factor }
        };
        let initial = slices.initial.then(|| slice(domain.lower[0], rng));
        let terminal = slices.terminal.then(|| slice(domain.upper[0], rng));
        Ok(Self { interior, boundary, initial, terminal })
    }
}

/// Product cutoff `φ = Π (x_i − a_i)(b_i − x_i)` over the active
/// coordinates; `x(1−x)` on `[0,1]` and `1 − x²` on `[−1,1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cutoff {
    lower: Vec<f64>,
    upper: Vec<f64>,
    active: Vec<bool>,
}

impl Cutoff {
    /// Time boxes leave the time coordinate out of the product.
    pub fn for_domain(domain: &BoxDomain) -> Self {
        let mut active = vec![true; domain.dim()];
        if domain.kind == DomainKind::TimeBox {
            active[0] = false;
        }
        Self { lower: domain.lower.clone(), upper: domain.upper.clone(), active }
    }

    pub fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d = x.len();
        let factors: Vec<f64> = (0..d)
            .map(|i| if self.active[i] { (x[i] - self.lower[i]) * (self.upper[i] - x[i]) } else { 1.0 })
            .collect();
        let phi = factors.iter().product();
        let grad = (0..d)
            .map(|i| {
                if !self.active[i] {
                    return 0.0;
                }
                let df = self.lower[i] + self.upper[i] - 2.0 * x[i];
                df * (0..d).filter(|&j| j != i).map(|j| factors[j]).product::<f64>()
            })
            .collect();
        (phi, grad)
    }

    /// `φ` as a column and `∇φ` as an `n × dim` array.
    pub fn eval_batch(&self, pts: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let (n, d) = pts.dim();
        let mut phi = Array2::zeros((n, 1));
        let mut grad = Array2::zeros((n, d));
        for r in 0..n {
            let (p, g) = self.eval(&pts.row(r).to_vec());
            phi[[r, 0]] = p;
            for i in 0..d {
                grad[[r, i]] = g[i];
            }
        }
        (phi, grad)
    }
}

/// Sum in index order.
pub fn ordered_sum(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |a, &b| a + b)
}

/// `factor · mean(values)`.
pub fn mc_integral(values: &[f64], factor: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(WanError::Other("Monte Carlo integral over an empty sample".into()));
    }
    Ok(factor * ordered_sum(values) / values.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L2Domain,
    H1Domain,
    L2Boundary,
}

/// Monte Carlo `∫|g|²` (plus `∫|∇g|²` for [`NormKind::H1Domain`]).
/// `grads[r]` is the gradient at sample `r`.
pub fn mc_norm_sq(kind: NormKind, values: &[f64], grads: Option<&[Vec<f64>]>, factor: f64) -> Result<f64> {
    let mut sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    if kind == NormKind::H1Domain {
        let grads = grads.ok_or_else(|| WanError::Other("H1 norm needs gradients".into()))?;
        if grads.len() != values.len() {
            return Err(WanError::Dimension { expected: values.len(), got: grads.len() });
        }
        for (s, g) in sq.iter_mut().zip(grads) {
            *s += g.iter().map(|v| v * v).sum::<f64>();
        }
    }
    mc_integral(&sq, factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn bounds_validated() {
        assert!(BoxDomain::new(DomainKind::StaticBox, vec![1.0], vec![0.0]).is_err());
        assert!(BoxDomain::time_cube(0.0, -1.0, 1.0, 2).is_err());
    }

    #[test]
    fn interior_points_open() {
        let dom = BoxDomain::static_cube(0.0, 1.0, 2).unwrap();
        let p = dom.sample_interior(4, &mut rng(1));
        assert_eq!(p.dim(), (4, 2));
        assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
        let tb = BoxDomain::time_cube(1.0, -1.0, 1.0, 5).unwrap();
        let p = tb.sample_interior(50, &mut rng(1));
        assert_eq!(p.ncols(), 6);
        assert!(p.column(0).iter().all(|&t| t > 0.0 && t < 1.0));
    }

    #[test]
    fn interior_mean_within_clt_band() {
        let dom = BoxDomain::static_cube(0.0, 1.0, 1).unwrap();
        let n = 100_000;
        let p = dom.sample_interior(n, &mut rng(2));
        let mean = p.column(0).sum() / n as f64;
        let sigma = (1.0 / 12f64).sqrt() / (n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn boundary_points_on_faces() {
        let dom = BoxDomain::static_cube(0.0, 1.0, 2).unwrap();
        let (p, area) = dom.sample_boundary(200, &mut rng(3)).unwrap();
        assert_eq!(area, 4.0);
        for r in 0..200 {
            let (x, y) = (p[[r, 0]], p[[r, 1]]);
            assert_eq!(x.min(1.0 - x) * y.min(1.0 - y), 0.0);
        }
    }

    #[test]
    fn faces_proportional_to_measure() {
        // [0,1]×[0,2]: faces x=0,1 have length 2, faces y=0,2 length 1
        let dom = BoxDomain::new(DomainKind::StaticBox, vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let n = 100_000;
        let (p, _) = dom.sample_boundary(n, &mut rng(4)).unwrap();
        let long = (0..n).filter(|&r| p[[r, 0]] == 0.0 || p[[r, 0]] == 1.0).count() as f64;
        let short = n as f64 - long;
        let (e_long, e_short) = (n as f64 * 2.0 / 3.0, n as f64 / 3.0);
        let chi2 = (long - e_long).powi(2) / e_long + (short - e_short).powi(2) / e_short;
        // 99% quantile of χ² with one degree of freedom
        assert!(chi2 < 6.635, "chi2 = {chi2}");
    }

    #[test]
    fn time_box_boundary_excludes_slices() {
        let tb = BoxDomain::time_cube(1.0, -1.0, 1.0, 2).unwrap();
        let (p, area) = tb.sample_boundary(500, &mut rng(5)).unwrap();
        assert_eq!(area, 4.0 * 2.0);
        assert!(p.column(0).iter().all(|&t| t > 0.0 && t < 1.0));
    }

    #[test]
    fn same_seed_same_batch() {
        let tb = BoxDomain::time_cube(1.0, -1.0, 1.0, 2).unwrap();
        let s = Slices { initial: true, terminal: false };
        let a = SampleBatch::draw(&tb, 30, 20, s, &mut rng(6)).unwrap();
        let b = SampleBatch::draw(&tb, 30, 20, s, &mut rng(6)).unwrap();
        assert_eq!(a, b);
        let init = a.initial.unwrap();
        assert!(init.points.column(0).iter().all(|&t| t == 0.0));
        assert_eq!(init.factor, 4.0);
        assert!(a.terminal.is_none());
    }

    #[test]
    fn cutoff_values() {
        let dom = BoxDomain::static_cube(0.0, 1.0, 2).unwrap();
        let c = Cutoff::for_domain(&dom);
        assert_eq!(c.eval(&[0.5, 0.5]).0, 1.0 / 16.0);
        let (bp, _) = dom.sample_boundary(50, &mut rng(7)).unwrap();
        let (phi, _) = c.eval_batch(&bp);
        assert!(phi.iter().all(|&v| v == 0.0));
        let sym = Cutoff::for_domain(&BoxDomain::static_cube(-1.0, 1.0, 2).unwrap());
        let x = [0.3, -0.6];
        assert!((sym.eval(&x).0 - (1.0 - 0.09) * (1.0 - 0.36)).abs() < 1e-15);
        let tb = Cutoff::for_domain(&BoxDomain::time_cube(1.0, 0.0, 1.0, 1).unwrap());
        let (p0, g0) = tb.eval(&[0.0, 0.5]);
        assert_eq!((p0, g0[0]), (0.25, 0.0));
    }

    #[test]
    fn cutoff_gradient_matches_differences() {
        let dom = BoxDomain::time_cube(1.0, -1.0, 1.0, 3).unwrap();
        let c = Cutoff::for_domain(&dom);
        let pts = dom.sample_interior(20, &mut rng(8));
        let h = 1e-6;
        for r in 0..20 {
            let x = pts.row(r).to_vec();
            let (_, g) = c.eval(&x);
            for i in 0..4 {
                let mut a = x.clone();
                let mut b = x.clone();
                a[i] += h;
                b[i] -= h;
                let fd = (c.eval(&a).0 - c.eval(&b).0) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-8 * g[i].abs().max(1.0), "{fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn integrals() {
        let dom = BoxDomain::static_cube(-1.0, 1.0, 5).unwrap();
        assert_eq!(mc_integral(&[1.0; 10], dom.volume()).unwrap(), 32.0);
        assert_eq!(mc_integral(&[0.0; 10], 3.0).unwrap(), 0.0);
        assert!(mc_integral(&[], 1.0).is_err());
        let unit = BoxDomain::static_cube(0.0, 1.0, 1).unwrap();
        let n = 100_000;
        let p = unit.sample_interior(n, &mut rng(9));
        let x: Vec<f64> = p.column(0).to_vec();
        let sigma = (1.0 / 12f64).sqrt() / (n as f64).sqrt();
        assert!((mc_integral(&x, 1.0).unwrap() - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn norms() {
        assert_eq!(mc_norm_sq(NormKind::L2Domain, &[0.0; 4], None, 1.0).unwrap(), 0.0);
        assert_eq!(mc_norm_sq(NormKind::L2Domain, &[1.5; 4], None, 1.0).unwrap(), 2.25);
        assert!(mc_norm_sq(NormKind::H1Domain, &[1.0], None, 1.0).is_err());
        let unit = BoxDomain::static_cube(0.0, 1.0, 1).unwrap();
        let n = 100_000;
        let p = unit.sample_interior(n, &mut rng(10));
        let pi = std::f64::consts::PI;
        let vals: Vec<f64> = p.column(0).iter().map(|x| (pi * x).sin()).collect();
        let grads: Vec<Vec<f64>> = p.column(0).iter().map(|x| vec![pi * (pi * x).cos()]).collect();
        let est = mc_norm_sq(NormKind::H1Domain, &vals, Some(&grads), 1.0).unwrap();
        let sq: Vec<f64> = vals.iter().zip(&grads).map(|(v, g)| v * v + g[0] * g[0]).collect();
        let mean = sq.iter().sum::<f64>() / n as f64;
        let var = sq.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let sigma = (var / n as f64).sqrt();
        assert!((est - (1.0 + pi * pi) / 2.0).abs() < 3.0 * sigma);
    }
}
