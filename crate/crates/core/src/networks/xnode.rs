use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dnn::{dnn_forward_generic, linear_forward_generic, Activation, DnnArch, DnnParams, LinearParams};
use crate::autodiff::{Graph, Jet, Real, Tid};
use crate::error::{Result, WanError};

/// Increasing time grid `0 = t₀ < t₁ < … < t_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.len() < 2 {
            return Err(WanError::TimeGrid("need at least one step".into()));
        }
        if t[0] != 0.0 {
            return Err(WanError::TimeGrid(format!("grid must start at 0, got {}", t[0])));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) || t.iter().any(|v| !v.is_finite()) {
            return Err(WanError::TimeGrid("grid must be strictly increasing".into()));
        }
        Ok(Self { t })
    }

    pub fn uniform(t_end: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(t_end > 0.0) {
            return Err(WanError::TimeGrid(format!("invalid uniform grid ({steps} steps on [0, {t_end}])")));
        }
        Self::new((0..=steps).map(|i| t_end * i as f64 / steps as f64).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.t
    }

    pub fn steps(&self) -> usize {
        self.t.len() - 1
    }

    pub fn end(&self) -> f64 {
        *self.t.last().unwrap()
    }

    /// Segment index `i` and weight `λ ∈ [0, 1]` such that
    /// `c = (1 − λ)·tᵢ + λ·t_{i+1}`. Grid points give `λ = 0` except the last.
    pub fn locate(&self, c: f64) -> Result<(usize, f64)> {
        let tol = 1e-12 * self.end().max(1.0);
        if !(c >= -tol && c <= self.end() + tol) {
            return Err(WanError::OutsideDomain(format!("time {c} outside [0, {}]", self.end())));
        }
        let n = self.steps();
        let i = self.t.partition_point(|&v| v <= c).saturating_sub(1).min(n - 1);
        let lam = ((c - self.t[i]) / (self.t[i + 1] - self.t[i])).clamp(0.0, 1.0);
        Ok((i, lam))
    }
}

/// Forward Euler for `h' = F(h, t)` on a grid; returns `h(t₀), …, h(t_n)`.
pub fn euler_trajectory<S: Real>(h0: Vec<S>, grid: &TimeGrid, mut field: impl FnMut(&[S], f64) -> Vec<S>) -> Vec<Vec<S>> {
    let t = grid.points();
    let mut out = Vec::with_capacity(t.len());
    out.push(h0);
    for i in 0..grid.steps() {
        let dt = t[i + 1] - t[i];
        let h = out.last().unwrap();
        let f = field(h, t[i]);
        let next = h.iter().zip(&f).map(|(&h, &f)| h + f * dt).collect();
        out.push(next);
    }
    out
}

/// Widths of the three XNODE components.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct XnodeArch {
    /// Dimension of the initial datum fed to `N^init`.
    pub datum_dim: usize,
    /// Hidden-state width (`u_hid-dim1`).
    pub state_dim: usize,
    /// Width of the vector-field hidden layers (`u_hid-dim2`).
    pub field_width: usize,
    /// Number of vector-field hidden layers (`u_layers`).
    pub field_layers: usize,
    /// Spatial input dimension of the vector field.
    pub space_dim: usize,
    /// Weight sharing inside the vector field.
    pub recursive: bool,
}

impl XnodeArch {
    pub fn init_arch(&self) -> Result<DnnArch> {
        DnnArch::uniform(
            vec![self.datum_dim, self.state_dim, self.state_dim, self.state_dim],
            Activation::Relu,
            false,
        )
    }

    pub fn field_arch(&self) -> Result<DnnArch> {
        if self.field_layers == 0 {
            return Err(WanError::Architecture("vector field needs at least one hidden layer".into()));
        }
        let mut widths = vec![self.state_dim + 1 + self.space_dim];
        widths.extend(std::iter::repeat_n(self.field_width, self.field_layers));
        widths.push(self.state_dim);
        DnnArch::uniform(widths, Activation::Tanh, self.recursive)
    }

    pub fn param_count(&self) -> Result<usize> {
        Ok(self.init_arch()?.param_count() + self.field_arch()?.param_count() + self.state_dim + 1)
    }
}

/// θ₁ (`N^init`), θ₂ (`N^vec`) and θ₃ (linear readout).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XnodeParams {
    pub arch: XnodeArch,
    pub init: DnnParams,
    pub field: DnnParams,
    pub readout: LinearParams,
}

/// Trajectory input for a batch of points.
pub struct XnodeBatch<'a> {
    /// Clock value of each row.
    pub clock: &'a [f64],
    /// Jet direction that differentiates along the clock, if any.
    pub clock_dir: Option<usize>,
    /// Spatial input, `rows × space_dim`.
    pub space: &'a Jet,
    /// Initial datum, `rows × datum_dim`.
    pub datum: &'a Jet,
}

impl XnodeParams {
    pub fn init<R: Rng>(arch: XnodeArch, rng: &mut R) -> Result<Self> {
        let init = DnnParams::init(arch.init_arch()?, rng);
        let field = DnnParams::init(arch.field_arch()?, rng);
        let readout = LinearParams::init(arch.state_dim, 1, rng);
        Ok(Self { arch, init, field, readout })
    }

    pub fn len(&self) -> usize {
        self.init.len() + self.field.len() + self.readout.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// θ₁ | θ₂ | θ₃ concatenated.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.init.data);
        v.extend_from_slice(&self.field.data);
        v.extend_from_slice(&self.readout.data);
        v
    }

    pub fn set_flat(&mut self, v: &[f64]) -> Result<()> {
        if v.len() != self.len() {
            return Err(WanError::Dimension { expected: self.len(), got: v.len() });
        }
        let (a, rest) = v.split_at(self.init.len());
        let (b, c) = rest.split_at(self.field.len());
        self.init.data.copy_from_slice(a);
        self.field.data.copy_from_slice(b);
        self.readout.data.copy_from_slice(c);
        Ok(())
    }

    fn check_inputs(&self, x: &[f64], h0: &[f64]) -> Result<()> {
        if x.len() != self.arch.space_dim {
            return Err(WanError::Dimension { expected: self.arch.space_dim, got: x.len() });
        }
        if h0.len() != self.arch.datum_dim {
            return Err(WanError::Dimension { expected: self.arch.datum_dim, got: h0.len() });
        }
        Ok(())
    }

    /// `o_x(t₀), …, o_x(t_n)` for one spatial point.
    pub fn trajectory(&self, x: &[f64], h0: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
        self.check_inputs(x, h0)?;
        Ok(xnode_trajectory_generic(self, &self.flat(), x, h0, grid))
    }

    /// `u(c, x)`, linearly interpolated between grid values.
    pub fn eval(&self, clock: f64, x: &[f64], h0: &[f64], grid: &TimeGrid) -> Result<f64> {
        let (i, lam) = grid.locate(clock)?;
        let o = self.trajectory(x, h0, grid)?;
        Ok(interpolate(o[i], o[i + 1], lam))
    }

    /// Static-problem evaluation at `x ∈ [0,1]^d`: `x₁` is the clock on
    /// `[0, 1]`, `(x₂, …, x_d)` the spatial input.
    pub fn pseudo_time_forward(&self, x: &[f64], h0: &[f64], grid: &TimeGrid) -> Result<f64> {
        if x.len() < 2 {
            return Err(WanError::Dimension { expected: 2, got: x.len() });
        }
        if let Some(v) = x.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(WanError::OutsideDomain(format!("coordinate {v} outside [0, 1]")));
        }
        self.eval(x[0], &x[1..], h0, grid)
    }

    /// Builds `u` for a batch on a graph. Derivatives along `clock_dir` are
    /// the slopes of the interpolant, i.e. the readout weights applied to the
    /// vector field at the left grid point; their second derivatives are zero.
    pub fn build(
        &self,
        g: &mut Graph,
        batch: &XnodeBatch,
        grid: &TimeGrid,
        trainable: bool,
        second: bool,
    ) -> Result<(Jet, Vec<Tid>)> {
        let rows = batch.clock.len();
        let dirs = batch.space.dirs();
        let (init_nodes, mut leaves) = self.init.nodes(g, trainable);
        let (field_nodes, field_leaves) = self.field.nodes(g, trainable);
        let (w3, b3, out_leaves) = self.readout.nodes(g, trainable);
        leaves.extend(field_leaves);
        leaves.extend(out_leaves);

        let mut h = self.init.apply(g, &init_nodes, batch.datum, second);
        let t = grid.points();
        let mut outs = Vec::with_capacity(t.len());
        outs.push(g.affine_jet(&h, w3, b3));
        for i in 0..grid.steps() {
            let dt = t[i + 1] - t[i];
            let tc = g.filled(rows, 1, t[i]);
            let z = g.concat_jets(&[&h, &Jet::constant(tc, dirs), batch.space]);
            let f = self.field.apply(g, &field_nodes, &z, second);
            let step = |g: &mut Graph, a: Option<Tid>, b: Option<Tid>| -> Option<Tid> {
                let b = b.map(|b| g.scale(b, dt));
                g.opt_add(a, b)
            };
            let val = step(g, Some(h.val), Some(f.val)).unwrap();
            let d1 = (0..dirs).map(|k| step(g, h.d1[k], f.d1[k])).collect();
            let d2 = (0..dirs).map(|k| step(g, h.d2[k], f.d2[k])).collect();
            h = Jet { val, d1, d2 };
            outs.push(g.affine_jet(&h, w3, b3));
        }

        // interpolation weights and slopes per row
        let n1 = t.len();
        let mut wmat = Array2::<f64>::zeros((rows, n1));
        let mut smat = Array2::<f64>::zeros((rows, n1));
        for (r, &c) in batch.clock.iter().enumerate() {
            let (i, lam) = grid.locate(c)?;
            let dt = t[i + 1] - t[i];
            wmat[[r, i]] = 1.0 - lam;
            wmat[[r, i + 1]] = lam;
            smat[[r, i]] = -1.0 / dt;
            smat[[r, i + 1]] = 1.0 / dt;
        }
        let wmat = g.constant(wmat);
        let combine = |g: &mut Graph, parts: Vec<Option<Tid>>, weights: Tid| -> Option<Tid> {
            if parts.iter().all(Option::is_none) {
                return None;
            }
            let cols: Vec<Tid> = parts.into_iter().map(|p| p.unwrap_or_else(|| g.filled(rows, 1, 0.0))).collect();
            let m = g.concat(&cols);
            let m = g.mul(m, weights);
            Some(g.row_sum(m))
        };
        let val = combine(g, outs.iter().map(|o| Some(o.val)).collect(), wmat).unwrap();
        let mut d1: Vec<Option<Tid>> = (0..dirs).map(|k| combine(g, outs.iter().map(|o| o.d1[k]).collect(), wmat)).collect();
        let mut d2: Vec<Option<Tid>> = (0..dirs).map(|k| combine(g, outs.iter().map(|o| o.d2[k]).collect(), wmat)).collect();
        if let Some(k) = batch.clock_dir {
            let smat = g.constant(smat);
            d1[k] = combine(g, outs.iter().map(|o| Some(o.val)).collect(), smat);
            d2[k] = None;
        }
        Ok((Jet { val, d1, d2 }, leaves))
    }
}

fn interpolate<S: Real>(a: S, b: S, lam: f64) -> S {
    a * (1.0 - lam) + b * lam
}

/// Grid outputs `o_x(tᵢ)` with weights in the flat layout of
/// [`XnodeParams::flat`], for any scalar type.
pub fn xnode_trajectory_generic<S: Real>(net: &XnodeParams, w: &[S], x: &[S], h0: &[S], grid: &TimeGrid) -> Vec<S> {
    let (ia, fa) = (&net.init.arch, &net.field.arch);
    let (wi, rest) = w.split_at(ia.param_count());
    let (wf, wr) = rest.split_at(fa.param_count());
    let start = dnn_forward_generic(ia, wi, h0);
    let lift = x.first().or(h0.first()).copied().expect("nonempty input");
    let traj = euler_trajectory(start, grid, |h, t| {
        let mut z = h.to_vec();
        z.push(lift.lift(t));
        z.extend_from_slice(x);
        dnn_forward_generic(fa, wf, &z)
    });
    traj.iter().map(|h| linear_forward_generic(net.readout.n_in, 1, wr, h)[0]).collect()
}

/// `u(c, x)` for any scalar type, linearly interpolated.
pub fn xnode_eval_generic<S: Real>(net: &XnodeParams, w: &[S], clock: f64, x: &[S], h0: &[S], grid: &TimeGrid) -> Result<S> {
    let (i, lam) = grid.locate(clock)?;
    let o = xnode_trajectory_generic(net, w, x, h0, grid);
    Ok(interpolate(o[i], o[i + 1], lam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example_arch(recursive: bool) -> XnodeArch {
        XnodeArch { datum_dim: 1, state_dim: 20, field_width: 10, field_layers: 8, space_dim: 5, recursive }
    }

    fn small(recursive: bool) -> XnodeParams {
        let arch = XnodeArch { datum_dim: 1, state_dim: 4, field_width: 3, field_layers: 3, space_dim: 2, recursive };
        XnodeParams::init(arch, &mut ChaCha8Rng::seed_from_u64(11)).unwrap()
    }

    #[test]
    fn example_parameter_counts() {
        let a = example_arch(false);
        assert_eq!(a.init_arch().unwrap().param_count(), 880);
        assert_eq!(a.field_arch().unwrap().param_count(), 1260);
        assert_eq!(a.param_count().unwrap(), 2161);
        let r = example_arch(true);
        assert_eq!(r.field_arch().unwrap().param_count(), 600);
        assert_eq!(r.param_count().unwrap(), 1501);
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![0.0, 0.5, 0.4]).is_err());
        assert!(TimeGrid::new(vec![0.1, 0.5]).is_err());
        assert!(TimeGrid::new(vec![0.0]).is_err());
        let g = TimeGrid::uniform(1.0, 20).unwrap();
        assert_eq!(g.points().len(), 21);
        assert_eq!(g.locate(1.0).unwrap(), (19, 1.0));
        assert_eq!(g.locate(0.0).unwrap(), (0, 0.0));
        assert!(g.locate(1.5).is_err());
    }

    #[test]
    fn zero_field_gives_constant_output() {
        let mut p = small(false);
        p.field.data.iter_mut().for_each(|v| *v = 0.0);
        let grid = TimeGrid::uniform(1.0, 20).unwrap();
        let o = p.trajectory(&[0.3, 0.7], &[0.4], &grid).unwrap();
        assert_eq!(o.len(), 21);
        let h = p.init.forward(&[0.4]).unwrap();
        let want = p.readout.forward(&h)[0];
        assert!(o.iter().all(|&v| v == want));
        let a = p.pseudo_time_forward(&[0.1, 0.3, 0.7], &[0.4], &grid).unwrap();
        let b = p.pseudo_time_forward(&[0.93, 0.3, 0.7], &[0.4], &grid).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn euler_closed_form() {
        for n in [1, 4, 20] {
            let grid = TimeGrid::uniform(1.0, n).unwrap();
            let traj = euler_trajectory(vec![1.0], &grid, |h, _| h.to_vec());
            let want = (1.0 + 1.0 / n as f64).powi(n as i32);
            assert!((traj[n][0] - want).abs() < 1e-14 * want);
        }
    }

    /// A one-dimensional XNODE whose layers realise `h(0) = 1`,
    /// `N^vec(h, t, x) = h` and the identity readout.
    fn identity_xnode(space_dim: usize) -> XnodeParams {
        let arch = XnodeArch { datum_dim: 1, state_dim: 1, field_width: 1, field_layers: 1, space_dim, recursive: false };
        let init = DnnParams::from_data(
            DnnArch::uniform(vec![1, 1, 1, 1], Activation::Identity, false).unwrap(),
            vec![0.0, 1.0, 1.0, 0.0, 1.0, 0.0],
        )
        .unwrap();
        let mut fw = vec![0.0; 2 + space_dim + 1];
        fw[0] = 1.0;
        fw.extend([1.0, 0.0]);
        let field = DnnParams::from_data(
            DnnArch::uniform(vec![2 + space_dim, 1, 1], Activation::Identity, false).unwrap(),
            fw,
        )
        .unwrap();
        let readout = LinearParams { n_in: 1, n_out: 1, data: vec![1.0, 0.0] };
        XnodeParams { arch, init, field, readout }
    }

    #[test]
    fn identity_field_follows_euler() {
        let p = identity_xnode(1);
        for n in [2, 10] {
            let grid = TimeGrid::uniform(1.0, n).unwrap();
            let o = p.trajectory(&[0.5], &[0.0], &grid).unwrap();
            let want = (1.0 + 1.0 / n as f64).powi(n as i32);
            assert!((o[n] - want).abs() < 1e-13);
            let u = p.pseudo_time_forward(&[1.0, 0.5], &[0.0], &grid).unwrap();
            assert!((u - want).abs() < 1e-13);
            // on a grid point the value is exact
            let k = n / 2;
            let u = p.pseudo_time_forward(&[grid.points()[k], 0.5], &[0.0], &grid).unwrap();
            assert_eq!(u, o[k]);
        }
        assert!(p.pseudo_time_forward(&[1.2, 0.5], &[0.0], &TimeGrid::uniform(1.0, 4).unwrap()).is_err());
    }

    #[test]
    fn euler_is_first_order() {
        let exact = (-2.0f64).exp();
        let err = |n: usize| {
            let grid = TimeGrid::uniform(1.0, n).unwrap();
            let traj = euler_trajectory(vec![1.0], &grid, |h, _| vec![-2.0 * h[0]]);
            (traj[n][0] - exact).abs()
        };
        for n in [10, 20, 40, 80] {
            let ratio = err(n) / err(2 * n);
            assert!((1.7..=2.3).contains(&ratio), "ratio {ratio} at n={n}");
        }
    }

    fn batch_inputs(g: &mut Graph, pts: &Array2<f64>, datum: &[f64]) -> (Jet, Jet) {
        // directions: 0 = clock, 1.. = spatial coordinates
        let rows = pts.nrows();
        let sd = pts.ncols();
        let xs = g.constant(pts.clone());
        let mut space = Jet::constant(xs, sd + 1);
        for k in 0..sd {
            let mut e = Array2::zeros((rows, sd));
            e.column_mut(k).fill(1.0);
            space.d1[k + 1] = Some(g.constant(e));
        }
        let dv = g.column(datum);
        (space, Jet::constant(dv, sd + 1))
    }

    #[test]
    fn batched_build_matches_scalar_and_tape() {
        let p = small(true);
        let grid = TimeGrid::uniform(1.0, 5).unwrap();
        let pts = ndarray::array![[0.2, -0.4], [0.9, 0.1], [-0.5, 0.6]];
        let clock = [0.0, 0.37, 1.0];
        let datum = [0.3, -0.2, 0.8];
        let mut g = Graph::new();
        let (space, dat) = batch_inputs(&mut g, &pts, &datum);
        let batch = XnodeBatch { clock: &clock, clock_dir: Some(0), space: &space, datum: &dat };
        let (u, leaves) = p.build(&mut g, &batch, &grid, true, true).unwrap();
        assert_eq!(leaves.len(), 2 + 2 * p.field.arch.slots().len() + 2 * p.init.arch.slots().len());

        let flat = p.flat();
        for r in 0..3 {
            let x = pts.row(r).to_vec();
            let want = p.eval(clock[r], &x, &[datum[r]], &grid).unwrap();
            assert!((g.value(u.val)[[r, 0]] - want).abs() < 1e-13);

            // spatial derivatives from the scalar tape
            let tape = Tape::new();
            let w: Vec<_> = flat.iter().map(|&v| tape.constant(v)).collect();
            let xv: Vec<_> = x.iter().map(|&v| tape.input(v)).collect();
            let h0 = [tape.constant(datum[r])];
            let y = xnode_eval_generic(&p, &w, clock[r], &xv, &h0, &grid).unwrap();
            let gr = tape.grad(y, &xv).unwrap();
            for k in 0..2 {
                assert!((g.value(u.d1[k + 1].unwrap())[[r, 0]] - gr[k].value()).abs() < 1e-11);
                let gg = tape.grad(gr[k], &[xv[k]]).unwrap()[0].value();
                assert!((g.value(u.d2[k + 1].unwrap())[[r, 0]] - gg).abs() < 1e-10);
            }

            // clock slope equals readout weights applied to the vector field
            let (i, _) = grid.locate(clock[r]).unwrap();
            let traj_h = {
                let start = p.init.forward(&[datum[r]]).unwrap();
                euler_trajectory(start, &grid, |h, t| {
                    let mut z = h.to_vec();
                    z.push(t);
                    z.extend_from_slice(&x);
                    p.field.forward(&z).unwrap()
                })
            };
            let mut z = traj_h[i].clone();
            z.push(grid.points()[i]);
            z.extend_from_slice(&x);
            let f = p.field.forward(&z).unwrap();
            let slope: f64 = (0..4).map(|j| p.readout.data[j] * f[j]).sum();
            assert!((g.value(u.d1[0].unwrap())[[r, 0]] - slope).abs() < 1e-11);
            assert!(u.d2[0].is_none());
        }

        // parameter gradient of Σ u against the tape
        let s = g.sum(u.val);
        let grads = crate::networks::flatten_grads(&g.backward(s, &leaves));
        let tape = Tape::new();
        let w: Vec<_> = flat.iter().map(|&v| tape.input(v)).collect();
        let mut total = tape.constant(0.0);
        for r in 0..3 {
            let x: Vec<_> = pts.row(r).iter().map(|&v| tape.constant(v)).collect();
            let h0 = [tape.constant(datum[r])];
            total = total + xnode_eval_generic(&p, &w, clock[r], &x, &h0, &grid).unwrap();
        }
        let want = tape.grad(total, &w).unwrap();
        assert_eq!(grads.len(), want.len());
        for (a, b) in grads.iter().zip(&want) {
            assert!((a - b.value()).abs() < 1e-11, "{a} vs {}", b.value());
        }
    }
}
