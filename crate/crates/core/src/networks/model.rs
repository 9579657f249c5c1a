use ndarray::{s, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dnn::{dnn_forward_generic, Activation, DnnArch, DnnParams};
use super::xnode::{xnode_trajectory_generic, TimeGrid, XnodeArch, XnodeBatch, XnodeParams};
use crate::autodiff::{Graph, Jet, Real, Tid};
use crate::error::{Result, WanError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Dnn,
    DnnRecursive,
    Xnode,
    XnodeRecursive,
    PseudoTimeXnode,
}

impl ModelKind {
    pub fn is_xnode(self) -> bool {
        matches!(self, ModelKind::Xnode | ModelKind::XnodeRecursive | ModelKind::PseudoTimeXnode)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Dnn => "dnn",
            ModelKind::DnnRecursive => "dnn-recursive",
            ModelKind::Xnode => "xnode",
            ModelKind::XnodeRecursive => "xnode-recursive",
            ModelKind::PseudoTimeXnode => "pseudo-time-xnode",
        }
    }
}

/// Sizes of the solution network.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialSpec {
    pub kind: ModelKind,
    /// Number of point coordinates (time included for parabolic problems).
    pub input_dim: usize,
    pub layers: usize,
    pub hid1: usize,
    pub hid2: usize,
    /// Euler steps of the XNODE clock.
    pub n_t: usize,
    /// Extent of the clock coordinate.
    pub horizon: f64,
}

/// The adversarial test network: `v_layers + 1` hidden layers of width
/// `v_hid`, ReLU except for a tanh on the last hidden layer.
pub fn adversary_arch(input_dim: usize, v_layers: usize, v_hid: usize) -> Result<DnnArch> {
    let mut widths = vec![input_dim];
    widths.extend(std::iter::repeat_n(v_hid, v_layers + 1));
    widths.push(1);
    let mut acts = vec![Activation::Relu; v_layers];
    acts.push(Activation::Tanh);
    DnnArch::new(widths, acts, false)
}

/// Initial-datum values `h` at a batch of points with derivatives along
/// the requested coordinate directions. `d1[k][r]`, `d2[k][r]`; `d2` is
/// empty when second derivatives are not needed.
#[derive(Clone, Debug, Default)]
pub struct DatumJet {
    pub val: Vec<f64>,
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<f64>>,
}

/// The solution network `u_θ`. Points are rows of all coordinates; for the
/// XNODE variants coordinate 0 is the clock and the rest the spatial input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TrialNet {
    Dnn(DnnParams),
    Xnode { kind: ModelKind, params: XnodeParams, grid: TimeGrid },
}

impl TrialNet {
    pub fn init<R: Rng>(spec: &TrialSpec, rng: &mut R) -> Result<Self> {
        match spec.kind {
            ModelKind::Dnn | ModelKind::DnnRecursive => {
                let mut widths = vec![spec.input_dim];
                widths.extend(std::iter::repeat_n(spec.hid1, spec.layers));
                widths.push(1);
                let arch = DnnArch::uniform(widths, Activation::Tanh, spec.kind == ModelKind::DnnRecursive)?;
                Ok(TrialNet::Dnn(DnnParams::init(arch, rng)))
            }
            kind => {
                if spec.input_dim < 2 {
                    return Err(WanError::Architecture("XNODE needs a clock and at least one spatial coordinate".into()));
                }
                let arch = XnodeArch {
                    datum_dim: 1,
                    state_dim: spec.hid1,
                    field_width: spec.hid2,
                    field_layers: spec.layers,
                    space_dim: spec.input_dim - 1,
                    recursive: kind != ModelKind::Xnode,
                };
                let grid = TimeGrid::uniform(spec.horizon, spec.n_t)?;
                Ok(TrialNet::Xnode { kind, params: XnodeParams::init(arch, rng)?, grid })
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            TrialNet::Dnn(p) if p.arch.recursive => ModelKind::DnnRecursive,
            TrialNet::Dnn(_) => ModelKind::Dnn,
            TrialNet::Xnode { kind, .. } => *kind,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            TrialNet::Dnn(p) => p.arch.input_dim(),
            TrialNet::Xnode { params, .. } => params.arch.space_dim + 1,
        }
    }

    /// Whether evaluation needs the initial datum `h` at each point.
    pub fn needs_datum(&self) -> bool {
        matches!(self, TrialNet::Xnode { .. })
    }

    /// Whether second derivatives along the clock vanish identically.
    pub fn piecewise_linear_clock(&self) -> bool {
        self.needs_datum()
    }

    pub fn len(&self) -> usize {
        match self {
            TrialNet::Dnn(p) => p.len(),
            TrialNet::Xnode { params, .. } => params.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self) -> Vec<f64> {
        match self {
            TrialNet::Dnn(p) => p.data.clone(),
            TrialNet::Xnode { params, .. } => params.flat(),
        }
    }

    pub fn set_flat(&mut self, v: &[f64]) -> Result<()> {
        match self {
            TrialNet::Dnn(p) => {
                if v.len() != p.len() {
                    return Err(WanError::Dimension { expected: p.len(), got: v.len() });
                }
                p.data.copy_from_slice(v);
                Ok(())
            }
            TrialNet::Xnode { params, .. } => params.set_flat(v),
        }
    }

    /// `u_θ(p)`; `h0` is the initial datum at `p` (ignored by plain DNNs).
    pub fn eval(&self, p: &[f64], h0: f64) -> Result<f64> {
        if p.len() != self.input_dim() {
            return Err(WanError::Dimension { expected: self.input_dim(), got: p.len() });
        }
        if let TrialNet::Xnode { grid, .. } = self {
            grid.locate(p[0])?;
        }
        Ok(self.eval_generic(&self.flat(), p, h0))
    }

    /// `u` with weights and coordinates of any scalar type. The XNODE
    /// interpolation weight is formed from `p[0]`, so derivatives along the
    /// clock are the interpolant slopes.
    pub fn eval_generic<S: Real>(&self, w: &[S], p: &[S], h0: S) -> S {
        match self {
            TrialNet::Dnn(d) => dnn_forward_generic(&d.arch, w, p)[0],
            TrialNet::Xnode { params, grid, .. } => {
                let o = xnode_trajectory_generic(params, w, &p[1..], &[h0], grid);
                let (i, _) = grid.locate(p[0].val()).expect("clock inside the grid");
                let t = grid.points();
                let lam = (p[0] - t[i]) / (t[i + 1] - t[i]);
                o[i] + (o[i + 1] - o[i]) * lam
            }
        }
    }

    /// Builds `u_θ` on a batch of points with derivatives along the
    /// coordinate indices `dirs`. Returns the jet and the parameter leaves in
    /// the order of [`Self::flat`].
    pub fn build(
        &self,
        g: &mut Graph,
        pts: &Array2<f64>,
        dirs: &[usize],
        datum: Option<&DatumJet>,
        trainable: bool,
        second: bool,
    ) -> Result<(Jet, Vec<Tid>)> {
        let rows = pts.nrows();
        let n = pts.ncols();
        if n != self.input_dim() {
            return Err(WanError::Dimension { expected: self.input_dim(), got: n });
        }
        if let Some(&c) = dirs.iter().find(|&&c| c >= n) {
            return Err(WanError::Dimension { expected: n, got: c + 1 });
        }
        let unit = |g: &mut Graph, cols: usize, c: usize| {
            let mut e = Array2::zeros((rows, cols));
            e.column_mut(c).fill(1.0);
            g.constant(e)
        };
        match self {
            TrialNet::Dnn(p) => {
                let x = g.constant(pts.clone());
                let mut input = Jet::constant(x, dirs.len());
                for (k, &c) in dirs.iter().enumerate() {
                    input.d1[k] = Some(unit(g, n, c));
                }
                Ok(p.build(g, &input, trainable, second))
            }
            TrialNet::Xnode { params, grid, .. } => {
                let datum = datum.ok_or(WanError::MissingSlice("initial datum"))?;
                if datum.val.len() != rows {
                    return Err(WanError::Dimension { expected: rows, got: datum.val.len() });
                }
                let xs = g.constant(pts.slice(s![.., 1..]).to_owned());
                let mut space = Jet::constant(xs, dirs.len());
                let mut clock_dir = None;
                let hv = g.column(&datum.val);
                let mut h = Jet::constant(hv, dirs.len());
                for (k, &c) in dirs.iter().enumerate() {
                    if c == 0 {
                        clock_dir = Some(k);
                        continue;
                    }
                    space.d1[k] = Some(unit(g, n - 1, c - 1));
                    if let Some(d) = datum.d1.get(k) {
                        h.d1[k] = Some(g.column(d));
                    }
                    if second {
                        if let Some(d) = datum.d2.get(k) {
                            h.d2[k] = Some(g.column(d));
                        }
                    }
                }
                let clock: Vec<f64> = pts.column(0).to_vec();
                let batch = XnodeBatch { clock: &clock, clock_dir, space: &space, datum: &h };
                params.build(g, &batch, grid, trainable, second)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn adversary_counts() {
        assert_eq!(adversary_arch(6, 9, 50).unwrap().param_count(), 23351);
        let mut a = adversary_arch(6, 9, 50).unwrap();
        a.recursive = true;
        assert_eq!(a.param_count(), 2951);
    }

    #[test]
    fn linear_layer_count() {
        assert_eq!(super::super::linear_param_count(7, 1), 8);
    }

    fn spec(kind: ModelKind) -> TrialSpec {
        TrialSpec { kind, input_dim: 3, layers: 3, hid1: 5, hid2: 4, n_t: 6, horizon: 1.0 }
    }

    /// Datum `h = sin(x₁) + x₂²` evaluated at the spatial coordinates.
    fn datum_for(pts: &Array2<f64>, dirs: &[usize]) -> DatumJet {
        let rows = pts.nrows();
        let mut d = DatumJet { val: vec![], d1: vec![vec![0.0; rows]; dirs.len()], d2: vec![vec![0.0; rows]; dirs.len()] };
        for r in 0..rows {
            let (a, b) = (pts[[r, 1]], pts[[r, 2]]);
            d.val.push(a.sin() + b * b);
            for (k, &c) in dirs.iter().enumerate() {
                match c {
                    1 => {
                        d.d1[k][r] = a.cos();
                        d.d2[k][r] = -a.sin();
                    }
                    2 => {
                        d.d1[k][r] = 2.0 * b;
                        d.d2[k][r] = 2.0;
                    }
                    _ => {}
                }
            }
        }
        d
    }

    #[test]
    fn built_derivatives_match_tape() {
        let pts = ndarray::array![[0.1, 0.3, -0.2], [0.55, -0.7, 0.9], [1.0, 0.0, 0.4]];
        let dirs = [0, 1, 2];
        for kind in [ModelKind::Dnn, ModelKind::DnnRecursive, ModelKind::Xnode, ModelKind::PseudoTimeXnode] {
            let net = TrialNet::init(&spec(kind), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
            let datum = datum_for(&pts, &dirs);
            let mut g = Graph::new();
            let (u, _) = net.build(&mut g, &pts, &dirs, Some(&datum), false, true).unwrap();
            let w = net.flat();
            for r in 0..3 {
                let tape = Tape::new();
                let wv: Vec<_> = w.iter().map(|&v| tape.constant(v)).collect();
                let p: Vec<_> = pts.row(r).iter().map(|&v| tape.input(v)).collect();
                let h0 = (p[1].sin() + p[2] * p[2]) * 1.0;
                let y = net.eval_generic(&wv, &p, h0);
                assert!((y.value() - g.value(u.val)[[r, 0]]).abs() < 1e-13);
                assert!((y.value() - net.eval(&pts.row(r).to_vec(), datum.val[r]).unwrap()).abs() < 1e-13);
                let gr = tape.grad(y, &p).unwrap();
                for (k, &c) in dirs.iter().enumerate() {
                    let got = g.value(u.d1[k].unwrap())[[r, 0]];
                    assert!((got - gr[c].value()).abs() < 1e-11, "{kind:?} d1 {c}: {got} vs {}", gr[c].value());
                    if c == 0 && net.piecewise_linear_clock() {
                        assert!(u.d2[k].is_none());
                        continue;
                    }
                    let gg = tape.grad(gr[c], &[p[c]]).unwrap()[0].value();
                    let got = g.value(u.d2[k].unwrap())[[r, 0]];
                    assert!((got - gg).abs() < 1e-10, "{kind:?} d2 {c}: {got} vs {gg}");
                }
            }
        }
    }

    #[test]
    fn xnode_requires_datum() {
        let net = TrialNet::init(&spec(ModelKind::Xnode), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let pts = ndarray::array![[0.1, 0.3, -0.2]];
        assert!(net.build(&mut Graph::new(), &pts, &[1], None, false, false).is_err());
        assert!(net.eval(&[1.5, 0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn flat_round_trip() {
        for kind in [ModelKind::Dnn, ModelKind::XnodeRecursive] {
            let mut net = TrialNet::init(&spec(kind), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
            let v: Vec<f64> = (0..net.len()).map(|i| i as f64 * 1e-3).collect();
            net.set_flat(&v).unwrap();
            assert_eq!(net.flat(), v);
            assert!(net.set_flat(&v[1..]).is_err());
        }
    }
}
