use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Jet, Real, Tid};
use crate::error::{Result, WanError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub fn apply<S: Real>(self, x: S) -> S {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.relu(),
            Activation::Identity => x,
        }
    }
}

/// Feed-forward architecture `[n₁, …, n_{L+1}]`: input width, hidden widths,
/// output width. `activations[l]` follows the `l`-th hidden layer; the output
/// layer has none.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DnnArch {
    pub widths: Vec<usize>,
    pub activations: Vec<Activation>,
    /// Share one weight/bias pair across each run of consecutive equal-width
    /// hidden layers.
    pub recursive: bool,
}

impl DnnArch {
    pub fn new(widths: Vec<usize>, activations: Vec<Activation>, recursive: bool) -> Result<Self> {
        if widths.len() < 3 {
            return Err(WanError::Architecture(
                "a DNN needs an input, an output and at least one hidden layer".into(),
            ));
        }
        if widths.contains(&0) {
            return Err(WanError::Architecture("layer widths must be positive".into()));
        }
        if activations.len() != widths.len() - 2 {
            return Err(WanError::Architecture(format!(
                "{} hidden layers but {} activations",
                widths.len() - 2,
                activations.len()
            )));
        }
        Ok(Self { widths, activations, recursive })
    }

    pub fn uniform(widths: Vec<usize>, act: Activation, recursive: bool) -> Result<Self> {
        let n = widths.len().saturating_sub(2);
        Self::new(widths, vec![act; n], recursive)
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn n_transforms(&self) -> usize {
        self.widths.len() - 1
    }

    /// Parameter slot used by each transform `T^l`.
    pub fn slot_map(&self) -> Vec<usize> {
        let last = self.n_transforms() - 1;
        let mut map = Vec::with_capacity(self.n_transforms());
        let mut next = 0;
        for l in 0..self.n_transforms() {
            // hidden -> hidden transforms are l = 1..last-1
            let shares = self.recursive
                && l >= 2
                && l < last
                && self.widths[l - 1] == self.widths[l]
                && self.widths[l] == self.widths[l + 1];
            if shares {
                map.push(map[l - 1]);
            } else {
                map.push(next);
                next += 1;
            }
        }
        map
    }

    /// `(n_in, n_out)` of each distinct parameter slot.
    pub fn slots(&self) -> Vec<(usize, usize)> {
        let map = self.slot_map();
        let mut out: Vec<(usize, usize)> = Vec::new();
        for (l, &s) in map.iter().enumerate() {
            if s == out.len() {
                out.push((self.widths[l], self.widths[l + 1]));
            }
        }
        out
    }

    /// `Σ n_{l+1}(n_l + 1)` over distinct slots.
    pub fn param_count(&self) -> usize {
        self.slots().iter().map(|(i, o)| o * (i + 1)).sum()
    }

    fn slot_offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        for (i, o) in self.slots() {
            off.push(off.last().unwrap() + o * (i + 1));
        }
        off
    }
}

pub fn linear_param_count(n_in: usize, n_out: usize) -> usize {
    n_out * (n_in + 1)
}

/// Draws `n` parameters of a layer with the given fan-in uniformly from
/// `[-1/√fan_in, 1/√fan_in]`.
fn init_uniform<R: Rng>(rng: &mut R, fan_in: usize, n: usize, out: &mut Vec<f64>) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    out.extend((0..n).map(|_| rng.random_range(-bound..=bound)));
}

/// Weights of a [`DnnArch`], flat: per slot, `W` row-major (`n_out × n_in`)
/// followed by `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DnnParams {
    pub arch: DnnArch,
    pub data: Vec<f64>,
}

impl DnnParams {
    pub fn init<R: Rng>(arch: DnnArch, rng: &mut R) -> Self {
        let mut data = Vec::with_capacity(arch.param_count());
        for (i, o) in arch.slots() {
            init_uniform(rng, i, o * (i + 1), &mut data);
        }
        Self { arch, data }
    }

    pub fn from_data(arch: DnnArch, data: Vec<f64>) -> Result<Self> {
        if data.len() != arch.param_count() {
            return Err(WanError::Dimension { expected: arch.param_count(), got: data.len() });
        }
        Ok(Self { arch, data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.arch.input_dim() {
            return Err(WanError::Dimension { expected: self.arch.input_dim(), got: x.len() });
        }
        Ok(dnn_forward_generic(&self.arch, &self.data, x))
    }

    /// Places the weights on a graph, as trainable leaves or constants.
    /// Returns one `(W, b)` pair per slot and the leaves in flat-layout order.
    pub fn nodes(&self, g: &mut Graph, trainable: bool) -> (Vec<(Tid, Tid)>, Vec<Tid>) {
        let slots = self.arch.slots();
        let offsets = self.arch.slot_offsets();
        let mut leaves = Vec::with_capacity(2 * slots.len());
        let mut blocks = Vec::with_capacity(slots.len());
        for (s, &(i, o)) in slots.iter().enumerate() {
            let base = offsets[s];
            let w = Array2::from_shape_vec((o, i), self.data[base..base + o * i].to_vec()).unwrap();
            let b = Array2::from_shape_vec((1, o), self.data[base + o * i..base + o * (i + 1)].to_vec())
                .unwrap();
            let (w, b) = if trainable {
                let (w, b) = (g.param(w), g.param(b));
                leaves.push(w);
                leaves.push(b);
                (w, b)
            } else {
                (g.constant(w), g.constant(b))
            };
            blocks.push((w, b));
        }
        (blocks, leaves)
    }

    /// Runs the network on a jet using weight nodes from [`Self::nodes`].
    pub fn apply(&self, g: &mut Graph, blocks: &[(Tid, Tid)], input: &Jet, second: bool) -> Jet {
        let map = self.arch.slot_map();
        let mut h = input.clone();
        for (l, &s) in map.iter().enumerate() {
            let (w, b) = blocks[s];
            let z = g.affine_jet(&h, w, b);
            h = if l < map.len() - 1 {
                match self.arch.activations[l] {
                    Activation::Tanh => g.tanh_jet(&z, second),
                    Activation::Relu => g.relu_jet(&z),
                    Activation::Identity => z,
                }
            } else {
                z
            };
        }
        h
    }

    /// Builds the network on a batched graph. Returns the output jet and the
    /// parameter leaves in flat-layout order (empty unless `trainable`).
    pub fn build(&self, g: &mut Graph, input: &Jet, trainable: bool, second: bool) -> (Jet, Vec<Tid>) {
        let (blocks, leaves) = self.nodes(g, trainable);
        (self.apply(g, &blocks, input, second), leaves)
    }
}

/// Forward pass with weights supplied as a flat slice in the layout of
/// [`DnnParams`], for any scalar type.
pub fn dnn_forward_generic<S: Real>(arch: &DnnArch, weights: &[S], x: &[S]) -> Vec<S> {
    let slots = arch.slots();
    let offsets = arch.slot_offsets();
    let map = arch.slot_map();
    let mut h: Vec<S> = x.to_vec();
    for (l, &s) in map.iter().enumerate() {
        let (n_in, n_out) = slots[s];
        let base = offsets[s];
        let mut next = Vec::with_capacity(n_out);
        for r in 0..n_out {
            let row = &weights[base + r * n_in..base + (r + 1) * n_in];
            let mut acc = h[0] * row[0];
            for c in 1..n_in {
                acc = acc + h[c] * row[c];
            }
            acc = acc + weights[base + n_out * n_in + r];
            next.push(acc);
        }
        if l < map.len() - 1 {
            let act = arch.activations[l];
            next = next.into_iter().map(|v| act.apply(v)).collect();
        }
        h = next;
    }
    h
}

/// Single affine layer `n_in → n_out`, flat as `W` row-major then `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub n_in: usize,
    pub n_out: usize,
    pub data: Vec<f64>,
}

impl LinearParams {
    pub fn init<R: Rng>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let mut data = Vec::with_capacity(linear_param_count(n_in, n_out));
        init_uniform(rng, n_in, linear_param_count(n_in, n_out), &mut data);
        Self { n_in, n_out, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn nodes(&self, g: &mut Graph, trainable: bool) -> (Tid, Tid, Vec<Tid>) {
        let (i, o) = (self.n_in, self.n_out);
        let w = Array2::from_shape_vec((o, i), self.data[..o * i].to_vec()).unwrap();
        let b = Array2::from_shape_vec((1, o), self.data[o * i..].to_vec()).unwrap();
        if trainable {
            let (w, b) = (g.param(w), g.param(b));
            (w, b, vec![w, b])
        } else {
            (g.constant(w), g.constant(b), vec![])
        }
    }

    pub fn build(&self, g: &mut Graph, input: &Jet, trainable: bool) -> (Jet, Vec<Tid>) {
        let (w, b, leaves) = self.nodes(g, trainable);
        (g.affine_jet(input, w, b), leaves)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        linear_forward_generic(self.n_in, self.n_out, &self.data, x)
    }
}

pub fn linear_forward_generic<S: Real>(n_in: usize, n_out: usize, weights: &[S], x: &[S]) -> Vec<S> {
    (0..n_out)
        .map(|r| {
            let mut acc = x[0] * weights[r * n_in];
            for c in 1..n_in {
                acc = acc + x[c] * weights[r * n_in + c];
            }
            acc + weights[n_out * n_in + r]
        })
        .collect()
}

/// Flattens per-leaf gradients returned by [`Graph::backward`] into the
/// parameter layout.
pub fn flatten_grads(grads: &[Array2<f64>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grads.iter().map(|g| g.len()).sum());
    for g in grads {
        out.extend(g.iter().copied());
    }
    out
}
