//! Batched reverse-mode graph over dense matrices.
//!
//! Rows index sample points and columns index features, so one node holds a
//! whole batch. Derivatives with respect to the network *inputs* are carried
//! forward explicitly as extra nodes (see [`Jet`]), built from the same
//! differentiable operations; a single reverse sweep then yields `∇_θ` of
//! expressions that contain `∇_x u` or `Δu`. The scalar [`super::Tape`] is the
//! reference implementation; this graph trades generality for throughput.

use ndarray::{Array2, Axis};

/// Node handle on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tid(pub usize);

#[derive(Clone, Debug)]
enum GOp {
    Leaf,
    /// `x · wᵀ`
    MatMulT(Tid, Tid),
    Add(Tid, Tid),
    Sub(Tid, Tid),
    Mul(Tid, Tid),
    Div(Tid, Tid),
    Scale(Tid, f64),
    Offset(Tid),
    Tanh(Tid),
    Relu(Tid),
    Exp(Tid),
    Sin(Tid),
    Cos(Tid),
    Log(Tid),
    Sqrt(Tid),
    Abs(Tid),
    Powi(Tid, i32),
    Concat(Vec<Tid>),
    RowSum(Tid),
    Sum(Tid),
    Mean(Tid),
}

struct GNode {
    value: Array2<f64>,
    op: GOp,
    needs_grad: bool,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<GNode>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: Tid) -> &Array2<f64> {
        &self.nodes[id.0].value
    }

    pub fn scalar(&self, id: Tid) -> f64 {
        self.nodes[id.0].value[[0, 0]]
    }

    pub fn needs_grad(&self, id: Tid) -> bool {
        self.nodes[id.0].needs_grad
    }

    /// Differentiable leaf (a parameter block).
    pub fn param(&mut self, value: Array2<f64>) -> Tid {
        self.push(value, GOp::Leaf, true)
    }

    /// Leaf excluded from differentiation.
    pub fn constant(&mut self, value: Array2<f64>) -> Tid {
        self.push(value, GOp::Leaf, false)
    }

    pub fn filled(&mut self, rows: usize, cols: usize, c: f64) -> Tid {
        self.constant(Array2::from_elem((rows, cols), c))
    }

    /// Column vector leaf from a slice.
    pub fn column(&mut self, data: &[f64]) -> Tid {
        self.constant(Array2::from_shape_vec((data.len(), 1), data.to_vec()).unwrap())
    }

    fn push(&mut self, value: Array2<f64>, op: GOp, needs_grad: bool) -> Tid {
        self.nodes.push(GNode { value, op, needs_grad });
        Tid(self.nodes.len() - 1)
    }

    fn ng(&self, ids: &[Tid]) -> bool {
        ids.iter().any(|t| self.nodes[t.0].needs_grad)
    }

    pub fn matmul_t(&mut self, x: Tid, w: Tid) -> Tid {
        let v = self.value(x).dot(&self.value(w).t());
        let ng = self.ng(&[x, w]);
        self.push(v, GOp::MatMulT(x, w), ng)
    }

    fn broadcast_shape(&self, a: Tid, b: Tid) -> (usize, usize) {
        let (ra, ca) = self.value(a).dim();
        let (rb, cb) = self.value(b).dim();
        let r = ra.max(rb);
        let c = ca.max(cb);
        assert!(
            (ra == r || ra == 1) && (rb == r || rb == 1) && (ca == c || ca == 1) && (cb == c || cb == 1),
            "incompatible shapes {:?} and {:?}",
            (ra, ca),
            (rb, cb)
        );
        (r, c)
    }

    fn zip_with(&mut self, a: Tid, b: Tid, op: GOp, f: impl Fn(f64, f64) -> f64) -> Tid {
        let sh = self.broadcast_shape(a, b);
        let av = self.value(a).broadcast(sh).unwrap();
        let bv = self.value(b).broadcast(sh).unwrap();
        let mut out = Array2::zeros(sh);
        ndarray::Zip::from(&mut out)
            .and(&av)
            .and(&bv)
            .for_each(|o, &x, &y| *o = f(x, y));
        let ng = self.ng(&[a, b]);
        self.push(out, op, ng)
    }

    pub fn add(&mut self, a: Tid, b: Tid) -> Tid {
        self.zip_with(a, b, GOp::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Tid, b: Tid) -> Tid {
        self.zip_with(a, b, GOp::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Tid, b: Tid) -> Tid {
        self.zip_with(a, b, GOp::Mul(a, b), |x, y| x * y)
    }

    pub fn div(&mut self, a: Tid, b: Tid) -> Tid {
        self.zip_with(a, b, GOp::Div(a, b), |x, y| x / y)
    }

    fn map(&mut self, a: Tid, op: GOp, f: impl Fn(f64) -> f64) -> Tid {
        let v = self.value(a).mapv(f);
        let ng = self.ng(&[a]);
        self.push(v, op, ng)
    }

    pub fn scale(&mut self, a: Tid, c: f64) -> Tid {
        self.map(a, GOp::Scale(a, c), |x| c * x)
    }

    pub fn offset(&mut self, a: Tid, c: f64) -> Tid {
        self.map(a, GOp::Offset(a), |x| x + c)
    }

    pub fn neg(&mut self, a: Tid) -> Tid {
        self.scale(a, -1.0)
    }

    pub fn tanh(&mut self, a: Tid) -> Tid {
        self.map(a, GOp::Tanh(a), f64::tanh)
    }

    pub fn relu(&mut self, a: Tid) -> Tid {
        self.map(a, GOp::Relu(a), |x| if x > 0.0 { x } else { 0.0 })
    }

    /// Heaviside step of `a`'s current value, as a constant (`step(0) = 0`).
    pub fn step_of(&mut self, a: Tid) -> Tid {
        let v = self.value(a).mapv(|x| if x > 0.0 { 1.0 } else { 0.0 });
        self.constant(v)
    }

    pub fn exp(&mut self, a: Tid) -> Tid {
        self.map(a, GOp::Exp(a), f64::exp)
    }

    pub fn sin(&mut self, a: Tid) -> Tid {
        self.map(a, GOp::Sin(a), f64::sin)
    }

    pub fn cos(&mut self, a: Tid) -> Tid {
        self.map(a, GOp::Cos(a), f64::cos)
    }

    pub fn ln(&mut self, a: Tid) -> Tid {
        self.map(a, GOp::Log(a), f64::ln)
    }

    pub fn sqrt(&mut self, a: Tid) -> Tid {
        self.map(a, GOp::Sqrt(a), f64::sqrt)
    }

    pub fn abs(&mut self, a: Tid) -> Tid {
        self.map(a, GOp::Abs(a), f64::abs)
    }

    pub fn powi(&mut self, a: Tid, p: i32) -> Tid {
        self.map(a, GOp::Powi(a, p), |x| x.powi(p))
    }

    pub fn square(&mut self, a: Tid) -> Tid {
        self.powi(a, 2)
    }

    /// Horizontal concatenation.
    pub fn concat(&mut self, parts: &[Tid]) -> Tid {
        let views: Vec<_> = parts.iter().map(|p| self.value(*p).view()).collect();
        let v = ndarray::concatenate(Axis(1), &views).expect("row counts must agree");
        let ng = self.ng(parts);
        self.push(v, GOp::Concat(parts.to_vec()), ng)
    }

    /// Sum over columns, giving one value per row.
    pub fn row_sum(&mut self, a: Tid) -> Tid {
        let v = self.value(a).sum_axis(Axis(1)).insert_axis(Axis(1));
        let ng = self.ng(&[a]);
        self.push(v, GOp::RowSum(a), ng)
    }

    pub fn sum(&mut self, a: Tid) -> Tid {
        let s = ordered_sum(self.value(a));
        let ng = self.ng(&[a]);
        self.push(Array2::from_elem((1, 1), s), GOp::Sum(a), ng)
    }

    pub fn mean(&mut self, a: Tid) -> Tid {
        let v = self.value(a);
        let s = ordered_sum(v) / v.len() as f64;
        let ng = self.ng(&[a]);
        self.push(Array2::from_elem((1, 1), s), GOp::Mean(a), ng)
    }

    /// Reverse sweep from a `1×1` root. Returns adjoints of `wrt` (zeros for
    /// leaves the root does not depend on).
    pub fn backward(&self, root: Tid, wrt: &[Tid]) -> Vec<Array2<f64>> {
        assert_eq!(self.value(root).dim(), (1, 1), "backward needs a scalar root");
        let mut adj: Vec<Option<Array2<f64>>> = (0..=root.0).map(|_| None).collect();
        let keep: std::collections::HashSet<usize> = wrt.iter().map(|t| t.0).collect();
        if self.nodes[root.0].needs_grad {
            adj[root.0] = Some(Array2::ones((1, 1)));
        }
        for i in (0..=root.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                adj[i] = None;
                continue;
            }
            let g = match (&node.op, keep.contains(&i)) {
                (GOp::Leaf, _) => continue,
                (_, true) => adj[i].clone(),
                (_, false) => adj[i].take(),
            };
            let Some(g) = g else { continue };
            self.propagate(i, &g, &mut adj);
        }
        wrt.iter()
            .map(|t| {
                adj.get(t.0)
                    .cloned()
                    .flatten()
                    .unwrap_or_else(|| Array2::zeros(self.value(*t).dim()))
            })
            .collect()
    }

    fn accumulate(&self, adj: &mut [Option<Array2<f64>>], target: Tid, contrib: Array2<f64>) {
        if !self.nodes[target.0].needs_grad {
            return;
        }
        let shape = self.value(target).dim();
        let contrib = unbroadcast(contrib, shape);
        match &mut adj[target.0] {
            Some(prev) => *prev += &contrib,
            slot => *slot = Some(contrib),
        }
    }

    fn propagate(&self, i: usize, g: &Array2<f64>, adj: &mut [Option<Array2<f64>>]) {
        let out = &self.nodes[i].value;
        match &self.nodes[i].op {
            GOp::Leaf => {}
            GOp::MatMulT(x, w) => {
                if self.needs_grad(*x) {
                    self.accumulate(adj, *x, g.dot(self.value(*w)));
                }
                if self.needs_grad(*w) {
                    self.accumulate(adj, *w, g.t().dot(self.value(*x)));
                }
            }
            GOp::Add(a, b) => {
                self.accumulate(adj, *a, g.clone());
                self.accumulate(adj, *b, g.clone());
            }
            GOp::Sub(a, b) => {
                self.accumulate(adj, *a, g.clone());
                self.accumulate(adj, *b, -g);
            }
            GOp::Mul(a, b) => {
                if self.needs_grad(*a) {
                    self.accumulate(adj, *a, g * self.value(*b));
                }
                if self.needs_grad(*b) {
                    self.accumulate(adj, *b, g * self.value(*a));
                }
            }
            GOp::Div(a, b) => {
                let bv = self.value(*b);
                if self.needs_grad(*a) {
                    self.accumulate(adj, *a, g / bv);
                }
                if self.needs_grad(*b) {
                    let sh = out.dim();
                    let bb = bv.broadcast(sh).unwrap();
                    let mut c = Array2::zeros(sh);
                    ndarray::Zip::from(&mut c)
                        .and(g)
                        .and(out)
                        .and(&bb)
                        .for_each(|c, &g, &o, &b| *c = -g * o / b);
                    self.accumulate(adj, *b, c);
                }
            }
            GOp::Scale(a, c) => self.accumulate(adj, *a, g * *c),
            GOp::Offset(a) => self.accumulate(adj, *a, g.clone()),
            GOp::Tanh(a) => {
                let mut c = g.clone();
                c.zip_mut_with(out, |c, &t| *c *= 1.0 - t * t);
                self.accumulate(adj, *a, c);
            }
            GOp::Relu(a) => {
                let mut c = g.clone();
                c.zip_mut_with(self.value(*a), |c, &x| {
                    if x <= 0.0 {
                        *c = 0.0
                    }
                });
                self.accumulate(adj, *a, c);
            }
            GOp::Exp(a) => self.accumulate(adj, *a, g * out),
            GOp::Sin(a) => {
                let d = self.value(*a).mapv(f64::cos);
                self.accumulate(adj, *a, g * &d);
            }
            GOp::Cos(a) => {
                let d = self.value(*a).mapv(|x| -x.sin());
                self.accumulate(adj, *a, g * &d);
            }
            GOp::Log(a) => self.accumulate(adj, *a, g / self.value(*a)),
            GOp::Sqrt(a) => {
                let d = out.mapv(|s| if s > 0.0 { 0.5 / s } else { 0.0 });
                self.accumulate(adj, *a, g * &d);
            }
            GOp::Abs(a) => {
                let d = self.value(*a).mapv(|x| {
                    if x > 0.0 {
                        1.0
                    } else if x < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                });
                self.accumulate(adj, *a, g * &d);
            }
            GOp::Powi(a, p) => {
                let p = *p;
                let d = self.value(*a).mapv(|x| p as f64 * x.powi(p - 1));
                self.accumulate(adj, *a, g * &d);
            }
            GOp::Concat(parts) => {
                let mut col = 0;
                for p in parts {
                    let w = self.value(*p).ncols();
                    if self.needs_grad(*p) {
                        let piece = g.slice(ndarray::s![.., col..col + w]).to_owned();
                        self.accumulate(adj, *p, piece);
                    }
                    col += w;
                }
            }
            GOp::RowSum(a) => {
                let sh = self.value(*a).dim();
                self.accumulate(adj, *a, g.broadcast(sh).unwrap().to_owned());
            }
            GOp::Sum(a) => {
                let sh = self.value(*a).dim();
                self.accumulate(adj, *a, Array2::from_elem(sh, g[[0, 0]]));
            }
            GOp::Mean(a) => {
                let sh = self.value(*a).dim();
                let n = (sh.0 * sh.1) as f64;
                self.accumulate(adj, *a, Array2::from_elem(sh, g[[0, 0]] / n));
            }
        }
    }
}

/// Row-major left-to-right summation.
pub fn ordered_sum(a: &Array2<f64>) -> f64 {
    let mut s = 0.0;
    for v in a.iter() {
        s += *v;
    }
    s
}

fn unbroadcast(g: Array2<f64>, shape: (usize, usize)) -> Array2<f64> {
    let mut g = g;
    if shape.0 == 1 && g.nrows() != 1 {
        g = g.sum_axis(Axis(0)).insert_axis(Axis(0));
    }
    if shape.1 == 1 && g.ncols() != 1 {
        g = g.sum_axis(Axis(1)).insert_axis(Axis(1));
    }
    g
}

/// A batched field together with the first (and optionally pure second)
/// derivatives with respect to selected input coordinates. `None` marks a
/// derivative that is structurally zero.
#[derive(Clone, Debug)]
pub struct Jet {
    pub val: Tid,
    pub d1: Vec<Option<Tid>>,
    pub d2: Vec<Option<Tid>>,
}

impl Jet {
    pub fn constant(val: Tid, dirs: usize) -> Self {
        Self { val, d1: vec![None; dirs], d2: vec![None; dirs] }
    }

    pub fn dirs(&self) -> usize {
        self.d1.len()
    }
}

impl Graph {
    pub fn opt_add(&mut self, a: Option<Tid>, b: Option<Tid>) -> Option<Tid> {
        match (a, b) {
            (Some(a), Some(b)) => Some(self.add(a, b)),
            (x, None) | (None, x) => x,
        }
    }

    /// `x · wᵀ + b` applied to a jet: tangents are mapped linearly.
    pub fn affine_jet(&mut self, x: &Jet, w: Tid, b: Tid) -> Jet {
        let z = self.matmul_t(x.val, w);
        let val = self.add(z, b);
        let d1 = x.d1.iter().map(|d| d.map(|d| self.matmul_t(d, w))).collect();
        let d2 = x.d2.iter().map(|d| d.map(|d| self.matmul_t(d, w))).collect();
        Jet { val, d1, d2 }
    }

    pub fn linear_jet(&mut self, x: &Jet, w: Tid) -> Jet {
        let val = self.matmul_t(x.val, w);
        let d1 = x.d1.iter().map(|d| d.map(|d| self.matmul_t(d, w))).collect();
        let d2 = x.d2.iter().map(|d| d.map(|d| self.matmul_t(d, w))).collect();
        Jet { val, d1, d2 }
    }

    /// `tanh` on a jet. With `second`, pure second derivatives follow
    /// `σ''(z)·ż² + σ'(z)·z̈` where `σ' = 1 − t²` and `σ'' = −2t(1 − t²)`.
    pub fn tanh_jet(&mut self, z: &Jet, second: bool) -> Jet {
        let t = self.tanh(z.val);
        let n = z.dirs();
        if z.d1.iter().chain(z.d2.iter()).all(Option::is_none) {
            return Jet::constant(t, n);
        }
        let tt = self.square(t);
        let one = self.filled(1, 1, 1.0);
        let s1 = self.sub(one, tt);
        let s2 = if second {
            let ts = self.mul(t, s1);
            Some(self.scale(ts, -2.0))
        } else {
            None
        };
        let mut d1 = vec![None; n];
        let mut d2 = vec![None; n];
        for k in 0..n {
            d1[k] = z.d1[k].map(|dz| self.mul(s1, dz));
            let curv = match (s2, z.d1[k]) {
                (Some(s2), Some(dz)) => {
                    let sq = self.square(dz);
                    Some(self.mul(s2, sq))
                }
                _ => None,
            };
            let lin = z.d2[k].map(|ddz| self.mul(s1, ddz));
            d2[k] = self.opt_add(curv, lin);
        }
        Jet { val: t, d1, d2 }
    }

    /// ReLU on a jet; `σ' = step(z)` is a constant and `σ'' = 0` a.e.
    pub fn relu_jet(&mut self, z: &Jet) -> Jet {
        let val = self.relu(z.val);
        let n = z.dirs();
        if z.d1.iter().chain(z.d2.iter()).all(Option::is_none) {
            return Jet::constant(val, n);
        }
        let s1 = self.step_of(z.val);
        let d1 = z.d1.iter().map(|d| d.map(|d| self.mul(s1, d))).collect();
        let d2 = z.d2.iter().map(|d| d.map(|d| self.mul(s1, d))).collect();
        Jet { val, d1, d2 }
    }

    pub fn concat_jets(&mut self, parts: &[&Jet]) -> Jet {
        let n = parts[0].dirs();
        let rows = self.value(parts[0].val).nrows();
        let val = self.concat(&parts.iter().map(|p| p.val).collect::<Vec<_>>());
        let gather = |sel: &dyn Fn(&Jet) -> Option<Tid>, g: &mut Graph| -> Option<Tid> {
            if parts.iter().all(|p| sel(p).is_none()) {
                return None;
            }
            let cols: Vec<Tid> = parts
                .iter()
                .map(|p| match sel(p) {
                    Some(t) => t,
                    None => {
                        let w = g.value(p.val).ncols();
                        g.filled(rows, w, 0.0)
                    }
                })
                .collect();
            Some(g.concat(&cols))
        };
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n);
        for k in 0..n {
            d1.push(gather(&|p: &Jet| p.d1[k], self));
            d2.push(gather(&|p: &Jet| p.d2[k], self));
        }
        Jet { val, d1, d2 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn fd_check(build: impl Fn(&mut Graph, Tid) -> Tid, x0: Array2<f64>) {
        let mut g = Graph::new();
        let x = g.param(x0.clone());
        let y = build(&mut g, x);
        let grad = g.backward(y, &[x]).remove(0);
        let h = 1e-6;
        for idx in 0..x0.len() {
            let (r, c) = (idx / x0.ncols(), idx % x0.ncols());
            let eval = |delta: f64| {
                let mut xp = x0.clone();
                xp[[r, c]] += delta;
                let mut g = Graph::new();
                let x = g.param(xp);
                let y = build(&mut g, x);
                g.scalar(y)
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let err = (fd - grad[[r, c]]).abs() / fd.abs().max(1.0);
            assert!(err < 1e-7, "entry ({r},{c}): fd {fd} vs {}", grad[[r, c]]);
        }
    }

    #[test]
    fn matmul_and_bias_gradients() {
        let w0 = array![[0.3, -0.2], [0.5, 0.1], [-0.7, 0.4]];
        fd_check(
            move |g, x| {
                let w = g.constant(w0.clone());
                let b = g.constant(array![[0.1, 0.2, 0.3]]);
                let z = g.matmul_t(x, w);
                let z = g.add(z, b);
                let t = g.tanh(z);
                let s = g.square(t);
                g.mean(s)
            },
            array![[0.2, -0.4], [1.0, 0.3]],
        );
    }

    #[test]
    fn elementwise_ops_gradients() {
        fd_check(
            |g, x| {
                let a = g.exp(x);
                let b = g.sin(x);
                let c = g.mul(a, b);
                let d = g.cos(c);
                let e = g.offset(d, 2.0);
                let f = g.ln(e);
                let s = g.sqrt(e);
                let q = g.div(f, s);
                let r = g.row_sum(q);
                let r = g.powi(r, 3);
                let ab = g.abs(r);
                g.sum(ab)
            },
            array![[0.2, -0.4, 0.9], [1.1, 0.3, -0.8]],
        );
    }

    #[test]
    fn concat_and_broadcast() {
        fd_check(
            |g, x| {
                let col = g.row_sum(x);
                let both = g.concat(&[x, col]);
                let m = g.mul(both, col);
                let r = g.relu(m);
                g.mean(r)
            },
            array![[0.2, -0.4], [1.1, 0.3]],
        );
    }
}
