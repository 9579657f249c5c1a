//! Scalar reverse-mode tape.
//!
//! Every recorded operation becomes a [`Node`] appended to a [`Tape`]. The
//! reverse sweep in [`Tape::grad`] does not accumulate plain numbers: it emits
//! the adjoint expressions as new nodes on the same tape. The returned
//! derivatives are therefore ordinary [`Var`]s and can be differentiated
//! again, which is how second derivatives (and `∇_θ` of expressions containing
//! `∇_x u`) are obtained.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Result, WanError};

/// Index of a node on a [`Tape`]. Ids increase strictly in recording order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// Operation tag of a recorded node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    Leaf,
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Tanh,
    Relu,
    Exp,
    Sin,
    Cos,
    Log,
    Sqrt,
    Abs,
    /// `x^p` with a constant real exponent.
    Pow(f64),
    /// Heaviside step with `step(0) = 0`; derivative zero.
    Step,
    /// `sign(x)` with `sign(0) = 0`; derivative zero.
    Sign,
}

impl Op {
    /// Names accepted by [`Tape::apply`].
    pub const SUPPORTED: [&'static str; 11] = [
        "add", "mul", "tanh", "relu", "exp", "sin", "cos", "log", "sqrt", "abs", "power",
    ];
}

#[derive(Clone, Debug)]
pub struct Node {
    pub value: f64,
    pub op: Op,
    pub parents: [Option<NodeId>; 2],
}

/// Append-only record of scalar operations plus a registry of named leaves.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    leaves: RefCell<BTreeMap<String, NodeId>>,
}

/// Handle to a node on a tape. Cheap to copy.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: NodeId,
}

/// Non-finite values observed on a tape.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub non_finite: usize,
    pub first_non_finite: Option<NodeId>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registers a named leaf. Re-registering a name returns a fresh leaf and
    /// rebinds the name.
    pub fn leaf(&self, name: &str, value: f64) -> Var<'_> {
        let v = self.push(value, Op::Leaf, [None, None]);
        self.leaves.borrow_mut().insert(name.to_string(), v.id);
        v
    }

    /// Unnamed leaf, e.g. a parameter addressed by position.
    pub fn input(&self, value: f64) -> Var<'_> {
        self.push(value, Op::Leaf, [None, None])
    }

    pub fn constant(&self, value: f64) -> Var<'_> {
        self.push(value, Op::Const, [None, None])
    }

    pub fn leaf_id(&self, name: &str) -> Option<NodeId> {
        self.leaves.borrow().get(name).copied()
    }

    pub fn var(&self, id: NodeId) -> Result<Var<'_>> {
        if id.0 < self.len() {
            Ok(Var { tape: self, id })
        } else {
            Err(WanError::Autodiff(format!("node {} is not on this tape", id.0)))
        }
    }

    pub fn node(&self, id: NodeId) -> Node {
        self.nodes.borrow()[id.0].clone()
    }

    pub fn nodes(&self) -> Vec<Node> {
        self.nodes.borrow().clone()
    }

    pub fn diagnostics(&self) -> Diagnostics {
        let nodes = self.nodes.borrow();
        let mut d = Diagnostics::default();
        for (i, n) in nodes.iter().enumerate() {
            if !n.value.is_finite() {
                d.non_finite += 1;
                d.first_non_finite.get_or_insert(NodeId(i));
            }
        }
        d
    }

    /// Recomputes a node's value from its parents' stored values.
    pub fn recompute(&self, id: NodeId) -> f64 {
        let nodes = self.nodes.borrow();
        let n = &nodes[id.0];
        let a = n.parents[0].map(|p| nodes[p.0].value).unwrap_or(0.0);
        let b = n.parents[1].map(|p| nodes[p.0].value).unwrap_or(0.0);
        match n.op {
            Op::Leaf | Op::Const => n.value,
            op => eval_op(op, a, b),
        }
    }

    /// Applies an operation by name. Unknown names are rejected.
    pub fn apply<'t>(&'t self, name: &str, args: &[Var<'t>]) -> Result<Var<'t>> {
        let unary = |f: fn(Var<'t>) -> Var<'t>| -> Result<Var<'t>> {
            match args {
                [a] => Ok(f(*a)),
                _ => Err(WanError::Autodiff(format!("`{name}` takes one argument"))),
            }
        };
        match name {
            "add" | "mul" => match args {
                [a, b] => Ok(if name == "add" { *a + *b } else { *a * *b }),
                _ => Err(WanError::Autodiff(format!("`{name}` takes two arguments"))),
            },
            "power" => match args {
                [a, b] if self.node(b.id).op == Op::Const => Ok(a.powf(b.value())),
                _ => Err(WanError::Autodiff(
                    "`power` takes a base and a constant exponent".into(),
                )),
            },
            "tanh" => unary(Var::tanh),
            "relu" => unary(Var::relu),
            "exp" => unary(Var::exp),
            "sin" => unary(Var::sin),
            "cos" => unary(Var::cos),
            "log" => unary(Var::ln),
            "sqrt" => unary(Var::sqrt),
            "abs" => unary(Var::abs),
            other => Err(WanError::Autodiff(format!("unsupported operation `{other}`"))),
        }
    }

    fn push(&self, value: f64, op: Op, parents: [Option<NodeId>; 2]) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let id = NodeId(nodes.len());
        nodes.push(Node { value, op, parents });
        Var { tape: self, id }
    }

    fn unary(&self, op: Op, a: NodeId) -> Var<'_> {
        let av = self.nodes.borrow()[a.0].value;
        self.push(eval_op(op, av, 0.0), op, [Some(a), None])
    }

    fn binary(&self, op: Op, a: NodeId, b: NodeId) -> Var<'_> {
        let (av, bv) = {
            let nodes = self.nodes.borrow();
            (nodes[a.0].value, nodes[b.0].value)
        };
        self.push(eval_op(op, av, bv), op, [Some(a), Some(b)])
    }

    /// Reverse sweep from `root`, emitting `∂root/∂leaf` for each requested
    /// leaf as nodes on this tape. Leaves the root does not depend on get a
    /// constant zero.
    pub fn grad<'t>(&'t self, root: Var<'t>, wrt: &[Var<'t>]) -> Result<Vec<Var<'t>>> {
        if !std::ptr::eq(root.tape, self) {
            return Err(WanError::Autodiff("root belongs to a different tape".into()));
        }
        for w in wrt {
            if !std::ptr::eq(w.tape, self) {
                return Err(WanError::Autodiff("leaf belongs to a different tape".into()));
            }
            if self.node(w.id).op != Op::Leaf {
                return Err(WanError::Autodiff(format!("node {} is not a leaf", w.id.0)));
            }
        }
        let end = root.id.0;
        let mut adj: Vec<Option<Var<'t>>> = vec![None; end + 1];
        adj[end] = Some(self.constant(1.0));
        for i in (0..=end).rev() {
            let Some(g) = adj[i] else { continue };
            let node = self.node(NodeId(i));
            let (pa, pb) = (node.parents[0], node.parents[1]);
            let a = pa.map(|p| Var { tape: self, id: p });
            let b = pb.map(|p| Var { tape: self, id: p });
            let out = Var { tape: self, id: NodeId(i) };
            let mut acc = |p: Option<Var<'t>>, contrib: Var<'t>| {
                if let Some(p) = p {
                    let slot = &mut adj[p.id.0];
                    *slot = Some(match *slot {
                        Some(prev) => prev + contrib,
                        None => contrib,
                    });
                }
            };
            match node.op {
                Op::Leaf | Op::Const | Op::Step | Op::Sign => {}
                Op::Add => {
                    acc(a, g);
                    acc(b, g);
                }
                Op::Sub => {
                    acc(a, g);
                    acc(b, -g);
                }
                Op::Mul => {
                    let (a, b) = (a.unwrap(), b.unwrap());
                    acc(Some(a), g * b);
                    acc(Some(b), g * a);
                }
                Op::Div => {
                    let (a, b) = (a.unwrap(), b.unwrap());
                    acc(Some(a), g / b);
                    acc(Some(b), -(g * out / b));
                }
                Op::Neg => acc(a, -g),
                Op::Tanh => acc(a, g * (1.0 - out * out)),
                Op::Relu => acc(a, g * a.unwrap().step()),
                Op::Exp => acc(a, g * out),
                Op::Sin => acc(a, g * a.unwrap().cos()),
                Op::Cos => acc(a, -(g * a.unwrap().sin())),
                Op::Log => acc(a, g / a.unwrap()),
                Op::Sqrt => acc(a, g * 0.5 / out),
                Op::Abs => acc(a, g * a.unwrap().sign()),
                Op::Pow(p) => acc(a, g * p * a.unwrap().powf(p - 1.0)),
            }
        }
        Ok(wrt
            .iter()
            .map(|w| adj.get(w.id.0).copied().flatten().unwrap_or_else(|| self.constant(0.0)))
            .collect())
    }

    /// Gradient by leaf name.
    pub fn grad_named<'t>(
        &'t self,
        root: Var<'t>,
        names: &[&str],
    ) -> Result<BTreeMap<String, Var<'t>>> {
        let vars = names
            .iter()
            .map(|n| {
                self.leaf_id(n)
                    .map(|id| Var { tape: self, id })
                    .ok_or_else(|| WanError::Autodiff(format!("leaf `{n}` is not on this tape")))
            })
            .collect::<Result<Vec<_>>>()?;
        let g = self.grad(root, &vars)?;
        Ok(names.iter().map(|n| n.to_string()).zip(g).collect())
    }
}

fn eval_op(op: Op, a: f64, b: f64) -> f64 {
    match op {
        Op::Leaf | Op::Const => unreachable!("leaves carry their own value"),
        Op::Add => a + b,
        Op::Sub => a - b,
        Op::Mul => a * b,
        Op::Div => a / b,
        Op::Neg => -a,
        Op::Tanh => a.tanh(),
        Op::Relu => {
            // NaN propagates
            if a > 0.0 || a.is_nan() {
                a
            } else {
                0.0
            }
        }
        Op::Exp => a.exp(),
        Op::Sin => a.sin(),
        Op::Cos => a.cos(),
        Op::Log => a.ln(),
        Op::Sqrt => a.sqrt(),
        Op::Abs => a.abs(),
        Op::Pow(p) => a.powf(p),
        Op::Step => {
            if a > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Op::Sign => {
            if a > 0.0 {
                1.0
            } else if a < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
    }
}

/// Records `builder` over named leaves and returns the root. Fails on empty
/// leaf sets.
pub fn record<'t, F>(tape: &'t Tape, leaves: &[(&str, f64)], builder: F) -> Result<Var<'t>>
where
    F: FnOnce(&[Var<'t>]) -> Result<Var<'t>>,
{
    if leaves.is_empty() {
        return Err(WanError::Autodiff("at least one leaf is required".into()));
    }
    let vars: Vec<Var<'t>> = leaves.iter().map(|(n, v)| tape.leaf(n, *v)).collect();
    builder(&vars)
}

/// `∇_x f(x)` as tape nodes, differentiable again.
pub fn input_gradient<'t, F>(tape: &'t Tape, x: &[f64], f: F) -> Result<(Var<'t>, Vec<Var<'t>>)>
where
    F: FnOnce(&[Var<'t>]) -> Var<'t>,
{
    let xs: Vec<Var<'t>> = x.iter().map(|v| tape.input(*v)).collect();
    let y = f(&xs);
    let g = tape.grad(y, &xs)?;
    Ok((y, g))
}

impl<'t> Var<'t> {
    pub fn value(&self) -> f64 {
        self.tape.nodes.borrow()[self.id.0].value
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn constant(&self, c: f64) -> Var<'t> {
        self.tape.constant(c)
    }

    pub fn tanh(self) -> Self {
        self.tape.unary(Op::Tanh, self.id)
    }
    pub fn relu(self) -> Self {
        self.tape.unary(Op::Relu, self.id)
    }
    pub fn exp(self) -> Self {
        self.tape.unary(Op::Exp, self.id)
    }
    pub fn sin(self) -> Self {
        self.tape.unary(Op::Sin, self.id)
    }
    pub fn cos(self) -> Self {
        self.tape.unary(Op::Cos, self.id)
    }
    pub fn ln(self) -> Self {
        self.tape.unary(Op::Log, self.id)
    }
    pub fn sqrt(self) -> Self {
        self.tape.unary(Op::Sqrt, self.id)
    }
    pub fn abs(self) -> Self {
        self.tape.unary(Op::Abs, self.id)
    }
    pub fn powf(self, p: f64) -> Self {
        self.tape.unary(Op::Pow(p), self.id)
    }
    pub fn step(self) -> Self {
        self.tape.unary(Op::Step, self.id)
    }
    pub fn sign(self) -> Self {
        self.tape.unary(Op::Sign, self.id)
    }
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var(#{} = {})", self.id.0, self.value())
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $op:expr) => {
        impl<'t> $tr for Var<'t> {
            type Output = Var<'t>;
            fn $m(self, rhs: Var<'t>) -> Var<'t> {
                self.tape.binary($op, self.id, rhs.id)
            }
        }
        impl<'t> $tr<f64> for Var<'t> {
            type Output = Var<'t>;
            fn $m(self, rhs: f64) -> Var<'t> {
                let c = self.tape.constant(rhs);
                self.tape.binary($op, self.id, c.id)
            }
        }
        impl<'t> $tr<Var<'t>> for f64 {
            type Output = Var<'t>;
            fn $m(self, rhs: Var<'t>) -> Var<'t> {
                let c = rhs.tape.constant(self);
                rhs.tape.binary($op, c.id, rhs.id)
            }
        }
    };
}

binop!(Add, add, Op::Add);
binop!(Sub, sub, Op::Sub);
binop!(Mul, mul, Op::Mul);
binop!(Div, div, Op::Div);

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.tape.unary(Op::Neg, self.id)
    }
}
