use std::sync::Arc;

use crate::autodiff::{Tape, Var};
use crate::networks::DatumJet;
use ndarray::Array2;

/// A scalar function of all point coordinates that can be evaluated plainly
/// or on a [`Tape`] (for derivatives).
pub trait ScalarField: Send + Sync {
    fn value(&self, p: &[f64]) -> f64;
    fn on_tape<'t>(&self, p: &[Var<'t>]) -> Var<'t>;
}

pub type FieldRef = Arc<dyn ScalarField>;

/// Implements [`ScalarField`] for a unit struct from a function generic
/// over [`crate::autodiff::Real`].
#[macro_export]
macro_rules! scalar_field {
    ($(#[$m:meta])* $vis:vis $name:ident => $f:path) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, Default)]
        $vis struct $name;
        impl $crate::losses::ScalarField for $name {
            fn value(&self, p: &[f64]) -> f64 {
                $f(p)
            }
            fn on_tape<'t>(&self, p: &[$crate::autodiff::Var<'t>]) -> $crate::autodiff::Var<'t> {
                $f(p)
            }
        }
    };
}

#[derive(Clone, Copy, Debug)]
pub struct ConstField(pub f64);

impl ScalarField for ConstField {
    fn value(&self, _: &[f64]) -> f64 {
        self.0
    }
    fn on_tape<'t>(&self, p: &[Var<'t>]) -> Var<'t> {
        p[0].constant(self.0)
    }
}

/// Value, first and pure second derivatives along `dirs` at `p`. With
/// `clock` set, coordinate 0 is frozen at that value, so derivatives along
/// it vanish.
pub fn field_jet(field: &dyn ScalarField, p: &[f64], dirs: &[usize], second: bool, clock: Option<f64>) -> (f64, Vec<f64>, Vec<f64>) {
    let tape = Tape::new();
    let xs: Vec<Var> = p.iter().map(|&v| tape.input(v)).collect();
    let mut args = xs.clone();
    if let Some(c) = clock {
        args[0] = tape.constant(c);
    }
    let y = field.on_tape(&args);
    let wrt: Vec<Var> = dirs.iter().map(|&k| xs[k]).collect();
    let grads = tape.grad(y, &wrt).expect("field derivatives");
    let d1 = grads.iter().map(|g| g.value()).collect();
    let d2 = if second {
        grads
            .iter()
            .zip(&wrt)
            .map(|(g, &x)| tape.grad(*g, &[x]).expect("second derivative")[0].value())
            .collect()
    } else {
        Vec::new()
    };
    (y.value(), d1, d2)
}

/// [`field_jet`] over the rows of `pts`.
pub fn batch_jet(field: &dyn ScalarField, pts: &Array2<f64>, dirs: &[usize], second: bool, clock: Option<f64>) -> DatumJet {
    let n = pts.nrows();
    let mut out = DatumJet {
        val: Vec::with_capacity(n),
        d1: vec![Vec::with_capacity(n); dirs.len()],
        d2: if second { vec![Vec::with_capacity(n); dirs.len()] } else { Vec::new() },
    };
    if dirs.is_empty() {
        for r in 0..n {
            let mut p = pts.row(r).to_vec();
            if let Some(c) = clock {
                p[0] = c;
            }
            out.val.push(field.value(&p));
        }
        return out;
    }
    for r in 0..n {
        let (v, d1, d2) = field_jet(field, &pts.row(r).to_vec(), dirs, second, clock);
        out.val.push(v);
        for k in 0..dirs.len() {
            out.d1[k].push(d1[k]);
            if second {
                out.d2[k].push(d2[k]);
            }
        }
    }
    out
}

pub fn batch_values(field: &dyn ScalarField, pts: &Array2<f64>) -> Vec<f64> {
    (0..pts.nrows()).map(|r| field.value(&pts.row(r).to_vec())).collect()
}
