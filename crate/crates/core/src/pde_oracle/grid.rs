//! Values on a rectilinear lattice with multilinear interpolation.

use serde::{Deserialize, Serialize};

use super::OracleError;

/// `n` equispaced nodes from `lo` to `hi` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        assert!(n >= 2 && hi > lo, "axis needs n >= 2 and hi > lo");
        Self { lo, hi, n }
    }

    /// Axis with spacing as close as possible to `step`.
    pub fn with_step(lo: f64, hi: f64, step: f64) -> Self {
        let n = ((hi - lo) / step).round().max(1.0) as usize + 1;
        Self::new(lo, hi, n)
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n { self.hi } else { self.lo + i as f64 * self.spacing() }
    }

    /// Index of the node equal to `v` up to a relative `1e-9` of the spacing.
    pub fn index_of(&self, v: f64) -> Option<usize> {
        let s = (v - self.lo) / self.spacing();
        let i = s.round();
        ((s - i).abs() < 1e-9 && i >= 0.0 && (i as usize) < self.n).then_some(i as usize)
    }
}

/// Carrier for candidate solutions: one value per lattice node, row-major
/// with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub axes: Vec<Axis>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(axes: Vec<Axis>, values: Vec<f64>) -> Result<Self, OracleError> {
        let count: usize = axes.iter().map(|a| a.n).product();
        if count != values.len() {
            return Err(OracleError::Grid(format!("{} values for {count} nodes", values.len())));
        }
        Ok(Self { axes, values })
    }

    pub fn from_fn(axes: Vec<Axis>, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let count: usize = axes.iter().map(|a| a.n).product();
        let mut values = Vec::with_capacity(count);
        let mut x = vec![0.0; axes.len()];
        for k in 0..count {
            Self::fill_node(&axes, k, &mut x);
            values.push(f(&x));
        }
        Self { axes, values }
    }

    /// Fallible [`from_fn`](Self::from_fn).
    pub fn try_from_fn<E>(axes: Vec<Axis>, mut f: impl FnMut(&[f64]) -> Result<f64, E>) -> Result<Self, E> {
        let count: usize = axes.iter().map(|a| a.n).product();
        let mut values = Vec::with_capacity(count);
        let mut x = vec![0.0; axes.len()];
        for k in 0..count {
            Self::fill_node(&axes, k, &mut x);
            values.push(f(&x)?);
        }
        Ok(Self { axes, values })
    }

    fn fill_node(axes: &[Axis], mut k: usize, x: &mut [f64]) {
        for j in (0..axes.len()).rev() {
            x[j] = axes[j].node(k % axes[j].n);
            k /= axes[j].n;
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, k: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        Self::fill_node(&self.axes, k, &mut x);
        x
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.axes.iter().map(Axis::spacing).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.axes).all(|(v, a)| *v >= a.lo && *v <= a.hi)
    }

    /// Multilinear interpolation; `None` outside the lattice box.
    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        if x.len() != self.dim() || !self.contains(x) {
            return None;
        }
        let d = self.dim();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for j in 0..d {
            let a = &self.axes[j];
            let s = (x[j] - a.lo) / a.spacing();
            let i = (s.floor() as usize).min(a.n - 2);
            base[j] = i;
            frac[j] = (s - i as f64).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut k = 0usize;
            for j in 0..d {
                let bit = (corner >> (d - 1 - j)) & 1;
                w *= if bit == 1 { frac[j] } else { 1.0 - frac[j] };
                k = k * self.axes[j].n + base[j] + bit;
            }
            if w != 0.0 {
                acc += w * self.values[k];
            }
        }
        Some(acc)
    }
}
