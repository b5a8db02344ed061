//! Named scalar fields used for running costs and boundary data.

use serde::{Deserialize, Serialize};

/// A scalar function on ℝ^d chosen from a small closed family.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Field {
    #[default]
    Zero,
    Constant { value: f64 },
    /// `amplitude · exp(−|x − center|)`
    ExpDecay { center: Vec<f64>, amplitude: f64 },
    /// `amplitude · exp(−|x − center|² / (2 width²))`
    Gaussian { center: Vec<f64>, width: f64, amplitude: f64 },
    /// `exp(rate · x₀) · inner(x)`, the time-weighted cost of the
    /// space-time change of variables.
    TimeWeighted { rate: f64, inner: Box<Field> },
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

impl Field {
    pub fn constant(value: f64) -> Self {
        Field::Constant { value }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Field::Zero => 0.0,
            Field::Constant { value } => *value,
            Field::ExpDecay { center, amplitude } => amplitude * (-dist2(x, center).sqrt()).exp(),
            Field::Gaussian { center, width, amplitude } => {
                amplitude * (-dist2(x, center) / (2.0 * width * width)).exp()
            }
            Field::TimeWeighted { rate, inner } => (rate * x[0]).exp() * inner.eval(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Field::Zero => true,
            Field::Constant { value } => *value == 0.0,
            Field::ExpDecay { amplitude, .. } | Field::Gaussian { amplitude, .. } => *amplitude == 0.0,
            Field::TimeWeighted { inner, .. } => inner.is_zero(),
        }
    }

    /// An upper bound for `|f|` on the box `[lo, hi]`.
    pub fn sup_abs_on(&self, lo: &[f64], hi: &[f64]) -> f64 {
        match self {
            Field::Zero => 0.0,
            Field::Constant { value } => value.abs(),
            Field::ExpDecay { amplitude, .. } | Field::Gaussian { amplitude, .. } => amplitude.abs(),
            Field::TimeWeighted { rate, inner } => {
                let t = if *rate >= 0.0 { hi[0] } else { lo[0] };
                (rate * t).exp() * inner.sup_abs_on(lo, hi)
            }
        }
    }

    /// An upper bound for `|f|` on all of ℝ^d, if finite.
    pub fn sup_abs(&self) -> f64 {
        match self {
            Field::TimeWeighted { rate, inner } if *rate != 0.0 && !inner.is_zero() => f64::INFINITY,
            Field::TimeWeighted { inner, .. } => inner.sup_abs(),
            other => other.sup_abs_on(&[], &[]),
        }
    }
}
