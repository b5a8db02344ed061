//! Low-degree real polynomials used for closed-form boundary crossings.

use serde::{Deserialize, Serialize};

/// Highest degree representable. Quadratic flows composed with a sphere
/// constraint give degree four.
pub const MAX_DEGREE: usize = 4;

/// Polynomial `c[0] + c[1] t + ... ` with degree at most [`MAX_DEGREE`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    coeffs: [f64; MAX_DEGREE + 1],
    len: usize,
}

impl Default for Poly {
    fn default() -> Self {
        Self::zero()
    }
}

impl Poly {
    pub const fn zero() -> Self {
        Self { coeffs: [0.0; MAX_DEGREE + 1], len: 0 }
    }

    pub const fn constant(c: f64) -> Self {
        let mut coeffs = [0.0; MAX_DEGREE + 1];
        coeffs[0] = c;
        Self { coeffs, len: 1 }
    }

    pub const fn linear(c0: f64, c1: f64) -> Self {
        let mut coeffs = [0.0; MAX_DEGREE + 1];
        coeffs[0] = c0;
        coeffs[1] = c1;
        Self { coeffs, len: 2 }
    }

    /// Panics if more than `MAX_DEGREE + 1` coefficients are given.
    pub fn new(c: &[f64]) -> Self {
        assert!(c.len() <= MAX_DEGREE + 1, "polynomial degree exceeds {MAX_DEGREE}");
        let mut coeffs = [0.0; MAX_DEGREE + 1];
        coeffs[..c.len()].copy_from_slice(c);
        Self { coeffs, len: c.len() }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs[..self.len]
    }

    /// Degree after dropping exact-zero leading coefficients; `None` for the
    /// zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        (0..self.len).rev().find(|&i| self.coeffs[i] != 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs[..self.len].iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.len <= 1 {
            return Poly::zero();
        }
        let mut out = Poly { coeffs: [0.0; MAX_DEGREE + 1], len: self.len - 1 };
        for i in 1..self.len {
            out.coeffs[i - 1] = self.coeffs[i] * i as f64;
        }
        out
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let len = self.len.max(other.len);
        let mut out = Poly { coeffs: [0.0; MAX_DEGREE + 1], len };
        for i in 0..len {
            out.coeffs[i] = self.coeffs[i] + other.coeffs[i];
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = *self;
        for c in out.coeffs[..out.len].iter_mut() {
            *c *= s;
        }
        out
    }

    pub fn add_constant(&self, s: f64) -> Poly {
        let mut out = *self;
        if out.len == 0 {
            out.len = 1;
        }
        out.coeffs[0] += s;
        out
    }

    /// Panics if the product degree exceeds [`MAX_DEGREE`].
    pub fn mul(&self, other: &Poly) -> Poly {
        if self.len == 0 || other.len == 0 {
            return Poly::zero();
        }
        let len = self.len + other.len - 1;
        assert!(len <= MAX_DEGREE + 1, "polynomial product degree exceeds {MAX_DEGREE}");
        let mut out = Poly { coeffs: [0.0; MAX_DEGREE + 1], len };
        for i in 0..self.len {
            for j in 0..other.len {
                out.coeffs[i + j] += self.coeffs[i] * other.coeffs[j];
            }
        }
        out
    }

    /// `p(t + h)` as a polynomial in `t`.
    pub fn taylor_shift(&self, h: f64) -> Poly {
        let mut out = *self;
        let n = self.len;
        // repeated synthetic division
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                out.coeffs[j] += h * out.coeffs[j + 1];
            }
        }
        out
    }

    /// Real roots in the open interval `(lo, hi)`, ascending, with multiple
    /// roots reported once. `hi` may be `+∞`. The zero polynomial has no
    /// isolated roots and returns an empty list.
    pub fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match self.degree() {
            None | Some(0) => {}
            Some(1) => out.push(-self.coeffs[0] / self.coeffs[1]),
            Some(2) => quadratic_roots(self.coeffs[0], self.coeffs[1], self.coeffs[2], &mut out),
            Some(deg) => {
                let hi_f = if hi.is_finite() { hi } else { lo.max(0.0) + self.cauchy_bound(deg) + 1.0 };
                let lo_f = if lo.is_finite() { lo } else { -self.cauchy_bound(deg) - 1.0 };
                self.roots_by_monotone_pieces(lo_f, hi_f, &mut out);
            }
        }
        out.retain(|&r| r > lo && r < hi);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn cauchy_bound(&self, deg: usize) -> f64 {
        let lead = self.coeffs[deg].abs();
        1.0 + self.coeffs[..deg].iter().map(|c| c.abs() / lead).fold(0.0, f64::max)
    }

    // Critical points split [lo, hi] into monotone pieces; bisect sign changes
    // and keep critical points that touch zero.
    fn roots_by_monotone_pieces(&self, lo: f64, hi: f64, out: &mut Vec<f64>) {
        let mut knots = vec![lo];
        knots.extend(self.derivative().roots_in(lo, hi));
        knots.push(hi);
        let scale = self.coeffs().iter().map(|c| c.abs()).fold(0.0, f64::max);
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (self.eval(a), self.eval(b));
            if fa == 0.0 {
                out.push(a);
            }
            if fa.signum() * fb.signum() < 0.0 {
                out.push(bisect(|t| self.eval(t), a, b, fa));
            }
        }
        let fh = self.eval(hi);
        if fh == 0.0 {
            out.push(hi);
        }
        // touching roots at interior critical points
        for &c in &knots[1..knots.len() - 1] {
            if self.eval(c).abs() <= 1e-14 * scale.max(1.0) {
                out.push(c);
            }
        }
    }
}

fn quadratic_roots(c: f64, b: f64, a: f64, out: &mut Vec<f64>) {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return;
    }
    if disc == 0.0 {
        out.push(-b / (2.0 * a));
        return;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        // b = 0 and c = 0
        out.push(0.0);
        return;
    }
    out.push(q / a);
    out.push(c / q);
}

/// Bisection on a bracketing interval; `fa` is `f(a)`.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
