//! Stable samplers, process specifications and Euler skeletons.
//!
//! Normalisation: every stable sampler here draws `S` with
//! `E[exp(i u·S)] = exp(−|u|^α)`, so the documented constant `c₀` is 1 and
//! the generator of `σ J` is `−|σ|^α (−Δ)^{α/2}` with Fourier symbol
//! `|σ|^α |ξ|^α`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::paths::{CadlagPath, Jump, PolyFlow};
use crate::poly::Poly;

/// The constant `c₀` in `E[exp(iuS)] = exp(−c₀|u|^α)`.
pub const STABLE_C0: f64 = 1.0;

/// Stable increments larger than this many `σ h^{1/α}` are marked as jumps.
pub const JUMP_THRESHOLD: f64 = 6.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevyError {
    #[error("step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("horizon must be non-negative, got {0}")]
    InvalidHorizon(f64),
    #[error("invalid process spec: {0}")]
    InvalidSpec(String),
}

/// Seed plus stream id; one stream per trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

/// Symmetric α-stable variate by the Chambers–Mallows–Stuck transform.
pub fn sample_symmetric_stable_1d<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    let w: f64 = rng.sample(Exp1);
    if alpha == 1.0 {
        return v.tan();
    }
    let c = v.cos();
    (alpha * v).sin() / c.powf(1.0 / alpha) * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Positive β-stable variate with `E[exp(−sA)] = exp(−s^β)`, `β ∈ (0,1)`
/// (Kanter's representation).
pub fn sample_positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u = PI * rng.random::<f64>();
    let e: f64 = rng.sample(Exp1);
    if u == 0.0 {
        return 0.0;
    }
    (beta * u).sin() / u.sin().powf(1.0 / beta) * (((1.0 - beta) * u).sin() / e).powf((1.0 - beta) / beta)
}

/// Isotropic α-stable vector `√(2A)·Z` with `A` positive (α/2)-stable and
/// `Z` standard Gaussian.
pub fn sample_isotropic_stable<R: Rng + ?Sized>(alpha: f64, d: usize, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; d];
    fill_isotropic_stable(alpha, rng, &mut out);
    out
}

pub fn fill_isotropic_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R, out: &mut [f64]) {
    let a = sample_positive_stable(alpha / 2.0, rng);
    let s = (2.0 * a).sqrt();
    for o in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *o = s * z;
    }
}

/// Drift field `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Drift {
    Zero,
    Constant { value: Vec<f64> },
    /// `b(x) = matrix · x + offset`
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    /// `b(x) = (1, 2x₁)`
    Example15,
}

/// Driving noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Noise {
    None,
    /// `ε W_t`
    Brownian { epsilon: f64 },
    /// `σ J_t` with `J` isotropic α-stable
    Stable { alpha: f64, sigma: f64 },
}

/// `dX = b(X) dt + noise` in `dim` dimensions. With `clock`, the state gains
/// a leading time coordinate that moves at unit speed with no noise, which
/// turns a space-time problem into a stationary one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub drift: Drift,
    pub noise: Noise,
    pub dim: usize,
    #[serde(default)]
    pub clock: bool,
}

/// Noise after removing zero-intensity cases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum ActiveNoise {
    None,
    Brownian(f64),
    Stable { alpha: f64, sigma: f64 },
}

impl ProcessSpec {
    pub fn new(drift: Drift, noise: Noise, dim: usize) -> Self {
        Self { drift, noise, dim, clock: false }
    }

    /// Uniform motion `X_t = x + t` in one dimension.
    pub fn uniform_motion() -> Self {
        Self::new(Drift::Constant { value: vec![1.0] }, Noise::None, 1)
    }

    /// `X_t = x + t + ε W_t`.
    pub fn drifted_brownian(epsilon: f64) -> Self {
        Self::new(Drift::Constant { value: vec![1.0] }, Noise::Brownian { epsilon }, 1)
    }

    pub fn stable(alpha: f64, sigma: f64, dim: usize) -> Self {
        Self::new(Drift::Zero, Noise::Stable { alpha, sigma }, dim)
    }

    pub fn example15() -> Self {
        Self::new(Drift::Example15, Noise::None, 2)
    }

    /// Same dynamics with a leading clock coordinate.
    pub fn with_clock(&self) -> Self {
        Self { clock: true, ..self.clone() }
    }

    /// Dimension of the simulated state (including the clock).
    pub fn state_dim(&self) -> usize {
        self.dim + self.clock as usize
    }

    pub fn validate(&self) -> Result<(), LevyError> {
        let bad = |m: String| Err(LevyError::InvalidSpec(m));
        if self.dim == 0 {
            return bad("dimension must be positive".into());
        }
        match &self.drift {
            Drift::Constant { value } if value.len() != self.dim => {
                return bad(format!("constant drift has {} components, dim is {}", value.len(), self.dim))
            }
            Drift::Affine { matrix, offset }
                if offset.len() != self.dim || matrix.len() != self.dim || matrix.iter().any(|r| r.len() != self.dim) =>
            {
                return bad("affine drift needs a dim×dim matrix and a dim offset".into())
            }
            Drift::Example15 if self.dim != 2 => return bad("example15 drift is two-dimensional".into()),
            _ => {}
        }
        match self.noise {
            Noise::Brownian { epsilon } if !(epsilon >= 0.0) => bad("epsilon must be >= 0".into()),
            Noise::Stable { alpha, .. } if !(alpha > 0.0 && alpha < 2.0) => bad(format!("alpha must be in (0,2), got {alpha}")),
            Noise::Stable { sigma, .. } if !(sigma >= 0.0) => bad("sigma must be >= 0".into()),
            _ => Ok(()),
        }
    }

    pub(crate) fn active_noise(&self) -> ActiveNoise {
        match self.noise {
            Noise::Brownian { epsilon } if epsilon > 0.0 => ActiveNoise::Brownian(epsilon),
            Noise::Stable { alpha, sigma } if sigma > 0.0 => ActiveNoise::Stable { alpha, sigma },
            _ => ActiveNoise::None,
        }
    }

    pub fn has_noise(&self) -> bool {
        self.active_noise() != ActiveNoise::None
    }

    pub fn drift_is_zero(&self) -> bool {
        match &self.drift {
            Drift::Zero => true,
            Drift::Constant { value } => value.iter().all(|v| *v == 0.0),
            Drift::Affine { matrix, offset } => offset.iter().chain(matrix.iter().flatten()).all(|v| *v == 0.0),
            Drift::Example15 => false,
        }
    }

    /// Spatial drift at the spatial point `x`.
    #[inline]
    pub fn drift_at(&self, x: &[f64], out: &mut [f64]) {
        match &self.drift {
            Drift::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            Drift::Constant { value } => out.copy_from_slice(value),
            Drift::Affine { matrix, offset } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = offset[i] + matrix[i].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            Drift::Example15 => {
                out[0] = 1.0;
                out[1] = 2.0 * x[0];
            }
        }
    }

    /// Drift of the full state (clock included).
    #[inline]
    pub(crate) fn state_drift(&self, y: &[f64], out: &mut [f64]) {
        if self.clock {
            out[0] = 1.0;
            self.drift_at(&y[1..], &mut out[1..]);
        } else {
            self.drift_at(y, out);
        }
    }

    /// Closed-form trajectory from `y0` when there is no noise and the drift
    /// is integrable in polynomials.
    pub fn analytic_flow(&self, y0: &[f64]) -> Option<PolyFlow> {
        if self.has_noise() {
            return None;
        }
        let off = self.clock as usize;
        let x = &y0[off..];
        let mut coords = Vec::with_capacity(self.state_dim());
        if self.clock {
            coords.push(Poly::linear(y0[0], 1.0));
        }
        match &self.drift {
            Drift::Zero => coords.extend(x.iter().map(|&v| Poly::constant(v))),
            Drift::Constant { value } => coords.extend(x.iter().zip(value).map(|(&v, &b)| Poly::linear(v, b))),
            Drift::Example15 => {
                coords.push(Poly::linear(x[0], 1.0));
                coords.push(Poly::new(&[x[1], 2.0 * x[0], 1.0]));
            }
            Drift::Affine { .. } if self.drift_is_zero() => coords.extend(x.iter().map(|&v| Poly::constant(v))),
            Drift::Affine { .. } => return None,
        }
        Some(PolyFlow::new(coords))
    }

    /// One Euler step of length `dt` from `y`.
    ///
    /// Writes the pre-jump end of the continuous part to `left` and the new
    /// state to `next`; returns whether the step ends with a marked jump.
    /// `drift` is scratch space of the state dimension.
    #[inline]
    pub(crate) fn step<R: Rng + ?Sized>(
        &self,
        y: &[f64],
        dt: f64,
        rng: &mut R,
        drift: &mut [f64],
        left: &mut [f64],
        next: &mut [f64],
    ) -> bool {
        self.state_drift(y, drift);
        let off = self.clock as usize;
        match self.active_noise() {
            ActiveNoise::None => {
                // Heun
                for i in 0..y.len() {
                    left[i] = y[i] + dt * drift[i];
                }
                self.state_drift(left, next);
                for i in 0..y.len() {
                    next[i] = y[i] + 0.5 * dt * (drift[i] + next[i]);
                    left[i] = next[i];
                }
                false
            }
            ActiveNoise::Brownian(eps) => {
                let s = eps * dt.sqrt();
                for i in 0..y.len() {
                    let z: f64 = if i < off { 0.0 } else { rng.sample(StandardNormal) };
                    next[i] = y[i] + dt * drift[i] + s * z;
                    left[i] = next[i];
                }
                false
            }
            ActiveNoise::Stable { alpha, sigma } => {
                let scale = sigma * dt.powf(1.0 / alpha);
                let xs = &mut next[off..];
                if xs.len() == 1 {
                    xs[0] = sample_symmetric_stable_1d(alpha, rng);
                } else {
                    fill_isotropic_stable(alpha, rng, xs);
                }
                let norm2: f64 = xs.iter().map(|v| v * v).sum();
                let jump = norm2 > JUMP_THRESHOLD * JUMP_THRESHOLD;
                for i in 0..y.len() {
                    left[i] = y[i] + dt * drift[i];
                    let inc = if i < off { 0.0 } else { scale * next[i] };
                    next[i] = left[i] + inc;
                    if !jump {
                        left[i] = next[i];
                    }
                }
                jump
            }
        }
    }
}

/// Step sizes covering `[0, horizon]`: full steps of `h`, the last one
/// shortened to land on the horizon.
pub(crate) fn step_count(h: f64, horizon: f64) -> u64 {
    if horizon <= 0.0 {
        return 0;
    }
    let k = (horizon / h).ceil();
    // avoid a spurious extra step from rounding of horizon / h
    if (k - 1.0) * h >= horizon * (1.0 - 1e-12) { (k - 1.0).max(1.0) as u64 } else { k as u64 }
}

/// Euler skeleton (or the closed-form flow) on `[0, horizon]`.
pub fn simulate_path<R: Rng + ?Sized>(
    spec: &ProcessSpec,
    x0: &[f64],
    h: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<CadlagPath, LevyError> {
    if !(h > 0.0) {
        return Err(LevyError::InvalidStep(h));
    }
    if !(horizon >= 0.0) {
        return Err(LevyError::InvalidHorizon(horizon));
    }
    spec.validate()?;
    let d = spec.state_dim();
    if x0.len() != d {
        return Err(LevyError::InvalidSpec(format!("start point has dimension {}, state is {d}", x0.len())));
    }
    if let Some(flow) = spec.analytic_flow(x0) {
        return Ok(CadlagPath::flow(flow));
    }
    let k = step_count(h, horizon);
    let mut times = Vec::with_capacity(k as usize + 1);
    let mut points = Vec::with_capacity(d * (k as usize + 1));
    let mut jumps = Vec::new();
    times.push(0.0);
    points.extend_from_slice(x0);
    let (mut drift, mut left, mut next) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut y = x0.to_vec();
    for j in 1..=k {
        let t_prev = (j - 1) as f64 * h;
        let t = if j == k { horizon } else { j as f64 * h };
        if spec.step(&y, t - t_prev, rng, &mut drift, &mut left, &mut next) {
            jumps.push(Jump { knot: j as usize, left: left.clone() });
        }
        times.push(t);
        points.extend_from_slice(&next);
        std::mem::swap(&mut y, &mut next);
    }
    Ok(CadlagPath::linear_from_flat(d, times, points, jumps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_median() {
        let mut rng = RngStream::new(7, 0).rng();
        let mut xs: Vec<f64> = (0..100_000).map(|_| sample_symmetric_stable_1d(1.0, &mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        assert!(xs[50_000].abs() < 0.02);
    }

    #[test]
    fn positive_stable_laplace_transform() {
        let mut rng = RngStream::new(3, 1).rng();
        let n = 200_000;
        let m: f64 = (0..n).map(|_| (-sample_positive_stable(0.75, &mut rng)).exp()).sum::<f64>() / n as f64;
        assert!((m - (-1.0f64).exp()).abs() < 3e-3, "{m}");
    }

    #[test]
    fn streams_are_reproducible() {
        let a: Vec<f64> = {
            let mut r = RngStream::new(11, 5).rng();
            (0..10).map(|_| sample_symmetric_stable_1d(1.5, &mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = RngStream::new(11, 5).rng();
            (0..10).map(|_| sample_symmetric_stable_1d(1.5, &mut r)).collect()
        };
        let c: Vec<f64> = {
            let mut r = RngStream::new(11, 6).rng();
            (0..10).map(|_| sample_symmetric_stable_1d(1.5, &mut r)).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn pure_drift_is_a_flow() {
        let mut rng = RngStream::new(0, 0).rng();
        let p = simulate_path(&ProcessSpec::uniform_motion(), &[0.0], 0.1, 1.0, &mut rng).unwrap();
        assert!(p.analytic_flow().is_some());
        assert_eq!(p.evaluate(0.5), vec![0.5]);
        let p = simulate_path(&ProcessSpec::example15(), &[0.5, 0.5], 0.1, 1.0, &mut rng).unwrap();
        for k in 0..=10 {
            let x = p.evaluate(k as f64 * 0.1);
            assert!((x[1] - (0.5 - 0.25 + x[0] * x[0])).abs() < 1e-12);
        }
        assert!(matches!(
            simulate_path(&ProcessSpec::uniform_motion(), &[0.0], 0.0, 1.0, &mut rng),
            Err(LevyError::InvalidStep(_))
        ));
    }

    #[test]
    fn step_count_lands_on_horizon() {
        assert_eq!(step_count(0.1, 1.0), 10);
        assert_eq!(step_count(0.3, 1.0), 4);
        assert_eq!(step_count(1e-4, 0.7), 7000);
        assert_eq!(step_count(0.1, 0.0), 0);
    }
}
