//! Quadrature for the fractional Laplacian of a test function.
//!
//! With `y = rθ` and the integrand symmetrised over `±θ`, the gradient
//! compensator drops out and
//!
//! ```text
//! (−Δ)^{α/2}φ(x) = −C_{d,α} ∫_{half sphere} ∫_0^∞ [φ(x+rθ) + φ(x−rθ) − 2φ(x)] r^{−1−α} dr dθ.
//! ```
//!
//! On `r < 1` the second-order Taylor term `r²θᵀHθ` is subtracted and
//! integrated analytically; on `r ≥ 1` the `−2φ(x)` part is integrated
//! analytically and the rest by composite Gauss–Legendre up to a far cutoff.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::testfn::TestFunction;
use super::OracleError;
use crate::quadrature::GaussLegendre;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FracLapOptions {
    /// far cutoff `R`; `None` picks one from the decay of `φ`
    pub cutoff: Option<f64>,
    /// largest acceptable tail bound beyond the cutoff
    pub tolerance: f64,
    /// midpoint angles on the half circle (d = 2)
    pub angles: usize,
}

impl Default for FracLapOptions {
    fn default() -> Self {
        Self { cutoff: None, tolerance: 1e-10, angles: 64 }
    }
}

/// `C_{d,α} = α 2^{α−1} Γ((d+α)/2) / (π^{d/2} Γ(1−α/2))`.
pub fn stable_constant(d: usize, alpha: f64) -> f64 {
    let d = d as f64;
    alpha * 2f64.powf(alpha - 1.0) * libm::tgamma(0.5 * (d + alpha)) / (PI.powf(0.5 * d) * libm::tgamma(1.0 - 0.5 * alpha))
}

fn gl() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

fn gl_angles() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(24))
}

/// `(−Δ)^{α/2}φ(x)`, the positive operator (multiplier `|ξ|^α`).
///
/// The generator of `σJ` is `−|σ|^α` times this value.
pub fn frac_laplacian(phi: &TestFunction, x: &[f64], alpha: f64, opts: &FracLapOptions) -> Result<f64, OracleError> {
    let d = x.len();
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(OracleError::DomainViolation(format!("alpha must be in (0,2), got {alpha}")));
    }
    if d == 0 || d > 3 || phi.dim() != d {
        return Err(OracleError::Unsupported(format!("fractional Laplacian in dimension {d}")));
    }
    let reach = phi.reach(x).max(1.0) + 1.0;
    let cutoff = opts.cutoff.unwrap_or(reach);
    if !(cutoff >= 1.0) {
        return Err(OracleError::DomainViolation(format!("cutoff must be at least 1, got {cutoff}")));
    }
    let (sphere, half_dirs) = directions(d, opts.angles);
    let half = 0.5 * sphere;
    // |φ(x ± rθ)| ≤ M beyond R, so the dropped tail is at most 2M|half|R^{−α}/α
    let tail = stable_constant(d, alpha) * 2.0 * half * phi.sup_outside(x, cutoff) * cutoff.powf(-alpha) / alpha;
    if opts.cutoff.is_some() && tail > opts.tolerance {
        return Err(OracleError::CutoffTooTight { cutoff, bound: tail, tolerance: opts.tolerance });
    }

    let f0 = phi.value(x);
    let hess = phi.hessian(x);
    let trace: f64 = (0..d).map(|i| hess[i * d + i]).sum();
    let ls = phi.length_scale();
    let inner_w = (0.5 * ls).min(0.25);
    let outer_w = (0.5 * ls).min(1.0);
    let mut y = vec![0.0; d];
    let mut sym = |theta: &[f64], r: f64| {
        for i in 0..d {
            y[i] = x[i] + r * theta[i];
        }
        let a = phi.value(&y);
        for i in 0..d {
            y[i] = x[i] - r * theta[i];
        }
        a + phi.value(&y)
    };

    let mut integral = 0.0;
    for (theta, w) in &half_dirs {
        let quad: f64 = (0..d).map(|i| (0..d).map(|j| theta[i] * hess[i * d + j] * theta[j]).sum::<f64>()).sum();
        let mut inner = |r: f64| (sym(theta, r) - 2.0 * f0 - r * r * quad) * r.powf(-1.0 - alpha);
        // Near 0 the remainder is c₄r⁴ + O(r⁶). Quadrature there would
        // amplify the cancellation error by r^{−1−α}; integrate c₄r^{3−α}
        // exactly instead, reading c₄ off at r₀ where cancellation is mild.
        let r0 = 1e-3;
        let c4 = inner(r0) * r0.powf(alpha - 3.0);
        let mut s = c4 * r0.powf(4.0 - alpha) / (4.0 - alpha);
        for (a, b) in [(r0, 1e-2), (1e-2, 0.1)] {
            s += gl().integrate(a, b, &mut inner);
        }
        s += gl().integrate_composite(0.1, 1.0, inner_w, &mut inner);
        s += gl().integrate_composite(1.0, cutoff, outer_w, |r| sym(theta, r) * r.powf(-1.0 - alpha));
        integral += w * s;
    }
    integral += half * trace / (d as f64 * (2.0 - alpha));
    integral -= 2.0 * f0 * half / alpha;
    Ok(-stable_constant(d, alpha) * integral)
}

/// Surface measure of the unit sphere and a weighted set of directions
/// covering half of it.
fn directions(d: usize, angles: usize) -> (f64, Vec<(Vec<f64>, f64)>) {
    match d {
        1 => (2.0, vec![(vec![1.0], 1.0)]),
        2 => {
            let m = angles.max(4);
            let w = PI / m as f64;
            let dirs = (0..m)
                .map(|k| {
                    let t = (k as f64 + 0.5) * w;
                    (vec![t.cos(), t.sin()], w)
                })
                .collect();
            (2.0 * PI, dirs)
        }
        _ => {
            // Gauss–Legendre in cos θ times trapezoid in azimuth over the
            // whole sphere; halving the weights gives the half-sphere integral
            // of a symmetrised integrand.
            let rule = gl_angles();
            let m = 2 * angles.max(4);
            let wa = 2.0 * PI / m as f64;
            let mut dirs = Vec::with_capacity(rule.nodes.len() * m);
            for (c, wc) in rule.nodes.iter().zip(&rule.weights) {
                let s = (1.0 - c * c).sqrt();
                for k in 0..m {
                    let a = k as f64 * wa;
                    dirs.push((vec![s * a.cos(), s * a.sin(), *c], 0.5 * wc * wa));
                }
            }
            (4.0 * PI, dirs)
        }
    }
}
