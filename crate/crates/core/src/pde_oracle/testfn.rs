//! Smooth, decaying test functions with closed-form derivatives.

use serde::{Deserialize, Serialize};

/// A smooth function on ℝ^D that vanishes at infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum TestFunction {
    /// `P(z)·exp(−Σ zᵢ²/(2wᵢ²))` with `z = y − center` and
    /// `P(z) = amplitude + tilt·z + ½ Σ curvatureᵢ zᵢ²`.
    ///
    /// At the center the value is `amplitude`, the gradient is `tilt` and the
    /// Hessian is diagonal with entries `curvatureᵢ − amplitude/wᵢ²`.
    GaussianBump { center: Vec<f64>, widths: Vec<f64>, amplitude: f64, tilt: Vec<f64>, curvature: Vec<f64> },
    /// `amplitude·exp(β − β/(1 − |z|²/radius²))` inside the ball, 0 outside,
    /// with `β = sharpness`.
    CompactBump { center: Vec<f64>, radius: f64, amplitude: f64, sharpness: f64 },
    Sum { terms: Vec<TestFunction> },
}

impl TestFunction {
    /// Bump with prescribed value, gradient and diagonal Hessian at `center`.
    pub fn touching(center: Vec<f64>, widths: Vec<f64>, value: f64, gradient: Vec<f64>, hessian_diag: &[f64]) -> Self {
        let curvature = hessian_diag.iter().zip(&widths).map(|(h, w)| h + value / (w * w)).collect();
        TestFunction::GaussianBump { center, widths, amplitude: value, tilt: gradient, curvature }
    }

    pub fn gaussian(center: Vec<f64>, width: f64, amplitude: f64) -> Self {
        let d = center.len();
        TestFunction::GaussianBump { center, widths: vec![width; d], amplitude, tilt: vec![0.0; d], curvature: vec![0.0; d] }
    }

    pub fn dim(&self) -> usize {
        match self {
            TestFunction::GaussianBump { center, .. } | TestFunction::CompactBump { center, .. } => center.len(),
            TestFunction::Sum { terms } => terms.first().map_or(0, TestFunction::dim),
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            TestFunction::GaussianBump { center, widths, amplitude, tilt, curvature } => {
                let (mut p, mut q) = (*amplitude, 0.0);
                for i in 0..center.len() {
                    let z = y[i] - center[i];
                    p += z * (tilt[i] + 0.5 * curvature[i] * z);
                    q += z * z / (widths[i] * widths[i]);
                }
                p * (-0.5 * q).exp()
            }
            TestFunction::CompactBump { center, radius, amplitude, sharpness: b } => {
                let s = dist2(y, center) / (radius * radius);
                if s >= 1.0 {
                    0.0
                } else {
                    amplitude * (b - b / (1.0 - s)).exp()
                }
            }
            TestFunction::Sum { terms } => terms.iter().map(|t| t.value(y)).sum(),
        }
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; y.len()];
        let mut h = vec![0.0; y.len() * y.len()];
        self.derivatives(y, &mut g, &mut h);
        g
    }

    /// Row-major `D×D` Hessian.
    pub fn hessian(&self, y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; y.len()];
        let mut h = vec![0.0; y.len() * y.len()];
        self.derivatives(y, &mut g, &mut h);
        h
    }

    /// Adds the gradient and Hessian at `y` into `g` and `h`.
    fn derivatives(&self, y: &[f64], g: &mut [f64], h: &mut [f64]) {
        let d = y.len();
        match self {
            TestFunction::GaussianBump { center, widths, amplitude, tilt, curvature } => {
                let z: Vec<f64> = (0..d).map(|i| y[i] - center[i]).collect();
                let iw2: Vec<f64> = widths.iter().map(|w| 1.0 / (w * w)).collect();
                let mut p = *amplitude;
                let mut q = 0.0;
                for i in 0..d {
                    p += z[i] * (tilt[i] + 0.5 * curvature[i] * z[i]);
                    q += z[i] * z[i] * iw2[i];
                }
                let e = (-0.5 * q).exp();
                let dp: Vec<f64> = (0..d).map(|i| tilt[i] + curvature[i] * z[i]).collect();
                let dl: Vec<f64> = (0..d).map(|i| -z[i] * iw2[i]).collect();
                for i in 0..d {
                    g[i] += (dp[i] + p * dl[i]) * e;
                    for j in 0..d {
                        let mut v = dp[i] * dl[j] + dp[j] * dl[i] + p * dl[i] * dl[j];
                        if i == j {
                            v += curvature[i] - p * iw2[i];
                        }
                        h[i * d + j] += v * e;
                    }
                }
            }
            TestFunction::CompactBump { center, radius, amplitude, sharpness: b } => {
                let r2 = radius * radius;
                let s = dist2(y, center) / r2;
                if s >= 1.0 {
                    return;
                }
                let q = 1.0 - s;
                let f = (b - b / q).exp();
                let f1 = -b * f / (q * q);
                let f2 = b * b * f / (q * q * q * q) - 2.0 * b * f / (q * q * q);
                for i in 0..d {
                    let si = 2.0 * (y[i] - center[i]) / r2;
                    g[i] += amplitude * f1 * si;
                    for j in 0..d {
                        let sj = 2.0 * (y[j] - center[j]) / r2;
                        let mut v = f2 * si * sj;
                        if i == j {
                            v += f1 * 2.0 / r2;
                        }
                        h[i * d + j] += amplitude * v;
                    }
                }
            }
            TestFunction::Sum { terms } => terms.iter().for_each(|t| t.derivatives(y, g, h)),
        }
    }

    /// `c·φ`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            TestFunction::GaussianBump { center, widths, amplitude, tilt, curvature } => TestFunction::GaussianBump {
                center: center.clone(),
                widths: widths.clone(),
                amplitude: c * amplitude,
                tilt: tilt.iter().map(|v| c * v).collect(),
                curvature: curvature.iter().map(|v| c * v).collect(),
            },
            TestFunction::CompactBump { center, radius, amplitude, sharpness } => TestFunction::CompactBump {
                center: center.clone(),
                radius: *radius,
                amplitude: c * amplitude,
                sharpness: *sharpness,
            },
            TestFunction::Sum { terms } => TestFunction::Sum { terms: terms.iter().map(|t| t.scaled(c)).collect() },
        }
    }

    /// `y ↦ φ(y/s)`.
    pub fn dilated(&self, s: f64) -> Self {
        match self {
            TestFunction::GaussianBump { center, widths, amplitude, tilt, curvature } => TestFunction::GaussianBump {
                center: center.iter().map(|v| s * v).collect(),
                widths: widths.iter().map(|v| s * v).collect(),
                amplitude: *amplitude,
                tilt: tilt.iter().map(|v| v / s).collect(),
                curvature: curvature.iter().map(|v| v / (s * s)).collect(),
            },
            TestFunction::CompactBump { center, radius, amplitude, sharpness } => TestFunction::CompactBump {
                center: center.iter().map(|v| s * v).collect(),
                radius: s * radius,
                amplitude: *amplitude,
                sharpness: *sharpness,
            },
            TestFunction::Sum { terms } => TestFunction::Sum { terms: terms.iter().map(|t| t.dilated(s)).collect() },
        }
    }

    /// The function `x ↦ φ(t, x)` on the trailing coordinates.
    pub fn slice_first(&self, t: f64) -> Self {
        match self {
            TestFunction::GaussianBump { center, widths, amplitude, tilt, curvature } => {
                let z = t - center[0];
                let e = (-0.5 * z * z / (widths[0] * widths[0])).exp();
                TestFunction::GaussianBump {
                    center: center[1..].to_vec(),
                    widths: widths[1..].to_vec(),
                    amplitude: e * (amplitude + tilt[0] * z + 0.5 * curvature[0] * z * z),
                    tilt: tilt[1..].iter().map(|v| e * v).collect(),
                    curvature: curvature[1..].iter().map(|v| e * v).collect(),
                }
            }
            TestFunction::CompactBump { center, radius, amplitude, sharpness: b } => {
                let z = t - center[0];
                let r2 = radius * radius;
                let rho2 = r2 - z * z;
                if rho2 <= 0.0 {
                    return TestFunction::CompactBump { center: center[1..].to_vec(), radius: *radius, amplitude: 0.0, sharpness: *b };
                }
                // 1 − (z² + ρ²)/R² = (ρ′²/R²)(1 − ρ²/ρ′²): same family, sharper
                let b2 = b * r2 / rho2;
                TestFunction::CompactBump {
                    center: center[1..].to_vec(),
                    radius: rho2.sqrt(),
                    amplitude: amplitude * (b - b2).exp(),
                    sharpness: b2,
                }
            }
            TestFunction::Sum { terms } => TestFunction::Sum { terms: terms.iter().map(|f| f.slice_first(t)).collect() },
        }
    }

    /// Smallest length over which the function changes appreciably.
    pub fn length_scale(&self) -> f64 {
        match self {
            TestFunction::GaussianBump { widths, .. } => widths.iter().cloned().fold(f64::INFINITY, f64::min),
            TestFunction::CompactBump { radius, sharpness, .. } => radius / (4.0 * sharpness.max(1.0)),
            TestFunction::Sum { terms } => terms.iter().map(TestFunction::length_scale).fold(f64::INFINITY, f64::min),
        }
    }

    /// Distance from `x` beyond which the function is negligible.
    pub fn reach(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::GaussianBump { center, widths, .. } => {
                dist2(x, center).sqrt() + 12.0 * widths.iter().cloned().fold(0.0, f64::max)
            }
            TestFunction::CompactBump { center, radius, .. } => dist2(x, center).sqrt() + radius,
            TestFunction::Sum { terms } => terms.iter().map(|t| t.reach(x)).fold(0.0, f64::max),
        }
    }

    /// An upper bound for `|φ(y)|` over `|y − x| ≥ r`.
    pub fn sup_outside(&self, x: &[f64], r: f64) -> f64 {
        match self {
            TestFunction::GaussianBump { center, widths, amplitude, tilt, curvature } => {
                let rho0 = (r - dist2(x, center).sqrt()).max(0.0);
                let w = widths.iter().cloned().fold(0.0, f64::max);
                let t = tilt.iter().map(|v| v * v).sum::<f64>().sqrt();
                let k = curvature.iter().map(|v| v.abs()).fold(0.0, f64::max);
                let poly = |rho: f64| amplitude.abs() + t * rho + 0.5 * k * rho * rho;
                // poly(ρ)/ρ² decreases and ρ²e^{−ρ²/2w²} decreases past √2·w
                let knee = std::f64::consts::SQRT_2 * w;
                if rho0 >= knee {
                    poly(rho0) * (-0.5 * rho0 * rho0 / (w * w)).exp()
                } else {
                    poly(knee)
                }
            }
            TestFunction::CompactBump { center, radius, amplitude, .. } => {
                if r - dist2(x, center).sqrt() >= *radius {
                    0.0
                } else {
                    amplitude.abs()
                }
            }
            TestFunction::Sum { terms } => terms.iter().map(|f| f.sup_outside(x, r)).sum(),
        }
    }
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}
