//! The generator `𝓛` applied to test functions, and the residuals `G`.

use serde::{Deserialize, Serialize};

use super::fraclap::{frac_laplacian, FracLapOptions};
use super::testfn::TestFunction;
use super::OracleError;
use crate::feynman_kac::{DirichletProblem, NonstationaryProblem};
use crate::levy::{Noise, ProcessSpec};

/// `coefficient·|∇ₓφ|^γ`, added to the non-stationary residual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    pub gamma: f64,
    pub coefficient: f64,
}

/// The equation a candidate solution is checked against.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Equation {
    /// `−𝓛u + λu − ℓ = 0` in `O`, `u = g` outside.
    Dirichlet { problem: DirichletProblem, spec: ProcessSpec },
    /// `−∂ₜu − 𝓛ₓu − ℓ + H(∇ₓu) = 0` in `(0,T) × O`, `u = 0` on the
    /// parabolic boundary.
    Nonstationary { problem: NonstationaryProblem, spec: ProcessSpec, hamiltonian: Option<Hamiltonian> },
}

impl Equation {
    pub fn spec(&self) -> &ProcessSpec {
        match self {
            Equation::Dirichlet { spec, .. } | Equation::Nonstationary { spec, .. } => spec,
        }
    }

    /// Dimension of the points `u` is defined on.
    pub fn state_dim(&self) -> usize {
        match self {
            Equation::Dirichlet { spec, .. } => spec.dim,
            Equation::Nonstationary { spec, .. } => spec.dim + 1,
        }
    }

    /// Residual at `y` for the test function `φ`.
    pub fn residual(&self, phi: &TestFunction, y: &[f64], opts: &FracLapOptions) -> Result<f64, OracleError> {
        match self {
            Equation::Dirichlet { problem, spec } => g_value(problem, spec, phi, y, opts),
            Equation::Nonstationary { problem, spec, hamiltonian } => {
                g_value_nonstationary(problem, spec, hamiltonian.as_ref(), phi, y, opts)
            }
        }
    }
}

/// `𝓛φ(x) = b(x)·∇φ(x) + (ε²/2)Δφ(x)` or `b(x)·∇φ(x) − |σ|^α(−Δ)^{α/2}φ(x)`.
pub fn generator_apply(spec: &ProcessSpec, phi: &TestFunction, x: &[f64], opts: &FracLapOptions) -> Result<f64, OracleError> {
    spec.validate()?;
    if spec.clock {
        return Err(OracleError::Unsupported("generator of a clocked spec; use the non-stationary residual".into()));
    }
    if x.len() != spec.dim || phi.dim() != spec.dim {
        return Err(OracleError::DomainViolation(format!("point and test function must have dimension {}", spec.dim)));
    }
    let d = spec.dim;
    let mut b = vec![0.0; d];
    spec.drift_at(x, &mut b);
    let grad = phi.gradient(x);
    let mut out: f64 = b.iter().zip(&grad).map(|(u, v)| u * v).sum();
    match spec.noise {
        Noise::None => {}
        Noise::Brownian { epsilon } => {
            if epsilon != 0.0 {
                let h = phi.hessian(x);
                out += 0.5 * epsilon * epsilon * (0..d).map(|i| h[i * d + i]).sum::<f64>();
            }
        }
        Noise::Stable { alpha, sigma } => {
            if sigma != 0.0 {
                out -= sigma.abs().powf(alpha) * frac_laplacian(phi, x, alpha, opts)?;
            }
        }
    }
    Ok(out)
}

/// `G(φ, x) = −𝓛φ(x) + λφ(x) − ℓ(x)`.
pub fn g_value(
    problem: &DirichletProblem,
    spec: &ProcessSpec,
    phi: &TestFunction,
    x: &[f64],
    opts: &FracLapOptions,
) -> Result<f64, OracleError> {
    Ok(-generator_apply(spec, phi, x, opts)? + problem.discount * phi.value(x) - problem.running_cost.eval(x))
}

/// `−∂ₜφ − 𝓛ₓφ − ℓ + coefficient·|∇ₓφ|^γ` at `y = (t, x)`.
pub fn g_value_nonstationary(
    problem: &NonstationaryProblem,
    spec: &ProcessSpec,
    hamiltonian: Option<&Hamiltonian>,
    phi: &TestFunction,
    y: &[f64],
    opts: &FracLapOptions,
) -> Result<f64, OracleError> {
    if y.len() != spec.dim + 1 || phi.dim() != y.len() {
        return Err(OracleError::DomainViolation(format!("expected a (t, x) point of dimension {}", spec.dim + 1)));
    }
    let grad = phi.gradient(y);
    let slice = phi.slice_first(y[0]);
    let mut g = -grad[0] - generator_apply(spec, &slice, &y[1..], opts)? - problem.running_cost.eval(y);
    if let Some(h) = hamiltonian {
        let q = grad[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        g += h.coefficient * q.powf(h.gamma);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::geometry::Domain;

    #[test]
    fn pure_drift_residual_is_local() {
        let spec = ProcessSpec::uniform_motion();
        let p = DirichletProblem::new(Domain::interval(0.0, 1.0), Field::constant(1.0), Field::Zero, 1.0);
        let e1 = (-1f64).exp();
        let phi = TestFunction::touching(vec![0.0], vec![1.0], 1.0 - e1, vec![-e1], &[0.0]);
        let g = g_value(&p, &spec, &phi, &[0.0], &FracLapOptions::default()).unwrap();
        assert!(g.abs() < 1e-15, "{g}");
        let flat = TestFunction::gaussian(vec![0.4], 0.5, 2.5);
        let g = g_value(&p, &spec, &flat, &[0.4], &FracLapOptions::default()).unwrap();
        assert!((g - (2.5 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn brownian_uses_the_laplacian() {
        let spec = ProcessSpec::new(crate::levy::Drift::Zero, Noise::Brownian { epsilon: 2.0 }, 1);
        let phi = TestFunction::touching(vec![0.0], vec![1.0], 0.0, vec![0.0], &[3.0]);
        let v = generator_apply(&spec, &phi, &[0.0], &FracLapOptions::default()).unwrap();
        assert!((v - 6.0).abs() < 1e-12);
    }
}
