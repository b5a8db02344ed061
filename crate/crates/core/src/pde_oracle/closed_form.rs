//! Closed-form solutions of the one-dimensional drift–diffusion example and
//! of the deterministic two-dimensional flow example.

use super::OracleError;

/// Characteristic roots `λ₁ > 0 > λ₂` of `(ε²/2)r² + r − 1 = 0`.
pub fn lambdas(eps: f64) -> (f64, f64) {
    let e2 = eps * eps;
    let s = (1.0 + 2.0 * e2).sqrt();
    // λ₁ = (s − 1)/ε² without cancellation
    (2.0 / (s + 1.0), (-s - 1.0) / e2)
}

/// Solution of `−u′ − (ε²/2)u″ + u − 1 = 0` on `(0,1)`, `u(0) = u(1) = 0`.
pub fn closed_form_v_eps(eps: f64, x: f64) -> Result<f64, OracleError> {
    if !(eps > 0.0) {
        return Err(OracleError::DomainViolation(format!("epsilon must be positive, got {eps}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(OracleError::DomainViolation(format!("x = {x} outside [0, 1]")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    let (l1, l2) = lambdas(eps);
    // divide through by e^{λ₁} so that nothing overflows for small ε
    let e21 = (l2 - l1).exp();
    let num = ((-l1).exp() - 1.0) * (l2 * x).exp() + (e21 - (-l1).exp()) * (l1 * x).exp();
    Ok(1.0 + num / (1.0 - e21))
}

/// The `ε = 0` value `1 − e^{−(1−x)}`.
pub fn closed_form_v0(x: f64) -> Result<f64, OracleError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(OracleError::DomainViolation(format!("x = {x} outside [0, 1]")));
    }
    Ok(-(x - 1.0).exp_m1())
}

fn check_rect(x: &[f64]) -> Result<(), OracleError> {
    if x.len() != 2 || !(-1.0..=1.0).contains(&x[0]) || !(0.0..=1.0).contains(&x[1]) {
        return Err(OracleError::DomainViolation(format!("{x:?} outside [-1,1]×[0,1]")));
    }
    Ok(())
}

/// Exit time of the flow `X₁ = x₁ + t`, `X₂ = x₂ − x₁² + X₁²` from the
/// closed rectangle, by region.
pub fn example15_zeta(x: &[f64]) -> Result<f64, OracleError> {
    check_rect(x)?;
    let (x1, x2) = (x[0], x[1]);
    Ok(if x2 >= x1 * x1 {
        -x1 + (1.0 - x2 + x1 * x1).sqrt()
    } else if x1 > 0.0 {
        1.0 - x1
    } else {
        -x1 - (x1 * x1 - x2).sqrt()
    })
}

/// `v = 1 − e^{−ζ}`.
pub fn example15_v(x: &[f64]) -> Result<f64, OracleError> {
    Ok(-(-example15_zeta(x)?).exp_m1())
}

/// Whether a boundary point of the rectangle is regular for the flow: the
/// right side, the top side with `x₁ ≥ 0` and the bottom side with `x₁ < 0`.
pub fn example15_is_regular(x: &[f64]) -> Result<bool, OracleError> {
    check_rect(x)?;
    let (x1, x2) = (x[0], x[1]);
    Ok(x1 == 1.0 || (x2 == 1.0 && x1 >= 0.0) || (x2 == 0.0 && x1 < 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn v_eps_values() {
        let (l1, l2) = lambdas(1.0);
        assert!((l1 - (3f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((l2 + 3f64.sqrt() + 1.0).abs() < 1e-15);
        assert!(closed_form_v_eps(1.0, 0.0).unwrap().abs() < 1e-15);
        assert!(closed_form_v_eps(1.0, 1.0).unwrap().abs() < 1e-15);
        let d = closed_form_v_eps(1e-3, 0.5).unwrap() - closed_form_v0(0.5).unwrap();
        assert!(d.abs() < 1e-3);
        assert!(closed_form_v_eps(1.0, 1.5).is_err());
    }

    #[test]
    fn v0_values() {
        assert_eq!(closed_form_v0(1.0).unwrap(), 0.0);
        assert!((closed_form_v0(0.0).unwrap() - 0.632120558828558).abs() < 1e-14);
    }

    #[test]
    fn example15_branches() {
        assert!((example15_zeta(&[0.5, 0.5]).unwrap() - (0.75f64.sqrt() - 0.5)).abs() < 1e-15);
        assert!((example15_zeta(&[0.5, 0.1]).unwrap() - 0.5).abs() < 1e-15);
        assert!((example15_zeta(&[-0.5, 0.1]).unwrap() - (0.5 - 0.15f64.sqrt())).abs() < 1e-15);
        assert_eq!(example15_zeta(&[-0.5, 0.25]).unwrap(), 1.5);
        assert!(example15_is_regular(&[-0.5, 0.0]).unwrap());
        assert!(!example15_is_regular(&[0.0, 0.0]).unwrap());
        assert!(!example15_is_regular(&[-1.0, 0.5]).unwrap());
    }
}
