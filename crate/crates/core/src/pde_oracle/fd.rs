//! Central-difference solver for the one-dimensional example.

use super::grid::{Axis, GridFunction};
use super::OracleError;

/// Solves `a·u″ + b·u′ + c·u = f` on the nodes of `axis` with Dirichlet
/// values at both ends (Thomas algorithm).
pub fn solve_two_point(
    axis: Axis,
    a: f64,
    b: f64,
    c: f64,
    f: impl Fn(f64) -> f64,
    left: f64,
    right: f64,
) -> Result<GridFunction, OracleError> {
    let m = axis.n;
    let dx = axis.spacing();
    let lower = a / (dx * dx) - b / (2.0 * dx);
    let diag = -2.0 * a / (dx * dx) + c;
    let upper = a / (dx * dx) + b / (2.0 * dx);
    // forward sweep over interior unknowns 1..m-1
    let n = m - 2;
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    for k in 0..n {
        let x = axis.node(k + 1);
        let mut rhs = f(x);
        if k == 0 {
            rhs -= lower * left;
        }
        if k + 1 == n {
            rhs -= upper * right;
        }
        let (l, prev_c, prev_d) = if k == 0 { (0.0, 0.0, 0.0) } else { (lower, cp[k - 1], dp[k - 1]) };
        let piv = diag - l * prev_c;
        if piv == 0.0 || !piv.is_finite() {
            return Err(OracleError::SingularSystem);
        }
        cp[k] = upper / piv;
        dp[k] = (rhs - l * prev_d) / piv;
    }
    let mut u = vec![0.0; m];
    u[0] = left;
    u[m - 1] = right;
    for k in (0..n).rev() {
        u[k + 1] = dp[k] - if k + 1 < n { cp[k] * u[k + 2] } else { 0.0 };
    }
    GridFunction::new(vec![axis], u)
}

/// `−u′ − (ε²/2)u″ + u − 1 = 0` on `(0,1)`, `u(0) = u(1) = 0`, on `m` nodes.
pub fn fd_solve_1d(eps: f64, m: usize) -> Result<GridFunction, OracleError> {
    if !(eps > 0.0) {
        return Err(OracleError::DomainViolation(format!("epsilon must be positive, got {eps}")));
    }
    if m < 3 {
        return Err(OracleError::DomainViolation(format!("need at least 3 nodes, got {m}")));
    }
    solve_two_point(Axis::new(0.0, 1.0, m), -0.5 * eps * eps, -1.0, 1.0, |_| 1.0, 0.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde_oracle::closed_form::closed_form_v_eps;

    fn max_err(eps: f64, m: usize) -> f64 {
        let u = fd_solve_1d(eps, m).unwrap();
        (0..m).map(|k| (u.values[k] - closed_form_v_eps(eps, u.node(k)[0]).unwrap()).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn matches_closed_form_and_converges_at_second_order() {
        let u = fd_solve_1d(1.0, 10_000).unwrap();
        assert_eq!(u.values[0], 0.0);
        assert_eq!(u.values[9_999], 0.0);
        assert!(max_err(1.0, 10_000) <= 1e-6);
        let ratio = max_err(0.1, 1001) / max_err(0.1, 2001);
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }
}
