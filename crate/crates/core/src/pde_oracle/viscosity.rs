//! Counterexample search for the viscosity sub- and supersolution
//! inequalities of a gridded candidate `u`.
//!
//! At a lattice node `x` the checker builds a family of Gaussian bumps `φ`
//! with `φ(x) = u(x)`, a range of gradients and diagonal Hessians, and keeps
//! those lying above (for `J⁺`) or below (for `J⁻`) the extended candidate on
//! a verification lattice. Each admissible `φ` is then plugged into the
//! residual. A clean report means no counterexample among the members tried,
//! nothing more.
//!
//! Lattice admissibility only pins the gradient of `φ` to within
//! `½h|H − c|` per axis, where `H` is the Hessian of `φ` and `c` the second
//! difference of the data. The residual is allowed that much first-order
//! slack (less whatever the diffusion term gives back).

use serde::{Deserialize, Serialize};

use super::fraclap::FracLapOptions;
use super::generator::Equation;
use super::grid::GridFunction;
use super::testfn::TestFunction;
use super::OracleError;
use crate::geometry::Membership;
use crate::levy::Noise;
use crate::parallel::map_chunks;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMode {
    /// Interior inequalities plus `u = g` on the boundary.
    Strong,
    /// Boundary points use `min{G, u − g} ≤ 0` and `max{G, u − g} ≥ 0`.
    Generalized,
    /// Space-time problem: interior inequalities plus `u = 0` on the
    /// parabolic boundary.
    Nonstationary,
}

impl CheckMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckMode::Strong => "strong",
            CheckMode::Generalized => "generalized",
            CheckMode::Nonstationary => "nonstationary",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `φ ∈ J⁺`, the subsolution inequality
    Sub,
    /// `φ ∈ J⁻`, the supersolution inequality
    Super,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckerConfig {
    /// allowed residual error beyond the slack
    pub tolerance: f64,
    /// `|H − c|` values tried per axis
    pub curvature_offsets: Vec<f64>,
    /// bump widths as multiples of each grid axis length
    pub width_factors: Vec<f64>,
    /// gradients `s + ½κh·k/K` for `k = −K..=K`
    pub slope_steps: usize,
    /// extra gradients `s ± ½κh·m` on axes with one-sided data
    pub one_sided_multiples: Vec<f64>,
    /// exterior nodes added beyond each end of every axis
    pub margin_nodes: usize,
    /// far lattice half-extent as a multiple of each axis length
    pub far_extent: f64,
    pub far_nodes: usize,
    /// admissibility is `φ ≥ u − margin` (resp. `≤ u + margin`) off `x`
    pub admissibility_margin: f64,
    /// violations kept in the report
    pub max_violations: usize,
    pub workers: usize,
    pub quadrature: FracLapOptions,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            curvature_offsets: vec![0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0],
            width_factors: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            slope_steps: 10,
            one_sided_multiples: vec![2.0, 5.0, 20.0, 100.0],
            margin_nodes: 10,
            far_extent: 10.0,
            far_nodes: 41,
            admissibility_margin: 0.0,
            max_violations: 20,
            workers: 1,
            quadrature: FracLapOptions::default(),
        }
    }
}

impl CheckerConfig {
    /// A family of comparable size for two-dimensional lattices.
    pub fn planar() -> Self {
        Self {
            curvature_offsets: vec![0.1, 1.0, 10.0, 100.0, 1000.0],
            width_factors: vec![1.0, 4.0],
            slope_steps: 5,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub side: Side,
    /// residual, or `u − g` for a boundary-condition failure
    pub g_value: f64,
    pub slack: f64,
    pub test_function: Option<TestFunction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViscosityReport {
    pub point: Vec<f64>,
    pub mode: CheckMode,
    pub on_boundary: bool,
    pub violations: Vec<Violation>,
    pub violation_count: usize,
    pub sub_violations: usize,
    pub super_violations: usize,
    pub tested_count: usize,
    pub tested_plus: usize,
    pub tested_minus: usize,
    pub family_size: usize,
    pub j_plus_empty: bool,
    pub j_minus_empty: bool,
    pub lattice_spacing: Vec<f64>,
    pub tolerance: f64,
}

impl ViscosityReport {
    pub fn sub_holds(&self) -> bool {
        self.sub_violations == 0
    }

    pub fn super_holds(&self) -> bool {
        self.super_violations == 0
    }

    fn count_violation(&mut self, side: Side) {
        self.violation_count += 1;
        match side {
            Side::Sub => self.sub_violations += 1,
            Side::Super => self.super_violations += 1,
        }
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    pub fn summary(&self) -> String {
        if self.passed() {
            format!(
                "no counterexample found among {} test functions ({} in J+, {} in J-)",
                self.tested_count, self.tested_plus, self.tested_minus
            )
        } else {
            format!("{} violations among {} test functions", self.violation_count, self.tested_count)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// A lattice point with the upper and lower envelopes of the extension.
struct Probe {
    y: Vec<f64>,
    upper: f64,
    lower: f64,
}

struct Context<'a> {
    u: &'a GridFunction,
    eq: &'a Equation,
}

impl Context<'_> {
    /// `(upper, lower)` envelope of the extended candidate at `y`, or `None`
    /// where it is unknown.
    fn envelope(&self, y: &[f64]) -> Result<Option<(f64, f64)>, OracleError> {
        match self.eq {
            Equation::Dirichlet { problem, .. } => {
                let g = || problem.boundary_data.eval(y);
                if !problem.domain.contains(y, Membership::Closure)? {
                    return Ok(Some((g(), g())));
                }
                let Some(u) = self.u.eval(y) else { return Ok(None) };
                if problem.domain.on_boundary(y)? {
                    let g = g();
                    Ok(Some((u.max(g), u.min(g))))
                } else {
                    Ok(Some((u, u)))
                }
            }
            Equation::Nonstationary { problem, .. } => {
                let t = y[0];
                if !(0.0..=problem.t_max).contains(&t) {
                    return Ok(None);
                }
                if !problem.base.contains(&y[1..], Membership::Closure)? {
                    return Ok(Some((0.0, 0.0)));
                }
                let Some(u) = self.u.eval(y) else { return Ok(None) };
                if t == problem.t_max || problem.base.on_boundary(&y[1..])? {
                    Ok(Some((u.max(0.0), u.min(0.0))))
                } else {
                    Ok(Some((u, u)))
                }
            }
        }
    }

    /// Whether `y` carries data (inside the lattice box and the closure).
    fn is_data(&self, y: &[f64]) -> Result<bool, OracleError> {
        if !self.u.contains(y) {
            return Ok(false);
        }
        Ok(match self.eq {
            Equation::Dirichlet { problem, .. } => problem.domain.contains(y, Membership::Closure)?,
            Equation::Nonstationary { problem, .. } => {
                (0.0..=problem.t_max).contains(&y[0]) && problem.base.contains(&y[1..], Membership::Closure)?
            }
        })
    }

    fn verification_lattice(&self, cfg: &CheckerConfig) -> Result<Vec<Probe>, OracleError> {
        let axes = &self.u.axes;
        let d = axes.len();
        let time_axis = matches!(self.eq, Equation::Nonstationary { .. });
        let mut out = Vec::new();
        let mut push = |y: Vec<f64>, this: &Self| -> Result<(), OracleError> {
            if let Some((upper, lower)) = this.envelope(&y)? {
                out.push(Probe { y, upper, lower });
            }
            Ok(())
        };
        for k in 0..self.u.len() {
            push(self.u.node(k), self)?;
        }
        // fine margin and coarse far field, skipping what the grid covers
        let fine: Vec<Vec<f64>> = axes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let m = if time_axis && i == 0 { 0 } else { cfg.margin_nodes as i64 };
                (-m..(a.n as i64 + m)).map(|j| a.lo + j as f64 * a.spacing()).collect()
            })
            .collect();
        let far: Vec<Vec<f64>> = axes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if time_axis && i == 0 {
                    (0..a.n).map(|j| a.node(j)).collect()
                } else {
                    let ext = cfg.far_extent * (a.hi - a.lo);
                    let n = cfg.far_nodes.max(2);
                    let (lo, hi) = (a.lo - ext, a.hi + ext);
                    (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect()
                }
            })
            .collect();
        for set in [fine, far] {
            let count: usize = set.iter().map(Vec::len).product();
            for mut k in 0..count {
                let mut y = vec![0.0; d];
                for j in (0..d).rev() {
                    y[j] = set[j][k % set[j].len()];
                    k /= set[j].len();
                }
                if !self.u.contains(&y) {
                    push(y, self)?;
                }
            }
        }
        Ok(out)
    }
}

/// Per-axis data derivatives at the node.
struct AxisData {
    slope: f64,
    /// second difference, if one is available
    curvature: Option<f64>,
    one_sided: bool,
    spacing: f64,
}

/// Searches for test functions that violate the viscosity inequalities of
/// `eq` for the candidate `u` at the lattice node `x`.
pub fn check_viscosity_point(
    u: &GridFunction,
    eq: &Equation,
    x: &[f64],
    mode: CheckMode,
    cfg: &CheckerConfig,
) -> Result<ViscosityReport, OracleError> {
    let d = u.dim();
    if x.len() != d || eq.state_dim() != d {
        return Err(OracleError::DomainViolation(format!(
            "point has {} coordinates, grid {d}, equation {}",
            x.len(),
            eq.state_dim()
        )));
    }
    match (mode, eq) {
        (CheckMode::Nonstationary, Equation::Nonstationary { .. }) => {}
        (CheckMode::Strong | CheckMode::Generalized, Equation::Dirichlet { .. }) => {}
        _ => return Err(OracleError::Unsupported(format!("{} mode for this equation", mode.as_str()))),
    }
    let index: Vec<usize> = u
        .axes
        .iter()
        .zip(x)
        .map(|(a, v)| a.index_of(*v))
        .collect::<Option<_>>()
        .ok_or_else(|| OracleError::DomainViolation(format!("{x:?} is not a lattice node")))?;
    let x: Vec<f64> = u.axes.iter().zip(&index).map(|(a, i)| a.node(*i)).collect();
    let ctx = Context { u, eq };
    if !ctx.is_data(&x)? {
        return Err(OracleError::DomainViolation(format!("{x:?} is outside the closed domain")));
    }
    let u0 = u.eval(&x).expect("node is inside the grid");

    // boundary status and boundary value
    let (on_boundary, g0) = match eq {
        Equation::Dirichlet { problem, .. } => (problem.domain.on_boundary(&x)?, problem.boundary_data.eval(&x)),
        Equation::Nonstationary { problem, .. } => (x[0] == problem.t_max || problem.base.on_boundary(&x[1..])?, 0.0),
    };

    let mut report = ViscosityReport {
        point: x.clone(),
        mode,
        on_boundary,
        violations: Vec::new(),
        violation_count: 0,
        sub_violations: 0,
        super_violations: 0,
        tested_count: 0,
        tested_plus: 0,
        tested_minus: 0,
        family_size: 0,
        j_plus_empty: true,
        j_minus_empty: true,
        lattice_spacing: u.spacing(),
        tolerance: cfg.tolerance,
    };
    let boundary_condition_only = on_boundary && matches!(mode, CheckMode::Strong | CheckMode::Nonstationary);
    if boundary_condition_only {
        for (side, gap) in [(Side::Sub, u0 - g0), (Side::Super, g0 - u0)] {
            if gap > cfg.tolerance {
                report.count_violation(side);
                report.violations.push(Violation { side, g_value: u0 - g0, slack: 0.0, test_function: None });
            }
        }
        if matches!(mode, CheckMode::Nonstationary) {
            return Ok(report);
        }
    }

    let axis_data = (0..d)
        .map(|i| {
            let at = |k: i64| -> Result<Option<f64>, OracleError> {
                let j = index[i] as i64 + k;
                if j < 0 || j >= u.axes[i].n as i64 {
                    return Ok(None);
                }
                let mut y = x.clone();
                y[i] = u.axes[i].node(j as usize);
                Ok(if ctx.is_data(&y)? { u.eval(&y) } else { None })
            };
            let h = u.axes[i].spacing();
            Ok(match (at(-2)?, at(-1)?, at(1)?, at(2)?) {
                (_, Some(l), Some(r), _) => AxisData {
                    slope: (r - l) / (2.0 * h),
                    curvature: Some((r - 2.0 * u0 + l) / (h * h)),
                    one_sided: false,
                    spacing: h,
                },
                (_, _, Some(r1), Some(r2)) => AxisData {
                    slope: (-3.0 * u0 + 4.0 * r1 - r2) / (2.0 * h),
                    curvature: Some((u0 - 2.0 * r1 + r2) / (h * h)),
                    one_sided: true,
                    spacing: h,
                },
                (Some(l2), Some(l1), _, _) => AxisData {
                    slope: (3.0 * u0 - 4.0 * l1 + l2) / (2.0 * h),
                    curvature: Some((u0 - 2.0 * l1 + l2) / (h * h)),
                    one_sided: true,
                    spacing: h,
                },
                _ => AxisData { slope: 0.0, curvature: None, one_sided: true, spacing: h },
            })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;

    let family = build_family(&x, u0, &axis_data, u, cfg);
    report.family_size = family.len();
    let mut lattice = ctx.verification_lattice(cfg)?;
    // nearest neighbours first: most rejections happen there
    let dist = |p: &Probe| -> f64 {
        p.y.iter().zip(&x).zip(&axis_data).map(|((a, b), ad)| ((a - b) / ad.spacing).powi(2)).sum()
    };
    lattice.sort_by(|a, b| dist(a).total_cmp(&dist(b)));

    let (spec, time_axis, hamiltonian) = match eq {
        Equation::Dirichlet { spec, .. } => (spec, false, None),
        Equation::Nonstationary { spec, hamiltonian, .. } => (spec, true, *hamiltonian),
    };
    let mut drift = vec![0.0; spec.dim];
    spec.drift_at(&x[time_axis as usize..], &mut drift);
    let diffusion = match spec.noise {
        Noise::Brownian { epsilon } => 0.5 * epsilon * epsilon,
        _ => 0.0,
    };
    let margin = cfg.admissibility_margin;
    let envelope_at_x = lattice.iter().find(|p| p.y == x).map(|p| (p.upper, p.lower)).unwrap_or((u0, u0));

    let outcomes = map_chunks(family.len() as u64, 16, cfg.workers, |a, b| {
        (a..b)
            .map(|k| {
                let member = &family[k as usize];
                let phi = &member.phi;
                // φ(x) = u(x) must itself respect the envelope at x
                let fits_at_x = match member.side {
                    Side::Sub => u0 >= envelope_at_x.0 - margin,
                    Side::Super => u0 <= envelope_at_x.1 + margin,
                };
                if !fits_at_x {
                    return Ok(None);
                }
                for p in &lattice {
                    if p.y == x {
                        continue;
                    }
                    let v = phi.value(&p.y);
                    let ok = match member.side {
                        Side::Sub => v >= p.upper - margin,
                        Side::Super => v <= p.lower + margin,
                    };
                    if !ok {
                        return Ok(None);
                    }
                }
                if boundary_condition_only {
                    return Ok(Some((member.side, 0.0, 0.0, false)));
                }
                let g = eq.residual(phi, &x, &cfg.quadrature)?;
                // first-order slack from the lattice-admissible gradient range
                let mut slack = 0.0;
                for (i, ad) in axis_data.iter().enumerate() {
                    let Some(c) = ad.curvature else { continue };
                    let a = if time_axis && i == 0 {
                        1.0
                    } else {
                        let j = i - time_axis as usize;
                        let mut a = drift[j].abs();
                        if let Some(h) = hamiltonian {
                            let q = member.gradient[time_axis as usize..].iter().map(|v| v * v).sum::<f64>().sqrt();
                            let lip = if h.gamma == 1.0 { 1.0 } else if q > 0.0 { h.gamma * q.powf(h.gamma - 1.0) } else { 0.0 };
                            a += h.coefficient.abs() * lip;
                        }
                        a
                    };
                    let dterm = if time_axis && i == 0 { 0.0 } else { diffusion };
                    slack += (0.5 * a * ad.spacing - dterm) * (member.hessian[i] - c).abs();
                }
                let slack = slack.max(0.0);
                let value = if on_boundary && mode == CheckMode::Generalized {
                    match member.side {
                        Side::Sub => g.min(u0 - g0),
                        Side::Super => g.max(u0 - g0),
                    }
                } else {
                    g
                };
                let bad = match member.side {
                    Side::Sub => value > cfg.tolerance + slack,
                    Side::Super => value < -cfg.tolerance - slack,
                };
                Ok(Some((member.side, value, slack, bad)))
            })
            .collect::<Result<Vec<_>, OracleError>>()
    });

    let mut k = 0usize;
    for chunk in outcomes {
        for outcome in chunk? {
            if let Some((side, value, slack, bad)) = outcome {
                report.tested_count += 1;
                match side {
                    Side::Sub => report.tested_plus += 1,
                    Side::Super => report.tested_minus += 1,
                }
                if bad {
                    report.count_violation(side);
                    if report.violations.len() < cfg.max_violations {
                        report.violations.push(Violation {
                            side,
                            g_value: value,
                            slack,
                            test_function: Some(family[k].phi.clone()),
                        });
                    }
                }
            }
            k += 1;
        }
    }
    report.j_plus_empty = report.tested_plus == 0;
    report.j_minus_empty = report.tested_minus == 0;
    Ok(report)
}

struct Member {
    side: Side,
    phi: TestFunction,
    gradient: Vec<f64>,
    hessian: Vec<f64>,
}

fn build_family(x: &[f64], u0: f64, axis_data: &[AxisData], u: &GridFunction, cfg: &CheckerConfig) -> Vec<Member> {
    let d = x.len();
    let big_k = cfg.slope_steps.max(1) as i64;
    let mut family = Vec::new();
    for side in [Side::Sub, Side::Super] {
        let sign = if side == Side::Sub { 1.0 } else { -1.0 };
        for &factor in &cfg.width_factors {
            let widths: Vec<f64> = u.axes.iter().map(|a| factor * (a.hi - a.lo)).collect();
            for kappas in product(&vec![cfg.curvature_offsets.clone(); d]) {
                let hessian: Vec<f64> = (0..d)
                    .map(|i| axis_data[i].curvature.unwrap_or(0.0) + sign * kappas[i])
                    .collect();
                let slopes: Vec<Vec<f64>> = (0..d)
                    .map(|i| {
                        let ad = &axis_data[i];
                        let half = 0.5 * kappas[i] * ad.spacing;
                        let mut s: Vec<f64> =
                            (-big_k..=big_k).map(|k| ad.slope + half * k as f64 / big_k as f64).collect();
                        if ad.one_sided {
                            for m in &cfg.one_sided_multiples {
                                s.push(ad.slope + half * m);
                                s.push(ad.slope - half * m);
                            }
                        }
                        s
                    })
                    .collect();
                for gradient in product(&slopes) {
                    let phi = TestFunction::touching(x.to_vec(), widths.clone(), u0, gradient.clone(), &hessian);
                    family.push(Member { side, phi, gradient, hessian: hessian.clone() });
                }
            }
        }
    }
    family
}

/// Cartesian product of per-axis value lists.
fn product(sets: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for set in sets {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                set.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect();
    }
    out
}
