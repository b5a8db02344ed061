//! Monte Carlo estimators of Feynman–Kac functionals.
//!
//! For a trajectory stopped at `τ` the functional is
//! `F = ∫₀^τ e^{−λs} ℓ(X_s) ds + e^{−λτ} g(X_τ)`. The running integral uses
//! the trapezoid rule on each straight piece with the discount weight
//! integrated exactly, and Gauss–Legendre on closed-form flows. Paths cut at
//! the horizon keep their running integral and drop the terminal term.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::{MCEstimate, Moments};
use crate::exit::{sample_exit_observed, ExitError, ExitObserver};
use crate::field::Field;
use crate::geometry::{Domain, GeometryError, Membership};
use crate::levy::{simulate_path, LevyError, ProcessSpec, RngStream};
use crate::parallel::McOptions;
use crate::paths::{ExitMode, PathError, PolyFlow};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FkError {
    #[error(transparent)]
    Exit(#[from] ExitError),
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("sample value {value} exceeds the a priori bound {bound}")]
    BoundViolated { value: f64, bound: f64 },
    #[error("discounted exit moment p = {p} (se {se}) is within 3 SE of 0 or 1")]
    DegenerateP { p: f64, se: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// `−𝓛u + λu − ℓ = 0` in `O`, `u = g` on `Oᶜ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DirichletProblem {
    pub domain: Domain,
    #[serde(default)]
    pub running_cost: Field,
    #[serde(default)]
    pub boundary_data: Field,
    pub discount: f64,
}

impl DirichletProblem {
    pub fn new(domain: Domain, running_cost: Field, boundary_data: Field, discount: f64) -> Self {
        Self { domain, running_cost, boundary_data, discount }
    }

    pub fn validate(&self) -> Result<(), FkError> {
        self.domain.validate()?;
        if !(self.discount > 0.0) || !self.discount.is_finite() {
            return Err(FkError::InvalidProblem(format!("discount must be positive, got {}", self.discount)));
        }
        Ok(())
    }

    /// `sup_Ō|ℓ|/λ + sup|g|`, the bound every sample of `F` obeys.
    pub fn value_bound(&self) -> f64 {
        let (lo, hi) = self.domain.bounding_box();
        self.running_cost.sup_abs_on(&lo, &hi) / self.discount + self.boundary_data.sup_abs()
    }

    pub fn default_horizon(&self) -> f64 {
        20.0 / self.discount
    }
}

/// `∂_t u + 𝓛u + ℓ = 0` on `Q_T = (0,T) × O` with zero data on the
/// parabolic boundary. The running cost is a field on `(t, x)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonstationaryProblem {
    pub t_max: f64,
    pub base: Domain,
    pub running_cost: Field,
}

impl NonstationaryProblem {
    pub fn new(t_max: f64, base: Domain, running_cost: Field) -> Self {
        Self { t_max, base, running_cost }
    }

    pub fn validate(&self) -> Result<(), FkError> {
        self.base.validate()?;
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(FkError::InvalidProblem(format!("t_max must be positive, got {}", self.t_max)));
        }
        Ok(())
    }

    pub fn cylinder(&self) -> Domain {
        Domain::cylinder(self.t_max, self.base.clone())
    }

    fn check_start(&self, t: f64, x: &[f64]) -> Result<(), FkError> {
        if !(0.0..=self.t_max).contains(&t) || !self.base.contains(x, Membership::Closure)? {
            let mut y = vec![t];
            y.extend_from_slice(x);
            return Err(ExitError::InvalidStart(y).into());
        }
        Ok(())
    }
}

/// Which exit time stops the functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoppingRule {
    /// `ζ`, first exit from the closure
    Closure,
    /// `ζ̂`, first exit from the open set
    Open,
    /// `ζ̄`, zero when starting outside the open set
    Entrance,
}

/// Estimates of `v`, `v̂` and `v̄` from the same trajectories.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleEstimates {
    pub closure: MCEstimate,
    pub open: MCEstimate,
    pub entrance: MCEstimate,
}

impl RuleEstimates {
    pub fn get(&self, rule: StoppingRule) -> MCEstimate {
        match rule {
            StoppingRule::Closure => self.closure,
            StoppingRule::Open => self.open,
            StoppingRule::Entrance => self.entrance,
        }
    }
}

/// Discounted running integral accumulated piece by piece.
struct RunningCost<'a> {
    field: &'a Field,
    lambda: f64,
    /// prepend `time_offset + s` to the state before evaluating the field
    time_offset: Option<f64>,
    skip: bool,
    acc: f64,
    acc_at_open: f64,
    // cached weights for the last step length
    dt: f64,
    w0: f64,
    w1: f64,
    decay: f64,
    // e^{−λ t_disc}
    t_disc: f64,
    disc: f64,
    scratch: Vec<f64>,
    gl: &'a GaussLegendre,
}

impl<'a> RunningCost<'a> {
    fn new(field: &'a Field, lambda: f64, time_offset: Option<f64>, dim: usize, gl: &'a GaussLegendre) -> Self {
        Self {
            field,
            lambda,
            time_offset,
            skip: field.is_zero(),
            acc: 0.0,
            acc_at_open: 0.0,
            dt: f64::NAN,
            w0: 0.0,
            w1: 0.0,
            decay: 1.0,
            t_disc: 0.0,
            disc: 1.0,
            scratch: vec![0.0; dim + 1],
            gl,
        }
    }

    #[inline]
    fn eval(&mut self, s: f64, x: &[f64]) -> f64 {
        match self.time_offset {
            None => self.field.eval(x),
            Some(t) => {
                self.scratch[0] = t + s;
                self.scratch[1..].copy_from_slice(x);
                self.field.eval(&self.scratch)
            }
        }
    }

    fn set_weights(&mut self, dt: f64) {
        let l = self.lambda;
        self.dt = dt;
        let x = l * dt;
        if l == 0.0 {
            self.w0 = dt;
            self.w1 = 0.5 * dt;
            self.decay = 1.0;
            return;
        }
        self.w0 = -(-x).exp_m1() / l;
        // ∫₀^dt e^{−λu} u/dt du
        self.w1 = if x < 1e-2 {
            let mut term = 1.0;
            let mut s = 0.0;
            for k in 0..8 {
                s += term / (k as f64 + 2.0);
                term *= -x / (k as f64 + 1.0);
            }
            dt * s
        } else {
            (1.0 - (-x).exp() * (1.0 + x)) / (l * l * dt)
        };
        self.decay = (-x).exp();
    }
}

impl ExitObserver for RunningCost<'_> {
    fn segment(&mut self, t0: f64, t1: f64, xa: &[f64], xb: &[f64]) {
        if self.skip || t1 <= t0 {
            return;
        }
        let dt = t1 - t0;
        if dt != self.dt {
            self.set_weights(dt);
        }
        let disc = if t0 == self.t_disc { self.disc } else { (-self.lambda * t0).exp() };
        let fa = self.eval(t0, xa);
        let fb = self.eval(t1, xb);
        self.acc += disc * (fa * self.w0 + (fb - fa) * self.w1);
        self.t_disc = t1;
        self.disc = disc * self.decay;
    }

    fn flow(&mut self, flow: &PolyFlow, t0: f64, t1: f64) {
        if self.skip || t1 <= t0 {
            return;
        }
        let mut x = vec![0.0; flow.dim()];
        let gl = self.gl;
        let lambda = self.lambda;
        let width = if lambda > 0.0 { (0.25f64).min(1.0 / lambda) } else { 0.25 };
        let this = &*self;
        let v = gl.integrate_composite(t0, t1, width, |s| {
            flow.eval_into(s, &mut x);
            (-lambda * s).exp() * this.eval_owned(s, &x)
        });
        self.acc += v;
    }

    fn open_exit(&mut self, _t: f64) {
        self.acc_at_open = self.acc;
    }
}

impl RunningCost<'_> {
    fn eval_owned(&self, s: f64, x: &[f64]) -> f64 {
        match self.time_offset {
            None => self.field.eval(x),
            Some(t) => {
                let mut y = Vec::with_capacity(x.len() + 1);
                y.push(t + s);
                y.extend_from_slice(x);
                self.field.eval(&y)
            }
        }
    }
}

/// When `e^{−λs}ℓ` along any path is `c·e^{−κs}`, returns `(c, κ)` so the
/// running integral is exact in the stopping time. `t0` is the start time
/// seen by time-dependent fields.
fn path_free_integrand(field: &Field, lambda: f64, t0: Option<f64>) -> Option<(f64, f64)> {
    match field {
        Field::Zero => Some((0.0, lambda)),
        Field::Constant { value } => Some((*value, lambda)),
        Field::TimeWeighted { rate, inner } => match (&**inner, t0) {
            (Field::Constant { value }, Some(t)) => Some((value * (rate * t).exp(), lambda - rate)),
            _ => None,
        },
        _ => None,
    }
}

/// Core sampler shared by the stationary and the direct non-stationary
/// estimators: returns the closure, open and entrance moments.
#[allow(clippy::too_many_arguments)]
fn functional_moments(
    spec: &ProcessSpec,
    domain: &Domain,
    x0: &[f64],
    running: &Field,
    terminal: &Field,
    lambda: f64,
    time_offset: Option<f64>,
    horizon: f64,
    bound: f64,
    opts: &McOptions,
) -> Result<[Moments; 3], FkError> {
    spec.validate()?;
    let start_open = domain.contains(x0, Membership::Open)?;
    let g0 = terminal.eval(x0);
    let gl = GaussLegendre::new(8);
    let tol = 1e-9 * (1.0 + bound);
    let clock_start = spec.clock.then(|| x0[0]);
    let closed = path_free_integrand(running, lambda, time_offset.or(clock_start));
    let integral = |t: f64| match closed {
        Some((c, 0.0)) => c * t,
        Some((c, k)) => -c * (-k * t).exp_m1() / k,
        None => 0.0,
    };
    let parts = opts.map_chunks(|a, b| -> Result<[Moments; 3], FkError> {
        let mut m = [Moments::default(); 3];
        for i in a..b {
            let mut rng = RngStream::new(opts.seed, opts.stream_offset + i).rng();
            let mut obs = RunningCost::new(running, lambda, time_offset, x0.len(), &gl);
            obs.skip |= closed.is_some();
            let r = sample_exit_observed(spec, domain, x0, opts.h, horizon, &mut rng, &mut obs)?;
            if closed.is_some() {
                obs.acc = integral(if r.truncated { horizon } else { r.zeta });
                obs.acc_at_open = integral(r.zeta_hat.min(horizon));
            }
            let f_cl = if r.truncated {
                obs.acc
            } else {
                obs.acc + (-lambda * r.zeta).exp() * terminal.eval(&r.exit_point)
            };
            let open_trunc = r.zeta_hat.is_infinite();
            let f_op = if open_trunc {
                obs.acc
            } else {
                obs.acc_at_open + (-lambda * r.zeta_hat).exp() * terminal.eval(&r.exit_point_hat)
            };
            let f_en = if start_open { f_op } else { g0 };
            for f in [f_cl, f_op, f_en] {
                if !(f.abs() <= bound + tol) {
                    return Err(FkError::BoundViolated { value: f, bound });
                }
            }
            m[0].push(f_cl, r.truncated);
            m[1].push(f_op, open_trunc);
            m[2].push(f_en, start_open && open_trunc);
        }
        Ok(m)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut out = [Moments::default(); 3];
    for (k, o) in out.iter_mut().enumerate() {
        let col: Vec<Moments> = parts.iter().map(|p| p[k]).collect();
        *o = Moments::reduce(&col);
    }
    Ok(out)
}

/// `v(x₀)`, `v̂(x₀)` and `v̄(x₀)` from one set of trajectories.
pub fn estimate_v_rules(
    problem: &DirichletProblem,
    spec: &ProcessSpec,
    x0: &[f64],
    opts: &McOptions,
) -> Result<RuleEstimates, FkError> {
    problem.validate()?;
    let horizon = opts.horizon.unwrap_or_else(|| problem.default_horizon());
    let m = functional_moments(
        spec,
        &problem.domain,
        x0,
        &problem.running_cost,
        &problem.boundary_data,
        problem.discount,
        None,
        horizon,
        problem.value_bound(),
        opts,
    )?;
    Ok(RuleEstimates {
        closure: m[0].finish(opts.seed),
        open: m[1].finish(opts.seed),
        entrance: m[2].finish(opts.seed),
    })
}

/// `v(x₀) = E[∫₀^ζ e^{−λs}ℓ(X_s)ds + e^{−λζ}g(X_ζ)]`.
pub fn estimate_v(
    problem: &DirichletProblem,
    spec: &ProcessSpec,
    x0: &[f64],
    opts: &McOptions,
) -> Result<MCEstimate, FkError> {
    estimate_v_with_rule(problem, spec, x0, StoppingRule::Closure, opts)
}

pub fn estimate_v_with_rule(
    problem: &DirichletProblem,
    spec: &ProcessSpec,
    x0: &[f64],
    rule: StoppingRule,
    opts: &McOptions,
) -> Result<MCEstimate, FkError> {
    Ok(estimate_v_rules(problem, spec, x0, opts)?.get(rule))
}

/// `v₁(t,x) = E[∫₀^{ζ∧(T−t)} ℓ(t+s, X_s) ds]` simulated in `d` dimensions.
pub fn estimate_v1_direct(
    problem: &NonstationaryProblem,
    spec: &ProcessSpec,
    t: f64,
    x: &[f64],
    opts: &McOptions,
) -> Result<MCEstimate, FkError> {
    problem.validate()?;
    problem.check_start(t, x)?;
    if spec.clock {
        return Err(FkError::InvalidProblem("direct route needs a spec without clock".into()));
    }
    if t == problem.t_max {
        return Ok(MCEstimate::exact(0.0, opts.n, opts.seed));
    }
    let rem = problem.t_max - t;
    let (lo, hi) = problem.cylinder().bounding_box();
    let bound = problem.running_cost.sup_abs_on(&lo, &hi) * rem;
    let m = functional_moments(
        spec,
        &problem.base,
        x,
        &problem.running_cost,
        &Field::Zero,
        0.0,
        Some(t),
        rem,
        bound,
        opts,
    )?;
    Ok(m[0].finish(opts.seed))
}

/// The same `v₁` through the space-time process `Y = (t+s, X_s)` on the
/// cylinder: `v₁ = e^{−λt}·v` where `v` solves the stationary problem with
/// running cost `e^{λ y₀}ℓ(y)` and discount `λ`.
pub fn estimate_v1_cylinder(
    problem: &NonstationaryProblem,
    spec: &ProcessSpec,
    t: f64,
    x: &[f64],
    discount: f64,
    opts: &McOptions,
) -> Result<MCEstimate, FkError> {
    problem.validate()?;
    problem.check_start(t, x)?;
    if spec.clock {
        return Err(FkError::InvalidProblem("pass the spatial spec; the clock is added here".into()));
    }
    let stationary = DirichletProblem::new(
        problem.cylinder(),
        Field::TimeWeighted { rate: discount, inner: Box::new(problem.running_cost.clone()) },
        Field::Zero,
        discount,
    );
    let mut y = vec![t];
    y.extend_from_slice(x);
    let v = estimate_v(&stationary, &spec.with_clock(), &y, opts)?;
    Ok(v.scaled((-discount * t).exp()))
}

/// Both routes to `v₁` and whether they agree within 3 combined SE.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct V1CrossCheck {
    pub direct: MCEstimate,
    pub cylinder: MCEstimate,
    pub agree: bool,
}

/// Runs both routes on independent streams.
pub fn estimate_v1_nonstationary(
    problem: &NonstationaryProblem,
    spec: &ProcessSpec,
    t: f64,
    x: &[f64],
    discount: f64,
    opts: &McOptions,
) -> Result<V1CrossCheck, FkError> {
    let direct = estimate_v1_direct(problem, spec, t, x, opts)?;
    let other = opts.clone().with_stream_offset(opts.stream_offset + opts.n);
    let cylinder = estimate_v1_cylinder(problem, spec, t, x, discount, &other)?;
    let se = (direct.std_error.powi(2) + cylinder.std_error.powi(2)).sqrt();
    let agree = (direct.mean - cylinder.mean).abs() <= 3.0 * se + 1e-12;
    Ok(V1CrossCheck { direct, cylinder, agree })
}

/// `v₁` on the grid `ts × xs` with common random numbers: each trajectory
/// simulates the noise once and every node reuses it, shifted to its start.
/// Node errors are then strongly correlated, which keeps difference
/// quotients of the grid data meaningful. Needs zero drift and a constant
/// running cost. Returned row-major in `t`.
pub fn estimate_v1_grid(
    problem: &NonstationaryProblem,
    spec: &ProcessSpec,
    ts: &[f64],
    xs: &[Vec<f64>],
    opts: &McOptions,
) -> Result<Vec<MCEstimate>, FkError> {
    problem.validate()?;
    spec.validate()?;
    if !spec.drift_is_zero() || spec.clock {
        return Err(FkError::Unsupported("grid estimator needs a drift-free spatial spec".into()));
    }
    let c = match &problem.running_cost {
        Field::Zero => 0.0,
        Field::Constant { value } => *value,
        _ => return Err(FkError::Unsupported("grid estimator needs a constant running cost".into())),
    };
    for &t in ts {
        if !(0.0..=problem.t_max).contains(&t) {
            return Err(ExitError::InvalidStart(vec![t]).into());
        }
    }
    let t_min = ts.iter().copied().fold(problem.t_max, f64::min);
    let span = problem.t_max - t_min;
    let d = spec.dim;
    let zero = vec![0.0; d];
    let shifted: Vec<Option<Domain>> = xs
        .iter()
        .map(|x| -> Result<Option<Domain>, FkError> {
            Ok(problem
                .base
                .contains(x, Membership::Closure)?
                .then(|| problem.base.translated(&x.iter().map(|v| -v).collect::<Vec<_>>())))
        })
        .collect::<Result<_, _>>()?;
    let nodes = ts.len() * xs.len();
    let parts = opts.map_chunks(|a, b| -> Result<Vec<Moments>, FkError> {
        let mut m = vec![Moments::default(); nodes];
        for i in a..b {
            let mut rng = RngStream::new(opts.seed, opts.stream_offset + i).rng();
            let path = simulate_path(spec, &zero, opts.h, span.max(opts.h), &mut rng)?;
            for (ix, dom) in shifted.iter().enumerate() {
                let zeta = match dom {
                    Some(dom) => path.exit_time_or_inf(dom, ExitMode::ClosureHit)?,
                    None => 0.0,
                };
                for (it, &t) in ts.iter().enumerate() {
                    let rem = problem.t_max - t;
                    m[it * xs.len() + ix].push(c * zeta.min(rem), zeta > rem && rem > 0.0);
                }
            }
        }
        Ok(m)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok((0..nodes)
        .map(|k| {
            let col: Vec<Moments> = parts.iter().map(|p| p[k]).collect();
            Moments::reduce(&col).finish(opts.seed)
        })
        .collect())
}

/// `p(x₀) = E[e^{−λζ}]`. Truncated paths contribute `e^{−λ·horizon}`.
pub fn estimate_discounted_exit(
    problem: &DirichletProblem,
    spec: &ProcessSpec,
    x0: &[f64],
    opts: &McOptions,
) -> Result<MCEstimate, FkError> {
    problem.validate()?;
    spec.validate()?;
    if !problem.domain.contains(x0, Membership::Closure)? {
        return Ok(MCEstimate::exact(1.0, opts.n, opts.seed));
    }
    let lambda = problem.discount;
    let horizon = opts.horizon.unwrap_or_else(|| problem.default_horizon());
    let parts = opts.map_chunks(|a, b| -> Result<Moments, FkError> {
        let mut m = Moments::default();
        for i in a..b {
            let mut rng = RngStream::new(opts.seed, opts.stream_offset + i).rng();
            let r = sample_exit_observed(spec, &problem.domain, x0, opts.h, horizon, &mut rng, &mut ())?;
            let z = if r.truncated { horizon } else { r.zeta };
            m.push((-lambda * z).exp(), r.truncated);
        }
        Ok(m)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Moments::reduce(&parts).finish(opts.seed))
}

/// Outcome of the boundary-loss witness construction at `x₀ ∈ ∂O`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub point: Vec<f64>,
    pub p: MCEstimate,
    /// the constructed boundary data
    pub g: Field,
    pub g_value: f64,
    /// error in `g(x₀)` propagated from `p`
    pub g_std_error: f64,
    pub v: MCEstimate,
    pub is_witness: bool,
}

/// Builds `g(x) = e^{−|x−x₀|}(‖ℓ‖/λ + 1)/(1 − p(x₀))`, re-estimates `v(x₀)`
/// with it and reports whether `v(x₀) < g(x₀)` beyond 3 SE on both sides.
/// `‖ℓ‖` is taken over the bounding box of the domain.
pub fn gamma_out_witness(
    problem: &DirichletProblem,
    spec: &ProcessSpec,
    x0: &[f64],
    opts: &McOptions,
) -> Result<WitnessReport, FkError> {
    let p = estimate_discounted_exit(problem, spec, x0, opts)?;
    let k = 3.0 * p.std_error;
    if p.mean.abs() <= k || (1.0 - p.mean).abs() <= k {
        return Err(FkError::DegenerateP { p: p.mean, se: p.std_error });
    }
    let (lo, hi) = problem.domain.bounding_box();
    let amp = (problem.running_cost.sup_abs_on(&lo, &hi) / problem.discount + 1.0) / (1.0 - p.mean);
    let g = Field::ExpDecay { center: x0.to_vec(), amplitude: amp };
    let g_std_error = amp * p.std_error / (1.0 - p.mean);
    let with_g = DirichletProblem { boundary_data: g.clone(), ..problem.clone() };
    let other = opts.clone().with_stream_offset(opts.stream_offset + opts.n);
    let v = estimate_v(&with_g, spec, x0, &other)?;
    let is_witness = v.mean + 3.0 * v.std_error < amp - 3.0 * g_std_error;
    Ok(WitnessReport { point: x0.to_vec(), p, g, g_value: amp, g_std_error, v, is_witness })
}

/// Grid results as CSV: `coord…, mean, std_error, n, truncated_fraction`.
pub fn write_grid_csv<W: io::Write>(
    mut w: W,
    coord_names: &[&str],
    coords: &[Vec<f64>],
    estimates: &[MCEstimate],
) -> io::Result<()> {
    writeln!(w, "{},mean,std_error,n,truncated_fraction", coord_names.join(","))?;
    for (c, e) in coords.iter().zip(estimates) {
        for v in c {
            write!(w, "{v},")?;
        }
        writeln!(w, "{},{},{},{}", e.mean, e.std_error, e.n, e.truncated_fraction)?;
    }
    Ok(())
}
