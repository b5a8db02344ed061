//! Stepwise first-exit simulation.
//!
//! Each Euler step is split into its continuous part `[t_k, t_{k+1})`, a
//! straight segment to the pre-jump point, and the knot `t_{k+1}` carrying
//! the post-jump point. Crossings inside a continuous part are solved in
//! closed form against the domain's boundary pieces. For Brownian noise a
//! Brownian-bridge crossing test catches excursions between knots, and the
//! crossing time inside a straddling step is refined by eight bridge
//! bisections. Stable jumps are never refined: the exit is the jump itself
//! and the landing point is reported as the exit point.

use std::io;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::{MCEstimate, Moments};
use crate::geometry::{Domain, GeometryError, Membership};
use crate::levy::{step_count, ActiveNoise, LevyError, ProcessSpec, RngStream};
use crate::parallel::McOptions;
use crate::paths::PolyFlow;

/// Horizon used when the caller gives none and no discount is involved.
pub const DEFAULT_HORIZON: f64 = 20.0;

const BRIDGE_BISECTIONS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExitError {
    #[error("start point {0:?} is outside the closure of the domain")]
    InvalidStart(Vec<f64>),
    #[error("start point has dimension {got}, process state has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Outcome of one simulated trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitRecord {
    /// closure exit time `ζ`; `+∞` when truncated
    pub zeta: f64,
    /// open exit time `ζ̂`; `+∞` when not reached before the horizon
    pub zeta_hat: f64,
    pub exit_point: Vec<f64>,
    pub exit_point_hat: Vec<f64>,
    pub via_jump: bool,
    pub truncated: bool,
    pub steps: u64,
    /// time at which simulation stopped (`ζ` or the horizon)
    pub t_end: f64,
}

impl ExitRecord {
    pub fn csv_header(dim: usize) -> String {
        let mut s = String::from("zeta,zeta_hat,via_jump,truncated");
        for i in 0..dim {
            s.push_str(&format!(",exit_x{i}"));
        }
        for i in 0..dim {
            s.push_str(&format!(",exit_hat_x{i}"));
        }
        s
    }

    pub fn csv_row(&self) -> String {
        let mut s = format!("{},{},{},{}", self.zeta, self.zeta_hat, self.via_jump, self.truncated);
        for v in self.exit_point.iter().chain(&self.exit_point_hat) {
            s.push_str(&format!(",{v}"));
        }
        s
    }
}

/// Write records as CSV for auditing.
pub fn write_exit_csv<W: io::Write>(mut w: W, records: &[ExitRecord]) -> io::Result<()> {
    let dim = records.first().map_or(0, |r| r.exit_point.len());
    writeln!(w, "{}", ExitRecord::csv_header(dim))?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Receives the simulated path piece by piece, in time order, up to the
/// stopping time. `open_exit` is called once when `ζ̂` is reached, between
/// the pieces before and after it.
pub trait ExitObserver {
    /// Straight piece from `xa` at `t0` to `xb` at `t1`.
    fn segment(&mut self, t0: f64, t1: f64, xa: &[f64], xb: &[f64]);
    /// Piece of a polynomial flow on `[t0, t1]`.
    fn flow(&mut self, flow: &PolyFlow, t0: f64, t1: f64);
    fn open_exit(&mut self, _t: f64) {}
}

impl ExitObserver for () {
    #[inline]
    fn segment(&mut self, _: f64, _: f64, _: &[f64], _: &[f64]) {}
    #[inline]
    fn flow(&mut self, _: &PolyFlow, _: f64, _: f64) {}
}

pub fn sample_exit<R: Rng + ?Sized>(
    spec: &ProcessSpec,
    domain: &Domain,
    x0: &[f64],
    h: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<ExitRecord, ExitError> {
    sample_exit_observed(spec, domain, x0, h, horizon, rng, &mut ())
}

fn lerp_into(a: &[f64], b: &[f64], s: f64, out: &mut [f64]) {
    for i in 0..a.len() {
        out[i] = a[i] + s * (b[i] - a[i]);
    }
}

/// Probability that a Brownian bridge from `a` to `b` over `dt` leaves the
/// domain, treating each boundary piece as its tangent half-space.
/// `eps2_dt` is `ε²·dt`.
#[inline]
fn bridge_cross_prob(domain: &Domain, clock: bool, a: &[f64], b: &[f64], eps2_dt: f64) -> f64 {
    1.0 - bridge_stay(domain, 0, clock, a, b, eps2_dt)
}

#[inline(always)]
fn half_space_stay(da: f64, db: f64, eps2_dt: f64) -> f64 {
    if da <= 0.0 || db <= 0.0 {
        return 0.0;
    }
    let e = 2.0 * da * db / eps2_dt;
    if e >= 40.0 { 1.0 } else { -(-e).exp_m1() }
}

fn bridge_stay(domain: &Domain, off: usize, skip_time: bool, a: &[f64], b: &[f64], eps2_dt: f64) -> f64 {
    let pair = |lo: f64, hi: f64, u: f64, v: f64| {
        half_space_stay(u - lo, v - lo, eps2_dt) * half_space_stay(hi - u, hi - v, eps2_dt)
    };
    match domain {
        Domain::Interval { a: lo, b: hi } => pair(*lo, *hi, a[off], b[off]),
        Domain::Box { lo, hi } => (0..lo.len()).map(|i| pair(lo[i], hi[i], a[off + i], b[off + i])).product(),
        Domain::RectExample15 => pair(-1.0, 1.0, a[off], b[off]) * pair(0.0, 1.0, a[off + 1], b[off + 1]),
        Domain::Ball { center, radius } => {
            let dist = |x: &[f64]| {
                radius - center.iter().enumerate().map(|(i, c)| (x[off + i] - c).powi(2)).sum::<f64>().sqrt()
            };
            half_space_stay(dist(a), dist(b), eps2_dt)
        }
        Domain::Cylinder { t_max, base } => {
            let t = if skip_time { 1.0 } else { pair(0.0, *t_max, a[off], b[off]) };
            t * bridge_stay(base, off + 1, false, a, b, eps2_dt)
        }
        Domain::Predicate(_) => 1.0,
    }
}

struct Bridge<'a> {
    domain: &'a Domain,
    eps: f64,
    clock: bool,
}

impl Bridge<'_> {
    /// Locate a crossing inside `[ta, tb]` by bisection on bridge midpoints.
    /// `b_outside` says whether `xb` is outside the closure; otherwise both
    /// ends are inside and a bridge excursion is known to have happened.
    /// Returns the crossing time and writes the exit point to `point`.
    #[allow(clippy::too_many_arguments)]
    fn refine<R: Rng + ?Sized>(
        &self,
        mut ta: f64,
        mut tb: f64,
        xa: &[f64],
        xb: &[f64],
        mut b_outside: bool,
        rng: &mut R,
        point: &mut [f64],
    ) -> f64 {
        let d = xa.len();
        let off = self.clock as usize;
        let (mut a, mut b) = (xa.to_vec(), xb.to_vec());
        let mut m = vec![0.0; d];
        let e2 = self.eps * self.eps;
        for _ in 0..BRIDGE_BISECTIONS {
            let dt = tb - ta;
            let tm = 0.5 * (ta + tb);
            let sd = self.eps * (0.25 * dt).sqrt();
            for i in 0..d {
                let z: f64 = if i < off { 0.0 } else { rng.sample(StandardNormal) };
                m[i] = 0.5 * (a[i] + b[i]) + sd * z;
            }
            let go_left = if !self.domain.contains_unchecked(&m, Membership::Closure) {
                true
            } else {
                let pl = bridge_cross_prob(self.domain, self.clock, &a, &m, e2 * 0.5 * dt);
                let u: f64 = rng.random();
                if b_outside {
                    u < pl
                } else {
                    let pr = bridge_cross_prob(self.domain, self.clock, &m, &b, e2 * 0.5 * dt);
                    let tot = 1.0 - (1.0 - pl) * (1.0 - pr);
                    if tot > 0.0 { u * tot < pl } else { pl >= pr }
                }
            };
            if go_left {
                b_outside = !self.domain.contains_unchecked(&m, Membership::Closure);
                b.copy_from_slice(&m);
                tb = tm;
            } else {
                a.copy_from_slice(&m);
                ta = tm;
            }
        }
        if b_outside {
            let s = self.domain.first_exit_on_segment(&a, &b, false, true, Membership::Closure).unwrap_or(1.0);
            lerp_into(&a, &b, s, point);
            if s >= 1.0 { tb } else { ta + s * (tb - ta) }
        } else {
            lerp_into(&a, &b, 0.5, point);
            let p = self.domain.nearest_boundary_point(point);
            point.copy_from_slice(&p);
            0.5 * (ta + tb)
        }
    }
}

/// [`sample_exit`] feeding the path to `obs`.
pub fn sample_exit_observed<R: Rng + ?Sized, O: ExitObserver + ?Sized>(
    spec: &ProcessSpec,
    domain: &Domain,
    x0: &[f64],
    h: f64,
    horizon: f64,
    rng: &mut R,
    obs: &mut O,
) -> Result<ExitRecord, ExitError> {
    if !(h > 0.0) {
        return Err(LevyError::InvalidStep(h).into());
    }
    if !(horizon >= 0.0) {
        return Err(LevyError::InvalidHorizon(horizon).into());
    }
    let d = spec.state_dim();
    if x0.len() != d {
        return Err(ExitError::DimensionMismatch { expected: d, got: x0.len() });
    }
    if domain.dim() != d {
        return Err(GeometryError::DimensionMismatch { expected: domain.dim(), got: d }.into());
    }
    if !domain.contains_unchecked(x0, Membership::Closure) {
        return Err(ExitError::InvalidStart(x0.to_vec()));
    }
    let mut rec = ExitRecord {
        zeta: f64::INFINITY,
        zeta_hat: f64::INFINITY,
        exit_point: x0.to_vec(),
        exit_point_hat: x0.to_vec(),
        via_jump: false,
        truncated: false,
        steps: 0,
        t_end: horizon,
    };
    if !domain.contains_unchecked(x0, Membership::Open) {
        rec.zeta_hat = 0.0;
        obs.open_exit(0.0);
    }
    if let Some(flow) = spec.analytic_flow(x0) {
        run_flow(&flow, domain, horizon, &mut rec, obs);
        return Ok(rec);
    }

    let brownian = match spec.active_noise() {
        ActiveNoise::Brownian(eps) => Some(Bridge { domain, eps, clock: spec.clock }),
        _ => None,
    };
    let convex = domain.is_convex();
    let k_steps = step_count(h, horizon);
    let mut y = x0.to_vec();
    let (mut drift, mut left, mut next, mut tmp) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);

    for j in 1..=k_steps {
        let t0 = (j - 1) as f64 * h;
        let t1 = if j == k_steps { horizon } else { j as f64 * h };
        let dt = t1 - t0;
        let jump = spec.step(&y, dt, rng, &mut drift, &mut left, &mut next);
        rec.steps = j;

        // continuous part [t0, t1) from y to left
        let mut cursor = t0;
        let mut closure_exit: Option<f64> = None;
        let left_open = domain.contains_unchecked(&left, Membership::Open);
        if convex && left_open {
            if let Some(br) = &brownian {
                let p = bridge_cross_prob(domain, spec.clock, &y, &left, br.eps * br.eps * dt);
                if p > 0.0 && rng.random::<f64>() < p {
                    let tau = br.refine(t0, t1, &y, &left, false, rng, &mut tmp);
                    closure_exit = Some(tau);
                }
            }
        } else if let Some(br) = &brownian {
            if domain.first_exit_on_segment(&y, &left, false, false, Membership::Closure).is_some() {
                closure_exit = Some(br.refine(t0, t1, &y, &left, true, rng, &mut tmp));
            } else if rec.zeta_hat.is_infinite() {
                // grazes ∂O without leaving Ō
                if let Some(s) = domain.first_exit_on_segment(&y, &left, false, false, Membership::Open) {
                    let tau = t0 + s * dt;
                    lerp_into(&y, &left, s, &mut tmp);
                    obs.segment(t0, tau, &y, &tmp);
                    rec.zeta_hat = tau;
                    rec.exit_point_hat.copy_from_slice(&tmp);
                    obs.open_exit(tau);
                    cursor = tau;
                }
            }
        } else {
            if rec.zeta_hat.is_infinite() {
                if let Some(s) = domain.first_exit_on_segment(&y, &left, false, false, Membership::Open) {
                    let tau = t0 + s * dt;
                    lerp_into(&y, &left, s, &mut tmp);
                    obs.segment(t0, tau, &y, &tmp);
                    rec.zeta_hat = tau;
                    rec.exit_point_hat.copy_from_slice(&tmp);
                    obs.open_exit(tau);
                    cursor = tau;
                }
            }
            if let Some(s) = domain.first_exit_on_segment(&y, &left, false, false, Membership::Closure) {
                lerp_into(&y, &left, s, &mut tmp);
                closure_exit = Some(t0 + s * dt);
            }
        }

        if let Some(tau) = closure_exit {
            // tmp holds the exit point
            let tau = tau.max(cursor);
            if cursor == t0 {
                obs.segment(t0, tau, &y, &tmp);
            } else {
                let s = (tau - t0) / dt;
                let xc = rec.exit_point_hat.clone();
                lerp_into(&y, &left, s, &mut drift);
                obs.segment(cursor, tau, &xc, &drift);
            }
            if rec.zeta_hat.is_infinite() {
                rec.zeta_hat = tau;
                rec.exit_point_hat.copy_from_slice(&tmp);
                obs.open_exit(tau);
            }
            rec.zeta = tau;
            rec.exit_point.copy_from_slice(&tmp);
            rec.t_end = tau;
            return Ok(rec);
        }
        if cursor == t0 {
            obs.segment(t0, t1, &y, &left);
        } else {
            let xc = rec.exit_point_hat.clone();
            obs.segment(cursor, t1, &xc, &left);
        }

        if !jump && left_open {
            std::mem::swap(&mut y, &mut next);
            continue;
        }
        // knot t1 carries the post-jump point
        if rec.zeta_hat.is_infinite() && !domain.contains_unchecked(&next, Membership::Open) {
            rec.zeta_hat = t1;
            rec.exit_point_hat.copy_from_slice(&next);
            obs.open_exit(t1);
        }
        if !domain.contains_unchecked(&next, Membership::Closure) {
            rec.zeta = t1;
            rec.exit_point.copy_from_slice(&next);
            rec.via_jump = jump;
            rec.t_end = t1;
            return Ok(rec);
        }
        std::mem::swap(&mut y, &mut next);
    }
    rec.truncated = true;
    rec.exit_point.copy_from_slice(&y);
    Ok(rec)
}

fn run_flow<O: ExitObserver + ?Sized>(flow: &PolyFlow, domain: &Domain, horizon: f64, rec: &mut ExitRecord, obs: &mut O) {
    let mut cursor = 0.0;
    if rec.zeta_hat.is_infinite() {
        let hat = domain.first_exit_on_curve(&flow.coords, 0.0, f64::INFINITY, None, None, Membership::Open);
        if let Some(t) = hat.filter(|&t| t <= horizon) {
            obs.flow(flow, 0.0, t);
            rec.zeta_hat = t;
            rec.exit_point_hat = flow.eval(t);
            obs.open_exit(t);
            cursor = t;
        }
    }
    let cl = domain.first_exit_on_curve(&flow.coords, 0.0, f64::INFINITY, None, None, Membership::Closure);
    match cl.filter(|&t| t <= horizon) {
        Some(t) => {
            obs.flow(flow, cursor, t);
            rec.zeta = t;
            rec.exit_point = flow.eval(t);
            rec.t_end = t;
        }
        None => {
            obs.flow(flow, cursor, horizon);
            rec.truncated = true;
            rec.exit_point = flow.eval(horizon);
        }
    }
}

/// `n` independent exit records, in trajectory-id order.
pub fn sample_exits(
    spec: &ProcessSpec,
    domain: &Domain,
    x0: &[f64],
    opts: &McOptions,
) -> Result<Vec<ExitRecord>, ExitError> {
    spec.validate()?;
    let horizon = opts.horizon.unwrap_or(DEFAULT_HORIZON);
    let chunks = opts.map_chunks(|a, b| {
        (a..b)
            .map(|i| {
                let mut rng = RngStream::new(opts.seed, opts.stream_offset + i).rng();
                sample_exit(spec, domain, x0, opts.h, horizon, &mut rng)
            })
            .collect::<Result<Vec<_>, _>>()
    });
    let mut out = Vec::with_capacity(opts.n as usize);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Fraction of trajectories with `|ζ − ζ̂| ≤ h` (condition (C) on
/// skeletons). A truncated record counts as coinciding only if neither
/// exit time was reached.
pub fn exit_coincidence(
    spec: &ProcessSpec,
    domain: &Domain,
    x0: &[f64],
    opts: &McOptions,
) -> Result<MCEstimate, ExitError> {
    spec.validate()?;
    let horizon = opts.horizon.unwrap_or(DEFAULT_HORIZON);
    let parts = opts.map_chunks(|a, b| -> Result<Moments, ExitError> {
        let mut m = Moments::default();
        for i in a..b {
            let mut rng = RngStream::new(opts.seed, opts.stream_offset + i).rng();
            let r = sample_exit(spec, domain, x0, opts.h, horizon, &mut rng)?;
            let hit = if r.truncated { r.zeta_hat.is_infinite() } else { (r.zeta - r.zeta_hat).abs() <= opts.h };
            m.push(hit as u8 as f64, r.truncated);
        }
        Ok(m)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Moments::reduce(&parts).finish(opts.seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_motion_exit_is_exact() {
        let mut rng = RngStream::new(0, 0).rng();
        let r = sample_exit(&ProcessSpec::uniform_motion(), &Domain::interval(0.0, 1.0), &[0.25], 1e-3, 5.0, &mut rng)
            .unwrap();
        assert_eq!(r.zeta, 0.75);
        assert_eq!(r.zeta_hat, 0.75);
        assert_eq!(r.exit_point, vec![1.0]);
        assert!(!r.truncated);
    }

    #[test]
    fn start_outside_is_rejected() {
        let mut rng = RngStream::new(0, 0).rng();
        let e = sample_exit(&ProcessSpec::uniform_motion(), &Domain::interval(0.0, 1.0), &[1.5], 1e-3, 5.0, &mut rng);
        assert!(matches!(e, Err(ExitError::InvalidStart(_))));
    }

    #[test]
    fn brownian_ordering_and_boundary_start() {
        let spec = ProcessSpec::drifted_brownian(1.0);
        let o = Domain::interval(0.0, 1.0);
        for i in 0..200 {
            let mut rng = RngStream::new(1, i).rng();
            let r = sample_exit(&spec, &o, &[0.5], 1e-3, 20.0, &mut rng).unwrap();
            assert!(r.zeta_hat <= r.zeta);
            assert!(r.exit_point[0] >= -1e-12 && r.exit_point[0] <= 1.0 + 1e-12 || r.exit_point[0] < 0.0 || r.exit_point[0] > 1.0);
            let mut rng = RngStream::new(2, i).rng();
            let r = sample_exit(&spec, &o, &[0.0], 1e-3, 20.0, &mut rng).unwrap();
            assert_eq!(r.zeta_hat, 0.0);
            assert!(r.zeta <= 1e-3);
        }
    }
}
