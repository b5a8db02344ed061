//! Bounded domains: membership, crossing times along polynomial curves,
//! boundary sampling and exterior cones.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{bisect, Poly};

/// Which version of the set a membership test refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    Open,
    Closure,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point has dimension {got}, domain has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no exterior cone data for {0}")]
    NoConeData(String),
    #[error("point {0:?} is not on the boundary")]
    NotOnBoundary(Vec<f64>),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("predicate domains have no boundary sampler")]
    NoBoundarySampler,
}

pub type PointPredicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Escape hatch: a domain known only through membership predicates. Crossing
/// times fall back to scanning plus bisection and there is no cone data.
#[derive(Clone)]
pub struct PredicateDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub open: PointPredicate,
    pub closure: PointPredicate,
}

impl fmt::Debug for PredicateDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PredicateDomain").field("lo", &self.lo).field("hi", &self.hi).finish_non_exhaustive()
    }
}

/// A bounded open set `O` together with its closure.
///
/// Serialized as `{"shape": ..., "params": {...}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "shape", content = "params", rename_all = "kebab-case")]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// `(0, t_max) × base`; coordinate 0 is time.
    Cylinder { t_max: f64, base: Box<Domain> },
    /// `(−1, 1) × (0, 1)`.
    RectExample15,
    #[serde(skip)]
    Predicate(PredicateDomain),
}

/// One smooth piece of the boundary, written as `f(x) < 0` inside.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Constraint<'a> {
    /// `sign * (x[axis] - value)`
    Face { axis: usize, sign: f64, value: f64 },
    /// `|x[offset..] - center|² - radius²`
    Sphere { offset: usize, center: &'a [f64], radius: f64 },
}

impl Constraint<'_> {
    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Constraint::Face { axis, sign, value } => sign * (x[axis] - value),
            Constraint::Sphere { offset, center, radius } => {
                let mut s = 0.0;
                for (i, c) in center.iter().enumerate() {
                    let d = x[offset + i] - c;
                    s += d * d;
                }
                s - radius * radius
            }
        }
    }

    /// Points with `|f| ≤ band` count as boundary. Zero for flat faces; a few
    /// ulps of `r²` for spheres so that rounded sphere points are boundary.
    pub(crate) fn band(&self) -> f64 {
        match *self {
            Constraint::Face { .. } => 0.0,
            Constraint::Sphere { radius, .. } => 8.0 * f64::EPSILON * radius * radius,
        }
    }

    fn along(&self, curve: &[Poly]) -> Poly {
        match *self {
            Constraint::Face { axis, sign, value } => curve[axis].add_constant(-value).scale(sign),
            Constraint::Sphere { offset, center, radius } => {
                let mut acc = Poly::constant(-radius * radius);
                for (i, c) in center.iter().enumerate() {
                    let d = curve[offset + i].add_constant(-c);
                    acc = acc.add(&d.mul(&d));
                }
                acc
            }
        }
    }

    /// Distance from an inside point to this boundary piece.
    pub(crate) fn inside_distance(&self, x: &[f64]) -> f64 {
        match *self {
            Constraint::Face { .. } => -self.value(x),
            Constraint::Sphere { offset, center, radius } => {
                let mut s = 0.0;
                for (i, c) in center.iter().enumerate() {
                    let d = x[offset + i] - c;
                    s += d * d;
                }
                radius - s.sqrt()
            }
        }
    }

    fn outward_normal(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match *self {
            Constraint::Face { axis, sign, .. } => out[axis] = sign,
            Constraint::Sphere { offset, center, radius } => {
                for (i, c) in center.iter().enumerate() {
                    out[offset + i] = (x[offset + i] - c) / radius;
                }
            }
        }
    }

    fn project(&self, x: &mut [f64]) {
        match *self {
            Constraint::Face { axis, value, .. } => x[axis] = value,
            Constraint::Sphere { offset, center, radius } => {
                let mut s = 0.0;
                for (i, c) in center.iter().enumerate() {
                    s += (x[offset + i] - c).powi(2);
                }
                let n = s.sqrt();
                for (i, c) in center.iter().enumerate() {
                    x[offset + i] = if n > 0.0 {
                        c + radius * (x[offset + i] - c) / n
                    } else if i == 0 {
                        c + radius
                    } else {
                        *c
                    };
                }
            }
        }
    }
}

#[inline]
fn violates(value: f64, band: f64, membership: Membership) -> bool {
    match membership {
        Membership::Open => value >= -band,
        Membership::Closure => value > band,
    }
}

/// Truncated circular cone `{y : y·v > |y| cos θ, |y| < r}` relative to its apex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub direction: Vec<f64>,
    pub aperture: f64,
    pub radius: f64,
}

impl Cone {
    /// Whether the offset `y` from the apex lies in the truncated cone.
    pub fn contains(&self, y: &[f64]) -> bool {
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dot: f64 = y.iter().zip(&self.direction).map(|(a, b)| a * b).sum();
        norm < self.radius && dot > norm * self.aperture.cos()
    }

    /// Uniform sample from the truncated cone, by rejection from the ball.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.direction.len();
        loop {
            let y: Vec<f64> = (0..d).map(|_| self.radius * (2.0 * rng.random::<f64>() - 1.0)).collect();
            if self.contains(&y) {
                return y;
            }
        }
    }
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Self {
        Domain::Interval { a, b }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Domain::Ball { center, radius }
    }

    pub fn cylinder(t_max: f64, base: Domain) -> Self {
        Domain::Cylinder { t_max, base: Box::new(base) }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Box { lo, .. } => lo.len(),
            Domain::Ball { center, .. } => center.len(),
            Domain::Cylinder { base, .. } => base.dim() + 1,
            Domain::RectExample15 => 2,
            Domain::Predicate(p) => p.lo.len(),
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: &str| Err(GeometryError::InvalidDomain(m.to_string()));
        match self {
            Domain::Interval { a, b } if !(a < b) => bad("interval needs a < b"),
            Domain::Box { lo, hi } if lo.is_empty() || lo.len() != hi.len() => {
                bad("box needs matching non-empty lo and hi")
            }
            Domain::Box { lo, hi } if lo.iter().zip(hi).any(|(l, h)| !(l < h)) => bad("box needs lo < hi on every axis"),
            Domain::Ball { center, radius } if center.is_empty() || !(*radius > 0.0) => {
                bad("ball needs a non-empty center and radius > 0")
            }
            Domain::Cylinder { t_max, .. } if !(*t_max > 0.0) => bad("cylinder needs t_max > 0"),
            Domain::Cylinder { base, .. } => match **base {
                Domain::Cylinder { .. } => bad("nested cylinders are not supported"),
                _ => base.validate(),
            },
            _ => Ok(()),
        }
    }

    /// True for every built-in shape. Predicate domains are assumed non-convex.
    pub fn is_convex(&self) -> bool {
        !matches!(self, Domain::Predicate(_))
    }

    pub(crate) fn for_each_constraint<'a>(&'a self, f: &mut dyn FnMut(Constraint<'a>)) {
        self.constraints_from(0, f)
    }

    fn constraints_from<'a>(&'a self, off: usize, f: &mut dyn FnMut(Constraint<'a>)) {
        match self {
            Domain::Interval { a, b } => {
                f(Constraint::Face { axis: off, sign: -1.0, value: *a });
                f(Constraint::Face { axis: off, sign: 1.0, value: *b });
            }
            Domain::Box { lo, hi } => {
                for i in 0..lo.len() {
                    f(Constraint::Face { axis: off + i, sign: -1.0, value: lo[i] });
                    f(Constraint::Face { axis: off + i, sign: 1.0, value: hi[i] });
                }
            }
            Domain::RectExample15 => {
                f(Constraint::Face { axis: off, sign: -1.0, value: -1.0 });
                f(Constraint::Face { axis: off, sign: 1.0, value: 1.0 });
                f(Constraint::Face { axis: off + 1, sign: -1.0, value: 0.0 });
                f(Constraint::Face { axis: off + 1, sign: 1.0, value: 1.0 });
            }
            Domain::Ball { center, radius } => f(Constraint::Sphere { offset: off, center, radius: *radius }),
            Domain::Cylinder { t_max, base } => {
                f(Constraint::Face { axis: off, sign: -1.0, value: 0.0 });
                f(Constraint::Face { axis: off, sign: 1.0, value: *t_max });
                base.constraints_from(off + 1, f);
            }
            Domain::Predicate(_) => {}
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), GeometryError> {
        if x.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64], membership: Membership) -> Result<bool, GeometryError> {
        self.check_dim(x)?;
        Ok(self.contains_unchecked(x, membership))
    }

    #[inline]
    pub(crate) fn contains_unchecked(&self, x: &[f64], membership: Membership) -> bool {
        self.contains_from(0, x, membership)
    }

    fn contains_from(&self, off: usize, x: &[f64], m: Membership) -> bool {
        #[inline(always)]
        fn face(lo: f64, hi: f64, v: f64, m: Membership) -> bool {
            match m {
                Membership::Open => lo < v && v < hi,
                Membership::Closure => lo <= v && v <= hi,
            }
        }
        match self {
            Domain::Interval { a, b } => face(*a, *b, x[off], m),
            Domain::Box { lo, hi } => (0..lo.len()).all(|i| face(lo[i], hi[i], x[off + i], m)),
            Domain::RectExample15 => face(-1.0, 1.0, x[off], m) && face(0.0, 1.0, x[off + 1], m),
            Domain::Ball { center, radius } => {
                let c = Constraint::Sphere { offset: off, center, radius: *radius };
                !violates(c.value(x), c.band(), m)
            }
            Domain::Cylinder { t_max, base } => face(0.0, *t_max, x[off], m) && base.contains_from(off + 1, x, m),
            Domain::Predicate(p) => {
                let y = &x[off..];
                match m {
                    Membership::Open => (p.open)(y),
                    Membership::Closure => (p.closure)(y),
                }
            }
        }
    }

    /// `x ∈ Ō \ O`.
    pub fn on_boundary(&self, x: &[f64]) -> Result<bool, GeometryError> {
        Ok(self.contains(x, Membership::Closure)? && !self.contains_unchecked(x, Membership::Open))
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Interval { a, b } => (vec![*a], vec![*b]),
            Domain::Box { lo, hi } => (lo.clone(), hi.clone()),
            Domain::RectExample15 => (vec![-1.0, 0.0], vec![1.0, 1.0]),
            Domain::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Domain::Cylinder { t_max, base } => {
                let (mut lo, mut hi) = base.bounding_box();
                lo.insert(0, 0.0);
                hi.insert(0, *t_max);
                (lo, hi)
            }
            Domain::Predicate(p) => (p.lo.clone(), p.hi.clone()),
        }
    }

    /// Largest side of the bounding box.
    pub fn diameter_bound(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max)
    }

    /// The same set moved by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Domain {
        match self {
            Domain::Interval { a, b } => Domain::Interval { a: a + offset[0], b: b + offset[0] },
            Domain::Box { lo, hi } => Domain::Box {
                lo: lo.iter().zip(offset).map(|(l, o)| l + o).collect(),
                hi: hi.iter().zip(offset).map(|(h, o)| h + o).collect(),
            },
            Domain::RectExample15 => Domain::Box {
                lo: vec![-1.0 + offset[0], offset[1]],
                hi: vec![1.0 + offset[0], 1.0 + offset[1]],
            },
            Domain::Ball { center, radius } => Domain::Ball {
                center: center.iter().zip(offset).map(|(c, o)| c + o).collect(),
                radius: *radius,
            },
            Domain::Cylinder { t_max, base } => {
                // time offsets are not meaningful for a cylinder starting at 0
                Domain::Cylinder { t_max: *t_max, base: Box::new(base.translated(&offset[1..])) }
            }
            Domain::Predicate(p) => {
                let off = offset.to_vec();
                let (open, closure) = (p.open.clone(), p.closure.clone());
                let o2 = off.clone();
                Domain::Predicate(PredicateDomain {
                    lo: p.lo.iter().zip(&off).map(|(l, o)| l + o).collect(),
                    hi: p.hi.iter().zip(&off).map(|(h, o)| h + o).collect(),
                    open: Arc::new(move |x| {
                        let y: Vec<f64> = x.iter().zip(&off).map(|(a, o)| a - o).collect();
                        open(&y)
                    }),
                    closure: Arc::new(move |x| {
                        let y: Vec<f64> = x.iter().zip(&o2).map(|(a, o)| a - o).collect();
                        closure(&y)
                    }),
                })
            }
        }
    }

    /// Closest point of the boundary piece nearest to `x` (approximate at
    /// edges and corners).
    pub fn nearest_boundary_point(&self, x: &[f64]) -> Vec<f64> {
        let mut best: Option<(f64, Constraint<'_>)> = None;
        self.for_each_constraint(&mut |c| {
            let d = c.inside_distance(x).abs();
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, c));
            }
        });
        let mut y = x.to_vec();
        if let Some((_, c)) = best {
            c.project(&mut y);
        }
        y
    }

    /// First time in the window where `curve` leaves the set.
    ///
    /// `curve` holds one polynomial per coordinate in the window's own time
    /// variable. The interior `(lo, hi)` is always searched; `start`/`end`
    /// give the exact endpoint values when those endpoints belong to the
    /// window. Returns the infimum of the violating times.
    pub(crate) fn first_exit_on_curve(
        &self,
        curve: &[Poly],
        lo: f64,
        hi: f64,
        start: Option<&[f64]>,
        end: Option<&[f64]>,
        membership: Membership,
    ) -> Option<f64> {
        if let Some(p) = start {
            if !self.contains_unchecked(p, membership) {
                return Some(lo);
            }
        }
        let interior = if let Domain::Predicate(_) = self {
            self.scan_curve(curve, lo, hi, membership)
        } else {
            let mut best = f64::INFINITY;
            self.for_each_constraint(&mut |c| {
                let band = c.band();
                let g = c.along(curve);
                let (g, nonstrict) = match membership {
                    Membership::Open => (g.add_constant(band), true),
                    Membership::Closure => (g.add_constant(-band), false),
                };
                if let Some(t) = first_violation(&g, lo, hi.min(best), nonstrict) {
                    best = best.min(t);
                }
            });
            best.is_finite().then_some(best)
        };
        if interior.is_some() {
            return interior;
        }
        match end {
            Some(p) if !self.contains_unchecked(p, membership) => Some(hi),
            _ => None,
        }
    }

    /// Linear segment `xa → xb` on the unit window; returns the local `s`.
    pub(crate) fn first_exit_on_segment(
        &self,
        xa: &[f64],
        xb: &[f64],
        include_start: bool,
        include_end: bool,
        membership: Membership,
    ) -> Option<f64> {
        let mut curve = [Poly::zero(); 8];
        let d = xa.len();
        if d <= curve.len() {
            for i in 0..d {
                curve[i] = Poly::linear(xa[i], xb[i] - xa[i]);
            }
            self.first_exit_on_curve(
                &curve[..d],
                0.0,
                1.0,
                include_start.then_some(xa),
                include_end.then_some(xb),
                membership,
            )
        } else {
            let curve: Vec<Poly> = (0..d).map(|i| Poly::linear(xa[i], xb[i] - xa[i])).collect();
            self.first_exit_on_curve(&curve, 0.0, 1.0, include_start.then_some(xa), include_end.then_some(xb), membership)
        }
    }

    fn scan_curve(&self, curve: &[Poly], lo: f64, hi: f64, membership: Membership) -> Option<f64> {
        let hi = if hi.is_finite() { hi } else { lo + 1e3 };
        let at = |t: f64| -> bool {
            let p: Vec<f64> = curve.iter().map(|c| c.eval(t)).collect();
            self.contains_unchecked(&p, membership)
        };
        const SAMPLES: usize = 64;
        let mut prev = lo;
        for k in 1..=SAMPLES {
            let t = lo + (hi - lo) * k as f64 / SAMPLES as f64;
            let inside = if k == SAMPLES { at(0.5 * (prev + t)) && at(t - 1e-12 * (hi - lo)) } else { at(t) };
            if !inside {
                let f = |s: f64| if at(s) { -1.0 } else { 1.0 };
                return Some(bisect(f, prev, t, -1.0));
            }
            prev = t;
        }
        None
    }

    /// Exterior cone at a boundary point of a built-in shape.
    ///
    /// The axis is the normalised sum of the outward normals of the `k`
    /// active boundary pieces, the half-aperture `½·asin(1/√k)` and the
    /// radius 0.5.
    pub fn exterior_cone(&self, x: &[f64]) -> Result<Cone, GeometryError> {
        if let Domain::Predicate(_) = self {
            return Err(GeometryError::NoConeData("predicate domain".into()));
        }
        if !self.on_boundary(x)? {
            return Err(GeometryError::NotOnBoundary(x.to_vec()));
        }
        let d = x.len();
        let mut sum = vec![0.0; d];
        let mut n = vec![0.0; d];
        let mut k = 0usize;
        let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        self.for_each_constraint(&mut |c| {
            let tol = 1e-9 * scale + 2.0 * c.band();
            if c.value(x).abs() <= tol {
                c.outward_normal(x, &mut n);
                sum.iter_mut().zip(&n).for_each(|(s, v)| *s += v);
                k += 1;
            }
        });
        let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
        if k == 0 || norm == 0.0 {
            return Err(GeometryError::NoConeData(format!("no active boundary piece at {x:?}")));
        }
        Ok(Cone {
            direction: sum.iter().map(|v| v / norm).collect(),
            aperture: 0.5 * (1.0 / (k as f64).sqrt()).asin(),
            radius: 0.5,
        })
    }

    /// Boundary points, stratified over faces (proportional to face measure)
    /// or over angle for balls.
    pub fn sample_boundary<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>, GeometryError> {
        match self {
            Domain::Interval { a, b } => Ok((0..n).map(|i| vec![if i % 2 == 0 { *a } else { *b }]).collect()),
            Domain::Box { lo, hi } => Ok(sample_box_boundary(lo, hi, n, rng)),
            Domain::RectExample15 => Ok(sample_box_boundary(&[-1.0, 0.0], &[1.0, 1.0], n, rng)),
            Domain::Ball { center, radius } => Ok(sample_sphere(center, *radius, n, rng)),
            Domain::Cylinder { t_max, base } => {
                let lateral = t_max * base.boundary_measure();
                let lids = 2.0 * base.volume();
                let counts = proportional_counts(&[lateral, lids], n);
                let mut out = Vec::with_capacity(n);
                for (k, p) in base.sample_boundary(counts[0], rng)?.into_iter().enumerate() {
                    let t = t_max * (k as f64 + open_unit(rng)) / counts[0] as f64;
                    out.push(std::iter::once(t).chain(p).collect());
                }
                let (lo, hi) = base.bounding_box();
                let mut k = 0;
                while k < counts[1] {
                    let p: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * open_unit(rng)).collect();
                    if base.contains_unchecked(&p, Membership::Open) {
                        let t = if k % 2 == 0 { 0.0 } else { *t_max };
                        out.push(std::iter::once(t).chain(p).collect());
                        k += 1;
                    }
                }
                Ok(out)
            }
            Domain::Predicate(_) => Err(GeometryError::NoBoundarySampler),
        }
    }

    /// Lebesgue measure of the set.
    pub fn volume(&self) -> f64 {
        match self {
            Domain::Interval { a, b } => b - a,
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| h - l).product(),
            Domain::RectExample15 => 2.0,
            Domain::Ball { center, radius } => unit_ball_volume(center.len()) * radius.powi(center.len() as i32),
            Domain::Cylinder { t_max, base } => t_max * base.volume(),
            Domain::Predicate(p) => p.lo.iter().zip(&p.hi).map(|(l, h)| h - l).product(),
        }
    }

    /// Surface measure of the boundary (counting measure in one dimension).
    pub fn boundary_measure(&self) -> f64 {
        match self {
            Domain::Interval { .. } => 2.0,
            Domain::Box { lo, hi } => box_face_measures(lo, hi).iter().sum(),
            Domain::RectExample15 => 6.0,
            Domain::Ball { center, radius } => {
                let d = center.len();
                d as f64 * unit_ball_volume(d) * radius.powi(d as i32 - 1)
            }
            Domain::Cylinder { t_max, base } => t_max * base.boundary_measure() + 2.0 * base.volume(),
            Domain::Predicate(_) => f64::NAN,
        }
    }
}

/// First `t ∈ (lo, hi)` with `g(t) ≥ 0` (nonstrict) or `g(t) > 0`, as an
/// infimum: an interval of violation starting at `lo` returns `lo`.
fn first_violation(g: &Poly, lo: f64, hi: f64, nonstrict: bool) -> Option<f64> {
    if !(lo < hi) {
        return None;
    }
    if g.is_zero() {
        return nonstrict.then_some(lo);
    }
    let bad = |v: f64| if nonstrict { v >= 0.0 } else { v > 0.0 };
    let roots = g.roots_in(lo, hi);
    let mut prev = lo;
    for r in roots.iter().copied().chain(std::iter::once(hi)) {
        let mid = if r.is_finite() { 0.5 * (prev + r) } else { prev + 1.0 + prev.abs() };
        if mid > prev && bad(g.eval(mid)) {
            return Some(prev);
        }
        if r < hi && nonstrict {
            return Some(r);
        }
        prev = r;
    }
    None
}

pub(crate) fn unit_ball_volume(d: usize) -> f64 {
    std::f64::consts::PI.powf(d as f64 / 2.0) / libm::tgamma(d as f64 / 2.0 + 1.0)
}

fn box_face_measures(lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let d = lo.len();
    let mut out = Vec::with_capacity(2 * d);
    for i in 0..d {
        let m: f64 = (0..d).filter(|&j| j != i).map(|j| hi[j] - lo[j]).product();
        out.push(m);
        out.push(m);
    }
    out
}

/// Largest-remainder apportionment of `n` items to `weights`.
fn proportional_counts(weights: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut rest = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        counts[i] += 1;
        rest -= 1;
    }
    counts
}

/// Uniform on the open unit interval.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn sample_box_boundary<R: Rng + ?Sized>(lo: &[f64], hi: &[f64], n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let d = lo.len();
    let measures = box_face_measures(lo, hi);
    let counts = proportional_counts(&measures, n);
    let mut out = Vec::with_capacity(n);
    for (face, &m) in counts.iter().enumerate() {
        let axis = face / 2;
        let fixed = if face % 2 == 0 { lo[axis] } else { hi[axis] };
        for k in 0..m {
            let mut p = vec![0.0; d];
            let mut first_free = true;
            for j in 0..d {
                p[j] = if j == axis {
                    fixed
                } else {
                    // stratify along the first free axis, uniform on the others
                    let u = if first_free { (k as f64 + open_unit(rng)) / m as f64 } else { open_unit(rng) };
                    first_free = false;
                    lo[j] + (hi[j] - lo[j]) * u
                };
            }
            out.push(p);
        }
    }
    out
}

fn sample_sphere<R: Rng + ?Sized>(center: &[f64], radius: f64, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let d = center.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let dir: Vec<f64> = match d {
            1 => vec![if k % 2 == 0 { -1.0 } else { 1.0 }],
            2 => {
                let th = std::f64::consts::TAU * (k as f64 + open_unit(rng)) / n as f64;
                vec![th.cos(), th.sin()]
            }
            _ => loop {
                let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                if nz > 1e-8 {
                    break z.iter().map(|v| v / nz).collect();
                }
            },
        };
        out.push(center.iter().zip(&dir).map(|(c, u)| c + radius * u).collect());
    }
    out
}

/// Points on the quadratic flow's discontinuity curve `x₂ = x₁²`, `x₁ ∈ (−1, 0)`.
pub fn example15_ridge(n: usize) -> Vec<[f64; 2]> {
    (1..=n)
        .map(|k| {
            let x1 = -1.0 + k as f64 / (n + 1) as f64;
            [x1, x1 * x1]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn membership_basics() {
        let i = Domain::interval(0.0, 1.0);
        assert!(!i.contains(&[0.0], Membership::Open).unwrap());
        assert!(i.contains(&[0.0], Membership::Closure).unwrap());
        let b = Domain::ball(vec![0.0, 0.0], 1.0);
        assert!(b.contains(&[0.6, 0.8], Membership::Closure).unwrap());
        assert!(!b.contains(&[0.6, 0.8], Membership::Open).unwrap());
        let c = Domain::cylinder(1.0, Domain::interval(0.0, 1.0));
        assert!(!c.contains(&[1.0, 0.5], Membership::Open).unwrap());
        assert!(c.contains(&[1.0, 0.5], Membership::Closure).unwrap());
        assert!(matches!(i.contains(&[0.0, 1.0], Membership::Open), Err(GeometryError::DimensionMismatch { .. })));
    }

    #[test]
    fn cone_examples() {
        let b = Domain::ball(vec![0.0, 0.0], 1.0);
        let c = b.exterior_cone(&[1.0, 0.0]).unwrap();
        assert_eq!(c.direction, vec![1.0, 0.0]);
        assert!((c.aperture - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        let i = Domain::interval(0.0, 1.0);
        assert_eq!(i.exterior_cone(&[0.0]).unwrap().direction, vec![-1.0]);
        let sq = Domain::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
        let c = sq.exterior_cone(&[1.0, 1.0]).unwrap();
        assert!((c.aperture - std::f64::consts::PI / 8.0).abs() < 1e-15);
        assert!((c.direction[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn rect_sampler_side_proportions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = Domain::RectExample15.sample_boundary(400, &mut rng).unwrap();
        let bottom = pts.iter().filter(|p| p[1] == 0.0).count();
        let left = pts.iter().filter(|p| p[0] == -1.0).count();
        assert_eq!(bottom, 133);
        assert_eq!(left, 67);
        for p in &pts {
            assert!(Domain::RectExample15.on_boundary(p).unwrap());
        }
    }

    #[test]
    fn segment_crossing_is_closed_form() {
        let i = Domain::interval(0.0, 1.0);
        let s = i.first_exit_on_segment(&[0.5], &[1.5], false, false, Membership::Closure).unwrap();
        assert_eq!(s, 0.5);
        let b = Domain::ball(vec![0.0, 0.0], 1.0);
        let s = b.first_exit_on_segment(&[0.0, 0.0], &[2.0, 0.0], false, false, Membership::Open).unwrap();
        assert!((s - 0.5).abs() < 1e-14);
    }

    #[test]
    fn proportional_counts_sum() {
        assert_eq!(proportional_counts(&[2.0, 2.0, 1.0, 1.0], 200), vec![67, 67, 33, 33]);
    }
}
