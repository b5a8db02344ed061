//! Càdlàg path skeletons and the path-level exit operators.
//!
//! Three concrete kinds stand in for elements of the Skorokhod space:
//!
//! * step skeletons, constant between knots;
//! * linear skeletons, piecewise linear between knots with marked jump knots
//!   carrying their pre-jump (left) value;
//! * analytic flows, one polynomial in `t` per coordinate.
//!
//! Skeletons are absorbed at their last knot. All exit times are computed
//! exactly on these objects: linear pieces and polynomial flows are
//! intersected with the domain's boundary pieces in closed form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Domain, GeometryError, Membership};
use crate::poly::Poly;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("path never left the set up to time {0}")]
    HorizonExceeded(f64),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Which stopping rule an exit time follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitMode {
    /// `ζ̂ = inf{t > 0 : ω_t ∉ O}`
    OpenHit,
    /// `ζ = inf{t > 0 : ω_t ∉ Ō}`
    ClosureHit,
    /// `ζ̄ = inf{t ≥ 0 : ω_t ∉ O}`
    Entrance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    StepSkeleton,
    LinearDriftSkeleton,
    AnalyticFlow,
}

/// A polynomial trajectory, one polynomial in absolute time per coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyFlow {
    pub coords: Vec<Poly>,
}

impl PolyFlow {
    pub fn new(coords: Vec<Poly>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.coords) {
            *o = p.eval(t);
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.coords.iter().map(|p| p.eval(t)).collect()
    }

    /// `s ↦ flow(h + s)`.
    pub fn shifted(&self, h: f64) -> PolyFlow {
        PolyFlow { coords: self.coords.iter().map(|p| p.taylor_shift(h)).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    /// index of the knot where the jump happens
    pub knot: usize,
    /// value of the path just before the jump
    pub left: Vec<f64>,
}

/// A right-continuous path with left limits.
///
/// JSON shape: `{kind, times[], points[][], jumps[{knot, left[]}], flow?}`,
/// where `flow` lists polynomial coefficients per coordinate for analytic
/// flows (whose `times`/`points` hold only the initial point).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathJson", into = "PathJson")]
pub struct CadlagPath {
    kind: PathKind,
    dim: usize,
    times: Vec<f64>,
    points: Vec<f64>,
    jumps: Vec<Jump>,
    flow: Option<PolyFlow>,
}

#[derive(Serialize, Deserialize)]
struct PathJson {
    kind: PathKind,
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
    #[serde(default)]
    jumps: Vec<Jump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flow: Option<Vec<Vec<f64>>>,
}

impl TryFrom<PathJson> for CadlagPath {
    type Error = PathError;

    fn try_from(j: PathJson) -> Result<Self, PathError> {
        match j.kind {
            PathKind::AnalyticFlow => {
                let coeffs = j.flow.ok_or_else(|| PathError::InvalidPath("analytic flow without coefficients".into()))?;
                if coeffs.iter().any(|c| c.len() > crate::poly::MAX_DEGREE + 1) {
                    return Err(PathError::InvalidPath("flow degree too high".into()));
                }
                Ok(CadlagPath::flow(PolyFlow::new(coeffs.iter().map(|c| Poly::new(c)).collect())))
            }
            PathKind::StepSkeleton => CadlagPath::step(j.times, j.points),
            PathKind::LinearDriftSkeleton => {
                CadlagPath::linear(j.times, j.points, j.jumps.into_iter().map(|jp| (jp.knot, jp.left)).collect())
            }
        }
    }
}

impl From<CadlagPath> for PathJson {
    fn from(p: CadlagPath) -> Self {
        let points = (0..p.len()).map(|k| p.point(k).to_vec()).collect();
        PathJson {
            kind: p.kind,
            times: p.times,
            points,
            jumps: p.jumps,
            flow: p.flow.map(|f| f.coords.iter().map(|c| c.coeffs().to_vec()).collect()),
        }
    }
}

impl CadlagPath {
    fn skeleton(kind: PathKind, times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self, PathError> {
        if times.is_empty() || times.len() != points.len() {
            return Err(PathError::InvalidPath("times and points must be non-empty and of equal length".into()));
        }
        if times[0] != 0.0 {
            return Err(PathError::InvalidPath("times must start at 0".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(PathError::InvalidPath("times must be strictly increasing".into()));
        }
        let dim = points[0].len();
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(PathError::InvalidPath("points must share a positive dimension".into()));
        }
        Ok(Self { kind, dim, times, points: points.concat(), jumps: Vec::new(), flow: None })
    }

    pub fn step(times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self, PathError> {
        Self::skeleton(PathKind::StepSkeleton, times, points)
    }

    /// Piecewise-linear skeleton; `jumps` lists `(knot, left value)` pairs.
    pub fn linear(times: Vec<f64>, points: Vec<Vec<f64>>, jumps: Vec<(usize, Vec<f64>)>) -> Result<Self, PathError> {
        let mut p = Self::skeleton(PathKind::LinearDriftSkeleton, times, points)?;
        let mut jumps: Vec<Jump> = jumps.into_iter().map(|(knot, left)| Jump { knot, left }).collect();
        jumps.sort_by_key(|j| j.knot);
        if jumps.windows(2).any(|w| w[0].knot == w[1].knot) {
            return Err(PathError::InvalidPath("duplicate jump knot".into()));
        }
        if jumps.iter().any(|j| j.knot == 0 || j.knot >= p.len() || j.left.len() != p.dim) {
            return Err(PathError::InvalidPath("jump knots must be in 1..len with matching dimension".into()));
        }
        p.jumps = jumps;
        Ok(p)
    }

    pub(crate) fn linear_from_flat(dim: usize, times: Vec<f64>, points: Vec<f64>, jumps: Vec<Jump>) -> Self {
        debug_assert_eq!(points.len(), dim * times.len());
        Self { kind: PathKind::LinearDriftSkeleton, dim, times, points, jumps, flow: None }
    }

    pub fn flow(flow: PolyFlow) -> Self {
        let x0 = flow.eval(0.0);
        Self { kind: PathKind::AnalyticFlow, dim: flow.dim(), times: vec![0.0], points: x0, jumps: Vec::new(), flow: Some(flow) }
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of knots.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn analytic_flow(&self) -> Option<&PolyFlow> {
        self.flow.as_ref()
    }

    pub fn is_continuous(&self) -> bool {
        match self.kind {
            PathKind::AnalyticFlow => true,
            PathKind::LinearDriftSkeleton => self.jumps.is_empty(),
            PathKind::StepSkeleton => (1..self.len()).all(|k| self.point(k) == self.point(k - 1)),
        }
    }

    fn jump_left(&self, knot: usize) -> Option<&[f64]> {
        self.jumps.binary_search_by_key(&knot, |j| j.knot).ok().map(|i| self.jumps[i].left.as_slice())
    }

    /// Value approached at the end of segment `k` (just before knot `k+1`).
    fn segment_end(&self, k: usize) -> &[f64] {
        match self.kind {
            PathKind::StepSkeleton => self.point(k),
            _ => self.jump_left(k + 1).unwrap_or_else(|| self.point(k + 1)),
        }
    }

    fn interpolate(&self, k: usize, t: f64) -> Vec<f64> {
        let (a, b) = (self.point(k), self.segment_end(k));
        let s = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
    }

    /// Right-continuous value `ω(t)`; absorbing after the last knot.
    pub fn evaluate(&self, t: f64) -> Vec<f64> {
        if let Some(f) = &self.flow {
            return f.eval(t);
        }
        let last = self.len() - 1;
        if t >= self.times[last] {
            return self.point(last).to_vec();
        }
        let k = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        match self.kind {
            PathKind::StepSkeleton => self.point(k).to_vec(),
            _ => self.interpolate(k, t),
        }
    }

    /// Left limit `ω⁻(t)`, with `ω⁻(0) = ω(0)`.
    pub fn left_limit(&self, t: f64) -> Vec<f64> {
        if self.flow.is_some() || t <= 0.0 {
            return self.evaluate(t.max(0.0));
        }
        let last = self.len() - 1;
        if t > self.times[last] {
            return self.point(last).to_vec();
        }
        // t_k < t ≤ t_{k+1}
        let k = self.times.partition_point(|&s| s < t) - 1;
        if t == self.times[k + 1] {
            return self.segment_end(k).to_vec();
        }
        match self.kind {
            PathKind::StepSkeleton => self.point(k).to_vec(),
            _ => self.interpolate(k, t),
        }
    }

    fn first_exit(&self, set: &Domain, membership: Membership, left: bool) -> Result<Option<f64>, PathError> {
        if set.dim() != self.dim {
            return Err(GeometryError::DimensionMismatch { expected: set.dim(), got: self.dim }.into());
        }
        if let Some(f) = &self.flow {
            return Ok(set.first_exit_on_curve(&f.coords, 0.0, f64::INFINITY, None, None, membership));
        }
        for k in 0..self.len() - 1 {
            let (a, b) = (self.point(k), self.segment_end(k));
            let hit = if left {
                set.first_exit_on_segment(a, b, false, true, membership)
            } else {
                set.first_exit_on_segment(a, b, k > 0, false, membership)
            };
            if let Some(s) = hit {
                let (t0, t1) = (self.times[k], self.times[k + 1]);
                return Ok(Some(if s >= 1.0 { t1 } else { t0 + s * (t1 - t0) }));
            }
        }
        let last = self.len() - 1;
        // constant tail on (t_last, ∞)
        Ok((!set.contains_unchecked(self.point(last), membership)).then_some(self.times[last]))
    }

    fn horizon_error(&self) -> PathError {
        PathError::HorizonExceeded(if self.flow.is_some() { f64::INFINITY } else { self.times[self.len() - 1] })
    }

    /// Exit time for the given stopping rule.
    pub fn exit_time(&self, set: &Domain, mode: ExitMode) -> Result<f64, PathError> {
        let t = match mode {
            ExitMode::OpenHit => self.first_exit(set, Membership::Open, false)?,
            ExitMode::ClosureHit => self.first_exit(set, Membership::Closure, false)?,
            ExitMode::Entrance => {
                if !set.contains(&self.evaluate(0.0), Membership::Open)? {
                    Some(0.0)
                } else {
                    self.first_exit(set, Membership::Open, false)?
                }
            }
        };
        t.ok_or_else(|| self.horizon_error())
    }

    /// Like [`exit_time`](Self::exit_time) with `+∞` for paths that never exit.
    pub fn exit_time_or_inf(&self, set: &Domain, mode: ExitMode) -> Result<f64, PathError> {
        match self.exit_time(set, mode) {
            Err(PathError::HorizonExceeded(_)) => Ok(f64::INFINITY),
            other => other,
        }
    }

    /// `τ⁻_B(ω) = inf{t > 0 : ω⁻_t ∉ B}` for the open set `B`.
    pub fn exit_time_left(&self, set: &Domain) -> Result<f64, PathError> {
        self.first_exit(set, Membership::Open, true)?.ok_or_else(|| self.horizon_error())
    }

    pub fn exit_time_left_or_inf(&self, set: &Domain) -> Result<f64, PathError> {
        match self.exit_time_left(set) {
            Err(PathError::HorizonExceeded(_)) => Ok(f64::INFINITY),
            other => other,
        }
    }

    /// `Π = ω(τ)` under right-continuous evaluation.
    pub fn exit_point(&self, set: &Domain, mode: ExitMode) -> Result<Vec<f64>, PathError> {
        Ok(self.evaluate(self.exit_time(set, mode)?))
    }

    /// `θ_h ω = ω(h + ·)`.
    pub fn shift(&self, h: f64) -> CadlagPath {
        assert!(h >= 0.0, "shift needs h >= 0");
        if h == 0.0 {
            return self.clone();
        }
        if let Some(f) = &self.flow {
            return CadlagPath::flow(f.shifted(h));
        }
        let first = self.times.partition_point(|&s| s <= h);
        let mut times = vec![0.0];
        let mut points = self.evaluate(h);
        let mut jumps = Vec::new();
        for k in first..self.len() {
            times.push(self.times[k] - h);
            points.extend_from_slice(self.point(k));
            if let Some(left) = self.jump_left(k) {
                jumps.push(Jump { knot: times.len() - 1, left: left.to_vec() });
            }
        }
        CadlagPath { kind: self.kind, dim: self.dim, times, points, jumps, flow: None }
    }
}
