//! Boundary regularity: a point is regular when the process started there
//! leaves the closure immediately with probability one. By the 0-1 law the
//! probability is 0 or 1, so a small-time exit probe separates the two
//! cases. Exterior-cone rules give regularity without sampling.

use std::io;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::Moments;
use crate::exit::{sample_exit, ExitError};
use crate::geometry::{Domain, GeometryError, Membership};
use crate::levy::{ActiveNoise, LevyError, ProcessSpec, RngStream};
use crate::parallel::map_chunks;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegularityError {
    #[error("step {h} is coarser than a tenth of the probe window {dt}")]
    StepTooCoarse { h: f64, dt: f64 },
    #[error("probe windows must be positive and strictly decreasing")]
    BadWindows,
    #[error(transparent)]
    Exit(#[from] ExitError),
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Which exterior-cone rule certifies regularity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeRule {
    /// stable noise with `σ > 0` and `α ≥ 1`
    A1,
    /// stable noise with `σ > 0` and zero drift
    A2,
    /// drift pointing into the exterior cone, `b(x)·v > 0`
    A3,
    #[serde(rename = "none")]
    NoneApplicable,
}

impl ConeRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConeRule::A1 => "A1",
            ConeRule::A2 => "A2",
            ConeRule::A3 => "A3",
            ConeRule::NoneApplicable => "none",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Regular,
    Irregular,
    Inconclusive,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Regular => "regular",
            Classification::Irregular => "irregular",
            Classification::Inconclusive => "inconclusive",
        }
    }
}

/// Estimated `P[ζ ≤ δt]` at one window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeProb {
    pub dt: f64,
    pub p_hat: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub point: Vec<f64>,
    /// sorted by decreasing window
    pub probe_probs: Vec<ProbeProb>,
    pub analytic_rule: ConeRule,
    pub classification: Classification,
    /// the probe at the smallest window does not contradict an applicable rule
    pub probe_consistent: bool,
}

impl RegularityReport {
    pub fn smallest_window(&self) -> Option<&ProbeProb> {
        self.probe_probs.last()
    }
}

/// Probe controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeSettings {
    /// strictly decreasing windows
    pub dts: Vec<f64>,
    /// paths per point
    pub n: u64,
    /// Euler step; `None` selects a thousandth of the smallest window
    pub h: Option<f64>,
    pub seed: u64,
    pub workers: usize,
    pub chunk: u64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self { dts: vec![0.1, 0.01, 0.001], n: 100, h: None, seed: 0, workers: 1, chunk: 64 }
    }
}

impl ProbeSettings {
    pub fn step(&self) -> f64 {
        self.h.unwrap_or_else(|| self.dts.iter().copied().fold(f64::INFINITY, f64::min) / 1000.0)
    }

    fn check(&self) -> Result<f64, RegularityError> {
        if self.dts.is_empty() || self.dts.iter().any(|d| !(*d > 0.0)) || self.dts.windows(2).any(|w| w[1] >= w[0]) {
            return Err(RegularityError::BadWindows);
        }
        let h = self.step();
        for &dt in &self.dts {
            if h > dt / 10.0 {
                return Err(RegularityError::StepTooCoarse { h, dt });
            }
        }
        Ok(h)
    }
}

/// Exterior-cone rules at a boundary point.
pub fn classify_by_cone_rules(spec: &ProcessSpec, domain: &Domain, x: &[f64]) -> Result<ConeRule, GeometryError> {
    let cone = domain.exterior_cone(x)?;
    if let ActiveNoise::Stable { alpha, .. } = spec.active_noise() {
        if alpha >= 1.0 {
            return Ok(ConeRule::A1);
        }
        if spec.drift_is_zero() {
            return Ok(ConeRule::A2);
        }
    }
    let mut b = vec![0.0; spec.state_dim()];
    spec.state_drift(x, &mut b);
    let dot: f64 = b.iter().zip(&cone.direction).map(|(a, v)| a * v).sum();
    Ok(if dot > 0.0 { ConeRule::A3 } else { ConeRule::NoneApplicable })
}

/// Small-time exit probe at `x`. Paths are shared across windows, so the
/// estimated probabilities are monotone in the window. Points outside the
/// closure exit at time 0.
pub fn probe_regularity(
    spec: &ProcessSpec,
    domain: &Domain,
    x: &[f64],
    settings: &ProbeSettings,
    stream_offset: u64,
) -> Result<RegularityReport, RegularityError> {
    let h = settings.check()?;
    spec.validate()?;
    let inside = domain.contains(x, Membership::Closure)?;
    let horizon = settings.dts[0];
    let k = settings.dts.len();
    let moments = if inside {
        let parts = map_chunks(settings.n, settings.chunk, settings.workers, |a, b| -> Result<Vec<Moments>, ExitError> {
            let mut m = vec![Moments::default(); k];
            for i in a..b {
                let mut rng = RngStream::new(settings.seed, stream_offset + i).rng();
                let r = sample_exit(spec, domain, x, h, horizon, &mut rng)?;
                for (j, &dt) in settings.dts.iter().enumerate() {
                    m[j].push((r.zeta <= dt) as u8 as f64, r.truncated);
                }
            }
            Ok(m)
        });
        let parts = parts.into_iter().collect::<Result<Vec<_>, _>>()?;
        (0..k)
            .map(|j| Moments::reduce(&parts.iter().map(|p| p[j]).collect::<Vec<_>>()))
            .collect::<Vec<_>>()
    } else {
        vec![Moments { n: settings.n, mean: 1.0, m2: 0.0, truncated: 0 }; k]
    };
    let probe_probs: Vec<ProbeProb> = settings
        .dts
        .iter()
        .zip(&moments)
        .map(|(&dt, m)| {
            let e = m.finish(settings.seed);
            ProbeProb { dt, p_hat: e.mean, std_error: e.std_error }
        })
        .collect();
    let rule = if domain.on_boundary(x)? {
        match classify_by_cone_rules(spec, domain, x) {
            Ok(r) => r,
            Err(GeometryError::NoConeData(_)) => ConeRule::NoneApplicable,
            Err(e) => return Err(e.into()),
        }
    } else {
        ConeRule::NoneApplicable
    };
    let last = probe_probs[k - 1];
    let probe_regular = last.p_hat >= 1.0 - 3.0 * last.std_error;
    let probe_irregular = last.p_hat <= 3.0 * last.std_error;
    let classification = if rule != ConeRule::NoneApplicable || probe_regular {
        Classification::Regular
    } else if probe_irregular {
        Classification::Irregular
    } else {
        Classification::Inconclusive
    };
    let probe_consistent = rule == ConeRule::NoneApplicable || probe_regular;
    Ok(RegularityReport { point: x.to_vec(), probe_probs, analytic_rule: rule, classification, probe_consistent })
}

/// Reports over sampled boundary points, split by classification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPartition {
    pub reports: Vec<RegularityReport>,
    pub regular: Vec<Vec<f64>>,
    pub irregular: Vec<Vec<f64>>,
    pub inconclusive: Vec<Vec<f64>>,
}

pub fn classify_points(
    spec: &ProcessSpec,
    domain: &Domain,
    points: &[Vec<f64>],
    settings: &ProbeSettings,
) -> Result<BoundaryPartition, RegularityError> {
    let mut part = BoundaryPartition { reports: vec![], regular: vec![], irregular: vec![], inconclusive: vec![] };
    for (j, x) in points.iter().enumerate() {
        let r = probe_regularity(spec, domain, x, settings, j as u64 * settings.n)?;
        match r.classification {
            Classification::Regular => part.regular.push(x.clone()),
            Classification::Irregular => part.irregular.push(x.clone()),
            Classification::Inconclusive => part.inconclusive.push(x.clone()),
        }
        part.reports.push(r);
    }
    Ok(part)
}

/// Samples `n_points` boundary points and classifies each.
pub fn classify_boundary<R: Rng + ?Sized>(
    spec: &ProcessSpec,
    domain: &Domain,
    n_points: usize,
    settings: &ProbeSettings,
    rng: &mut R,
) -> Result<BoundaryPartition, RegularityError> {
    let points = domain.sample_boundary(n_points, rng)?;
    classify_points(spec, domain, &points, settings)
}

/// One row per point and window: `coord…, dt, p_hat, se, rule, classification`.
pub fn write_regularity_csv<W: io::Write>(mut w: W, reports: &[RegularityReport]) -> io::Result<()> {
    let dim = reports.first().map_or(0, |r| r.point.len());
    let coords: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    writeln!(w, "{}{}dt,p_hat,se,rule,classification", coords.join(","), if dim > 0 { "," } else { "" })?;
    for r in reports {
        for p in &r.probe_probs {
            for v in &r.point {
                write!(w, "{v},")?;
            }
            writeln!(w, "{},{},{},{},{}", p.dt, p.p_hat, p.std_error, r.analytic_rule.as_str(), r.classification.as_str())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_motion_endpoints() {
        let s = ProbeSettings { n: 20, ..Default::default() };
        let spec = ProcessSpec::uniform_motion();
        let o = Domain::interval(0.0, 1.0);
        let r0 = probe_regularity(&spec, &o, &[0.0], &s, 0).unwrap();
        assert_eq!(r0.classification, Classification::Irregular);
        assert_eq!(r0.analytic_rule, ConeRule::NoneApplicable);
        let r1 = probe_regularity(&spec, &o, &[1.0], &s, 0).unwrap();
        assert_eq!(r1.classification, Classification::Regular);
        assert_eq!(r1.analytic_rule, ConeRule::A3);
        assert!(r1.probe_consistent);
    }

    #[test]
    fn interior_and_exterior_points() {
        let s = ProbeSettings { n: 20, ..Default::default() };
        let spec = ProcessSpec::drifted_brownian(1.0);
        let o = Domain::interval(0.0, 1.0);
        assert_eq!(probe_regularity(&spec, &o, &[0.5], &s, 0).unwrap().classification, Classification::Irregular);
        assert_eq!(probe_regularity(&spec, &o, &[1.5], &s, 0).unwrap().classification, Classification::Regular);
    }

    #[test]
    fn coarse_step_is_rejected() {
        let s = ProbeSettings { h: Some(1e-3), ..Default::default() };
        let e = probe_regularity(&ProcessSpec::uniform_motion(), &Domain::interval(0.0, 1.0), &[0.0], &s, 0);
        assert!(matches!(e, Err(RegularityError::StepTooCoarse { .. })));
    }

    #[test]
    fn cone_rule_examples() {
        let ball = Domain::ball(vec![0.0, 0.0], 1.0);
        assert_eq!(classify_by_cone_rules(&ProcessSpec::stable(1.5, 1.0, 2), &ball, &[1.0, 0.0]).unwrap(), ConeRule::A1);
        assert_eq!(classify_by_cone_rules(&ProcessSpec::stable(0.5, 1.0, 2), &ball, &[1.0, 0.0]).unwrap(), ConeRule::A2);
        let rule = classify_by_cone_rules(&ProcessSpec::example15(), &Domain::RectExample15, &[1.0, 0.5]).unwrap();
        assert_eq!(rule, ConeRule::A3);
    }
}
