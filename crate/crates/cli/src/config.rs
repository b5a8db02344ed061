//! Experiment configuration, loaded from TOML.

use serde::{Deserialize, Serialize};

use fk_core::pde_oracle::CheckMode;
use fk_core::{Domain, Field, ProcessSpec};

use crate::error::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Monte Carlo controls. The worker count is a run flag, not part of the
/// configuration: results do not depend on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n: u64,
    pub h: f64,
    pub horizon: Option<f64>,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n: 10_000, h: 1e-3, horizon: None, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// relative paths resolve against the output directory; defaults to
    /// `<kind>.<format>`
    pub path: Option<String>,
    pub format: Format,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    /// `X = x + t + εW` on `(0,1)`, `ℓ = 1`, `g = 0`, `λ = 1`.
    #[serde(rename = "example-2.1")]
    Example21 {
        epsilon: f64,
        #[serde(default = "default_points")]
        points: usize,
    },
    /// The deterministic flow `(1, 2x₁)` on `(−1,1)×(0,1)`.
    #[serde(rename = "example-3.1")]
    Example31 {
        #[serde(default = "default_nx")]
        nx: usize,
        #[serde(default = "default_ny")]
        ny: usize,
    },
    /// The path sequence `ω_n` converging to uniform motion.
    #[serde(rename = "example-3.2-paths")]
    Example32Paths {
        #[serde(default = "default_ns")]
        ns: Vec<u32>,
    },
    RegularityScan {
        spec: ProcessSpec,
        domain: Domain,
        /// explicit points; when absent, `sample` boundary points are drawn
        #[serde(default)]
        points: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        sample: Option<usize>,
        #[serde(default = "default_dts")]
        dts: Vec<f64>,
        #[serde(default = "default_probe_n")]
        probe_n: u64,
        #[serde(default)]
        probe_h: Option<f64>,
    },
    GammaOutWitness {
        #[serde(default = "default_witness_points")]
        points: Vec<Vec<f64>>,
        #[serde(default = "ProcessSpec::uniform_motion")]
        spec: ProcessSpec,
        #[serde(default = "default_unit_interval")]
        domain: Domain,
        #[serde(default = "default_unit_cost")]
        running_cost: Field,
        #[serde(default = "default_one")]
        discount: f64,
    },
    /// `v₁` for `α`-stable noise with `ℓ ≡ 1` on `(0,T) × base`, and the
    /// pointwise semisolution check against `−∂ₜu − |∇u|^γ + (−Δ)^{α/2}u + 1 = 0`.
    FractionalHjb {
        alpha: f64,
        #[serde(default = "default_one")]
        t_max: f64,
        #[serde(default = "default_ball")]
        base: Domain,
        #[serde(default = "default_t_step")]
        t_step: f64,
        #[serde(default = "default_x_step")]
        x_step: f64,
        #[serde(default = "default_one")]
        gamma: f64,
        #[serde(default = "default_check_points")]
        check_points: Vec<[f64; 2]>,
        /// residual tolerance; defaults to three times the largest grid SE
        #[serde(default)]
        tolerance: Option<f64>,
    },
    ViscosityCheck {
        target: Target,
        points: Vec<f64>,
        mode: CheckMode,
        #[serde(default = "default_grid_step")]
        grid_step: f64,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
}

/// Candidate solutions of the one-dimensional example.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Target {
    ClosedFormV0,
    ClosedFormVEps { epsilon: f64 },
    Fd { epsilon: f64, m: usize },
}

fn default_points() -> usize {
    11
}
fn default_nx() -> usize {
    41
}
fn default_ny() -> usize {
    21
}
fn default_ns() -> Vec<u32> {
    vec![1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024]
}
fn default_dts() -> Vec<f64> {
    vec![0.1, 0.01, 0.001]
}
fn default_probe_n() -> u64 {
    100
}
fn default_witness_points() -> Vec<Vec<f64>> {
    vec![vec![0.0], vec![1.0]]
}
fn default_unit_interval() -> Domain {
    Domain::interval(0.0, 1.0)
}
fn default_unit_cost() -> Field {
    Field::constant(1.0)
}
fn default_one() -> f64 {
    1.0
}
fn default_ball() -> Domain {
    Domain::ball(vec![0.0], 1.0)
}
fn default_t_step() -> f64 {
    0.05
}
fn default_x_step() -> f64 {
    0.1
}
fn default_check_points() -> Vec<[f64; 2]> {
    let mut v = Vec::new();
    for t in [0.25, 0.5] {
        for x in [-0.6, -0.3, 0.0, 0.3, 0.6] {
            v.push([t, x]);
        }
    }
    v
}
fn default_grid_step() -> f64 {
    1e-3
}
fn default_tolerance() -> f64 {
    1e-4
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Example21 { .. } => "example-2.1",
            Experiment::Example31 { .. } => "example-3.1",
            Experiment::Example32Paths { .. } => "example-3.2-paths",
            Experiment::RegularityScan { .. } => "regularity-scan",
            Experiment::GammaOutWitness { .. } => "gamma-out-witness",
            Experiment::FractionalHjb { .. } => "fractional-hjb",
            Experiment::ViscosityCheck { .. } => "viscosity-check",
        }
    }
}

fn bad(message: impl Into<String>, hint: impl Into<String>) -> Result<(), CliError> {
    Err(CliError::config(message, hint))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            CliError::config(e.to_string().trim_end(), "compare with the annotated examples in configs/")
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let mc = &self.mc;
        if mc.n == 0 {
            return bad("mc.n must be positive", "set mc.n to the number of trajectories, e.g. 10000");
        }
        if !(mc.h > 0.0) || !mc.h.is_finite() {
            return bad(format!("mc.h must be positive, got {}", mc.h), "set mc.h to the Euler step, e.g. 1e-3");
        }
        if let Some(hz) = mc.horizon {
            if !(hz > 0.0) {
                return bad(format!("mc.horizon must be positive, got {hz}"), "remove mc.horizon to use the default");
            }
        }
        match &self.experiment {
            Experiment::Example21 { epsilon, points } => {
                if !(*epsilon >= 0.0) {
                    return bad(format!("epsilon must be >= 0, got {epsilon}"), "use epsilon = 0 for pure drift");
                }
                if *points < 2 {
                    return bad("points must be at least 2", "points = 11 gives x = 0, 0.1, ..., 1");
                }
            }
            Experiment::Example31 { nx, ny } => {
                if *nx < 2 || *ny < 2 {
                    return bad("nx and ny must be at least 2", "the reference grid is nx = 41, ny = 21");
                }
            }
            Experiment::Example32Paths { ns } => {
                if ns.is_empty() || ns.contains(&0) {
                    return bad("ns must be a non-empty list of positive integers", "e.g. ns = [1, 10, 100]");
                }
            }
            Experiment::RegularityScan { spec, domain, points, sample, dts, probe_n, probe_h } => {
                spec.validate().map_err(|e| CliError::config(e.to_string(), "check experiment.spec"))?;
                domain.validate().map_err(|e| CliError::config(e.to_string(), "check experiment.domain"))?;
                if spec.state_dim() != domain.dim() {
                    return bad("spec and domain dimensions differ", "make spec.dim match the domain");
                }
                if points.is_none() == sample.is_none() {
                    return bad("give exactly one of points or sample", "e.g. points = [[0.0], [1.0]] or sample = 32");
                }
                if dts.is_empty() || dts.windows(2).any(|w| w[1] >= w[0]) || dts.iter().any(|d| !(*d > 0.0)) {
                    return bad("dts must be positive and strictly decreasing", "e.g. dts = [0.1, 0.01, 0.001]");
                }
                if *probe_n == 0 {
                    return bad("probe_n must be positive", "e.g. probe_n = 100");
                }
                if let Some(h) = probe_h {
                    if !(*h > 0.0) {
                        return bad("probe_h must be positive", "remove probe_h to use a thousandth of the smallest window");
                    }
                }
            }
            Experiment::GammaOutWitness { points, spec, domain, discount, .. } => {
                spec.validate().map_err(|e| CliError::config(e.to_string(), "check experiment.spec"))?;
                domain.validate().map_err(|e| CliError::config(e.to_string(), "check experiment.domain"))?;
                if !(*discount > 0.0) {
                    return bad("discount must be positive", "e.g. discount = 1.0");
                }
                if points.is_empty() || points.iter().any(|p| p.len() != domain.dim()) {
                    return bad("points must be non-empty and match the domain dimension", "e.g. points = [[0.0]]");
                }
            }
            Experiment::FractionalHjb { alpha, t_max, base, t_step, x_step, gamma, tolerance, .. } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return bad(format!("alpha must be in (0, 2), got {alpha}"), "e.g. alpha = 1.5");
                }
                if !(*t_max > 0.0) || !(*t_step > 0.0) || !(*x_step > 0.0) {
                    return bad("t_max, t_step and x_step must be positive", "e.g. t_step = 0.05, x_step = 0.1");
                }
                if base.dim() != 1 {
                    return bad("fractional-hjb supports a one-dimensional base", "use base = ball([0.0], r) or an interval");
                }
                base.validate().map_err(|e| CliError::config(e.to_string(), "check experiment.base"))?;
                if !(*gamma >= 1.0) {
                    return bad("gamma must be >= 1", "e.g. gamma = 1.0");
                }
                if let Some(t) = tolerance {
                    if !(*t >= 0.0) {
                        return bad("tolerance must be >= 0", "remove tolerance to use three grid standard errors");
                    }
                }
            }
            Experiment::ViscosityCheck { target, points, mode, grid_step, tolerance } => {
                if points.is_empty() || points.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return bad("points must be a non-empty list in [0, 1]", "e.g. points = [0.0, 0.5, 1.0]");
                }
                if *mode == CheckMode::Nonstationary {
                    return bad("viscosity-check targets are stationary", "use mode = \"strong\" or \"generalized\"");
                }
                if !(*grid_step > 0.0 && *grid_step < 0.5) {
                    return bad("grid_step must be in (0, 0.5)", "e.g. grid_step = 1e-3");
                }
                if !(*tolerance >= 0.0) {
                    return bad("tolerance must be >= 0", "e.g. tolerance = 1e-4");
                }
                match target {
                    Target::ClosedFormV0 => {}
                    Target::ClosedFormVEps { epsilon } | Target::Fd { epsilon, .. } if !(*epsilon > 0.0) => {
                        return bad("target epsilon must be positive", "use kind = \"closed-form-v0\" for epsilon = 0")
                    }
                    Target::Fd { m, .. } if *m < 3 => return bad("fd target needs m >= 3", "e.g. m = 1001"),
                    _ => {}
                }
            }
        }
        Ok(())
    }
}
