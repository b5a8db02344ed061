//! One runner per experiment kind. Each returns its result tables; column
//! contracts are listed in the README.

use fk_core::exit::exit_coincidence;
use fk_core::feynman_kac::{
    estimate_v1_grid, estimate_v1_nonstationary, estimate_v_rules, gamma_out_witness, DirichletProblem, FkError,
    NonstationaryProblem,
};
use fk_core::geometry::example15_ridge;
use fk_core::paths::PolyFlow;
use fk_core::pde_oracle::{
    check_viscosity_point, closed_form_v0, closed_form_v_eps, example15_v, fd_solve_1d, Axis, CheckMode,
    CheckerConfig, Equation, GridFunction, Hamiltonian,
};
use fk_core::poly::Poly;
use fk_core::regularity::{classify_points, ProbeSettings};
use fk_core::{CadlagPath, Domain, ExitMode, Field, McOptions, ProcessSpec, RngStream};

use crate::config::{Experiment, ExperimentConfig, McConfig, Target};
use crate::error::{runtime, CliError};
use crate::output::{Cell, Table};

/// Runs the experiment; results do not depend on `workers`.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<Table>, CliError> {
    let mc = &cfg.mc;
    match &cfg.experiment {
        Experiment::Example21 { epsilon, points } => example_21(*epsilon, *points, mc, workers),
        Experiment::Example31 { nx, ny } => example_31(*nx, *ny, mc, workers),
        Experiment::Example32Paths { ns } => example_32(ns),
        Experiment::RegularityScan { spec, domain, points, sample, dts, probe_n, probe_h } => {
            let settings = ProbeSettings {
                dts: dts.clone(),
                n: *probe_n,
                h: *probe_h,
                seed: mc.seed,
                workers,
                ..ProbeSettings::default()
            };
            regularity_scan(spec, domain, points.as_deref(), *sample, &settings, mc.seed)
        }
        Experiment::GammaOutWitness { points, spec, domain, running_cost, discount } => {
            let problem = DirichletProblem::new(domain.clone(), running_cost.clone(), Field::Zero, *discount);
            witness(&problem, spec, points, mc, workers)
        }
        Experiment::FractionalHjb { alpha, t_max, base, t_step, x_step, gamma, check_points, tolerance } => {
            fractional_hjb(
                &HjbSetup {
                    alpha: *alpha,
                    t_max: *t_max,
                    base: base.clone(),
                    t_step: *t_step,
                    x_step: *x_step,
                    gamma: *gamma,
                    check_points: check_points.clone(),
                    tolerance: *tolerance,
                },
                mc,
                workers,
            )
        }
        Experiment::ViscosityCheck { target, points, mode, grid_step, tolerance } => {
            viscosity_check(target, points, *mode, *grid_step, *tolerance, workers)
        }
    }
}

fn mc_options(mc: &McConfig, workers: usize) -> McOptions {
    let mut o = McOptions::new(mc.n, mc.h, mc.seed).with_workers(workers);
    o.horizon = mc.horizon;
    o
}

fn unit_problem() -> DirichletProblem {
    DirichletProblem::new(Domain::interval(0.0, 1.0), Field::constant(1.0), Field::Zero, 1.0)
}

fn spec_for(epsilon: f64) -> ProcessSpec {
    if epsilon == 0.0 {
        ProcessSpec::uniform_motion()
    } else {
        ProcessSpec::drifted_brownian(epsilon)
    }
}

const MC_HINT: &str = "check the mc section (n, h, horizon) and the experiment parameters";

fn example_21(epsilon: f64, points: usize, mc: &McConfig, workers: usize) -> Result<Vec<Table>, CliError> {
    let problem = unit_problem();
    let spec = spec_for(epsilon);
    let mut t = Table::new(
        "values",
        &["x", "v_mc", "std_error", "v_open", "v_entrance", "n", "truncated_fraction", "v_closed_form"],
    );
    let base = mc_options(mc, workers);
    for i in 0..points {
        let x = i as f64 / (points - 1) as f64;
        let opts = base.clone().with_stream_offset(i as u64 * mc.n);
        let r = estimate_v_rules(&problem, &spec, &[x], &opts).map_err(runtime(MC_HINT))?;
        let exact = if epsilon == 0.0 { closed_form_v0(x) } else { closed_form_v_eps(epsilon, x) };
        let exact = exact.map_err(runtime("x must lie in [0, 1]"))?;
        t.push(vec![
            Cell::F(x),
            Cell::F(r.closure.mean),
            Cell::F(r.closure.std_error),
            Cell::F(r.open.mean),
            Cell::F(r.entrance.mean),
            Cell::U(r.closure.n),
            Cell::F(r.closure.truncated_fraction),
            Cell::F(exact),
        ]);
    }
    Ok(vec![t])
}

fn example_31(nx: usize, ny: usize, mc: &McConfig, workers: usize) -> Result<Vec<Table>, CliError> {
    let problem = DirichletProblem::new(Domain::RectExample15, Field::constant(1.0), Field::Zero, 1.0);
    let spec = ProcessSpec::example15();
    let opts = mc_options(mc, workers);
    let mut t = Table::new(
        "grid",
        &["x1", "x2", "v_mc", "std_error", "v_open", "v_entrance", "v_oracle", "abs_error", "on_ridge"],
    );
    let xa = Axis::new(-1.0, 1.0, nx);
    let ya = Axis::new(0.0, 1.0, ny);
    for i in 0..nx {
        for j in 0..ny {
            let x = [xa.node(i), ya.node(j)];
            let r = estimate_v_rules(&problem, &spec, &x, &opts).map_err(runtime(MC_HINT))?;
            let oracle = example15_v(&x).map_err(runtime("grid must cover [-1,1]x[0,1]"))?;
            let on_ridge = x[0] < 0.0 && (x[1] - x[0] * x[0]).abs() <= 1e-9;
            t.push(vec![
                Cell::F(x[0]),
                Cell::F(x[1]),
                Cell::F(r.closure.mean),
                Cell::F(r.closure.std_error),
                Cell::F(r.open.mean),
                Cell::F(r.entrance.mean),
                Cell::F(oracle),
                Cell::F((r.closure.mean - oracle).abs()),
                Cell::B(on_ridge),
            ]);
        }
    }
    // coincidence of ζ and ζ̂ along the ridge and at a reference point off it
    let mut c = Table::new("coincidence", &["x1", "x2", "on_ridge", "coincidence", "std_error"]);
    let mut probes: Vec<([f64; 2], bool)> = example15_ridge(9).into_iter().map(|p| (p, true)).collect();
    probes.push(([0.5, 0.5], false));
    for (p, on_ridge) in probes {
        let e = exit_coincidence(&spec, &problem.domain, &p, &opts).map_err(runtime(MC_HINT))?;
        c.push(vec![Cell::F(p[0]), Cell::F(p[1]), Cell::B(on_ridge), Cell::F(e.mean), Cell::F(e.std_error)]);
    }
    Ok(vec![t, c])
}

fn example_32(ns: &[u32]) -> Result<Vec<Table>, CliError> {
    let o = Domain::interval(0.0, 1.0);
    let hint = runtime("report this as a bug: the example paths are fixed");
    let omega0 = CadlagPath::flow(PolyFlow::new(vec![Poly::linear(0.0, 1.0)]));
    let zeta0 = omega0.exit_time(&o, ExitMode::ClosureHit).map_err(&hint)?;
    let mut t = Table::new("paths", &["n", "jump_time", "zeta_n", "zeta_hat_n", "zeta_left_n", "zeta_0"]);
    for &n in ns {
        let s = 1.0 / n as f64;
        // 1/n − 2t on [0, 1/n), then t
        let w = CadlagPath::linear(vec![0.0, s, 2.0], vec![vec![s], vec![s], vec![2.0]], vec![(1, vec![-s])])
            .map_err(&hint)?;
        t.push(vec![
            Cell::U(n as u64),
            Cell::F(s),
            Cell::F(w.exit_time_or_inf(&o, ExitMode::ClosureHit).map_err(&hint)?),
            Cell::F(w.exit_time_or_inf(&o, ExitMode::OpenHit).map_err(&hint)?),
            Cell::F(w.exit_time_left_or_inf(&o).map_err(&hint)?),
            Cell::F(zeta0),
        ]);
    }
    Ok(vec![t])
}

fn regularity_scan(
    spec: &ProcessSpec,
    domain: &Domain,
    points: Option<&[Vec<f64>]>,
    sample: Option<usize>,
    settings: &ProbeSettings,
    seed: u64,
) -> Result<Vec<Table>, CliError> {
    let hint = "probe windows must exceed ten Euler steps; check dts and probe_h";
    let points = match (points, sample) {
        (Some(p), _) => p.to_vec(),
        (None, Some(k)) => {
            // a stream the probes never use
            let mut rng = RngStream::new(seed, u64::MAX).rng();
            domain.sample_boundary(k, &mut rng).map_err(runtime("this domain cannot sample its boundary"))?
        }
        (None, None) => unreachable!("validated"),
    };
    let part = classify_points(spec, domain, &points, settings).map_err(runtime(hint))?;
    let d = domain.dim();
    let mut cols: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    cols.extend(["dt", "p_hat", "se", "rule", "classification", "probe_consistent"].map(String::from));
    let mut t = Table { name: "regularity".into(), columns: cols, rows: vec![] };
    for r in &part.reports {
        for p in &r.probe_probs {
            let mut row: Vec<Cell> = r.point.iter().map(|v| Cell::F(*v)).collect();
            row.extend([
                Cell::F(p.dt),
                Cell::F(p.p_hat),
                Cell::F(p.std_error),
                Cell::S(r.analytic_rule.as_str().into()),
                Cell::S(r.classification.as_str().into()),
                Cell::B(r.probe_consistent),
            ]);
            t.push(row);
        }
    }
    Ok(vec![t])
}

fn witness(
    problem: &DirichletProblem,
    spec: &ProcessSpec,
    points: &[Vec<f64>],
    mc: &McConfig,
    workers: usize,
) -> Result<Vec<Table>, CliError> {
    let d = problem.domain.dim();
    let mut cols: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    cols.extend(
        ["status", "p_hat", "p_se", "g_value", "g_se", "v_mc", "v_se", "is_witness"].map(String::from),
    );
    let mut t = Table { name: "witness".into(), columns: cols, rows: vec![] };
    for (i, x0) in points.iter().enumerate() {
        let opts = mc_options(mc, workers).with_stream_offset(2 * i as u64 * mc.n);
        let mut row: Vec<Cell> = x0.iter().map(|v| Cell::F(*v)).collect();
        match gamma_out_witness(problem, spec, x0, &opts) {
            Ok(w) => row.extend([
                Cell::S("estimated".into()),
                Cell::F(w.p.mean),
                Cell::F(w.p.std_error),
                Cell::F(w.g_value),
                Cell::F(w.g_std_error),
                Cell::F(w.v.mean),
                Cell::F(w.v.std_error),
                Cell::B(w.is_witness),
            ]),
            Err(FkError::DegenerateP { p, se }) => row.extend([
                Cell::S("degenerate-p".into()),
                Cell::F(p),
                Cell::F(se),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::B(false),
            ]),
            Err(e) => return Err(CliError::runtime(e.to_string(), "points must lie in the closure of the domain")),
        }
        t.push(row);
    }
    Ok(vec![t])
}

struct HjbSetup {
    alpha: f64,
    t_max: f64,
    base: Domain,
    t_step: f64,
    x_step: f64,
    gamma: f64,
    check_points: Vec<[f64; 2]>,
    tolerance: Option<f64>,
}

/// `v₁` with `ℓ ≡ 1` on a `(t, x)` lattice, then the semisolution checks
/// against `−∂ₜu − |∇u|^γ + (−Δ)^{α/2}u + 1 = 0`. In the generator
/// convention used here that equation has running cost `−1`, whose value
/// function is `−v₁`; that is the subsolution candidate, with `u ≡ 0` as
/// the supersolution.
fn fractional_hjb(s: &HjbSetup, mc: &McConfig, workers: usize) -> Result<Vec<Table>, CliError> {
    let spec = ProcessSpec::stable(s.alpha, 1.0, 1);
    let (lo, hi) = s.base.bounding_box();
    let ta = Axis::with_step(0.0, s.t_max, s.t_step);
    let xa = Axis::with_step(lo[0], hi[0], s.x_step);
    let ts: Vec<f64> = (0..ta.n).map(|i| ta.node(i)).collect();
    let xs: Vec<Vec<f64>> = (0..xa.n).map(|i| vec![xa.node(i)]).collect();
    let positive = NonstationaryProblem::new(s.t_max, s.base.clone(), Field::constant(1.0));
    let opts = mc_options(mc, workers);
    let est = estimate_v1_grid(&positive, &spec, &ts, &xs, &opts).map_err(runtime(MC_HINT))?;

    let mut grid = Table::new("grid", &["t", "x", "v1", "std_error", "n", "truncated_fraction", "upper_bound"]);
    for (k, e) in est.iter().enumerate() {
        let (t, x) = (ts[k / xs.len()], xs[k % xs.len()][0]);
        grid.push(vec![
            Cell::F(t),
            Cell::F(x),
            Cell::F(e.mean),
            Cell::F(e.std_error),
            Cell::U(e.n),
            Cell::F(e.truncated_fraction),
            Cell::F(s.t_max - t),
        ]);
    }

    let max_se = est.iter().map(|e| e.std_error).fold(0.0, f64::max);
    let tol = s.tolerance.unwrap_or(3.0 * max_se);
    let neg = GridFunction::new(vec![ta, xa], est.iter().map(|e| -e.mean).collect())
        .map_err(runtime("report this as a bug: grid shape mismatch"))?;
    let zero = GridFunction::new(vec![ta, xa], vec![0.0; ta.n * xa.n])
        .map_err(runtime("report this as a bug: grid shape mismatch"))?;
    let eq = Equation::Nonstationary {
        problem: NonstationaryProblem::new(s.t_max, s.base.clone(), Field::constant(-1.0)),
        spec: spec.clone(),
        hamiltonian: Some(Hamiltonian { gamma: s.gamma, coefficient: -1.0 }),
    };
    let cfg = CheckerConfig { tolerance: tol, workers, ..CheckerConfig::planar() };
    let check_hint = "check points must be lattice nodes of (t_step, x_step) inside the cylinder";

    let mut checks = Table::new(
        "checks",
        &[
            "t",
            "x",
            "v1",
            "tolerance",
            "subsolution_holds",
            "sub_tested",
            "sub_violations",
            "zero_supersolution_holds",
            "super_tested",
            "super_violations",
            "direct",
            "direct_se",
            "cylinder",
            "cylinder_se",
            "routes_agree",
        ],
    );
    for (i, p) in s.check_points.iter().enumerate() {
        let y = [p[0], p[1]];
        let v1 = -neg.eval(&y).ok_or_else(|| CliError::runtime(format!("{y:?} is off the lattice"), check_hint))?;
        let sub = check_viscosity_point(&neg, &eq, &y, CheckMode::Nonstationary, &cfg).map_err(runtime(check_hint))?;
        let sup = check_viscosity_point(&zero, &eq, &y, CheckMode::Nonstationary, &cfg).map_err(runtime(check_hint))?;
        // both routes on streams disjoint from the grid's
        let route_opts = opts.clone().with_stream_offset((2 * i as u64 + 1) * mc.n);
        let cross = estimate_v1_nonstationary(&positive, &spec, y[0], &y[1..], 1.0, &route_opts)
            .map_err(runtime(MC_HINT))?;
        checks.push(vec![
            Cell::F(y[0]),
            Cell::F(y[1]),
            Cell::F(v1),
            Cell::F(tol),
            Cell::B(sub.sub_holds()),
            Cell::U(sub.tested_plus as u64),
            Cell::U(sub.sub_violations as u64),
            Cell::B(sup.super_holds()),
            Cell::U(sup.tested_minus as u64),
            Cell::U(sup.super_violations as u64),
            Cell::F(cross.direct.mean),
            Cell::F(cross.direct.std_error),
            Cell::F(cross.cylinder.mean),
            Cell::F(cross.cylinder.std_error),
            Cell::B(cross.agree),
        ]);
    }
    Ok(vec![grid, checks])
}

fn viscosity_check(
    target: &Target,
    points: &[f64],
    mode: CheckMode,
    grid_step: f64,
    tolerance: f64,
    workers: usize,
) -> Result<Vec<Table>, CliError> {
    let (u, eps) = match target {
        Target::ClosedFormV0 => (
            GridFunction::try_from_fn(vec![Axis::with_step(0.0, 1.0, grid_step)], |x| closed_form_v0(x[0])),
            0.0,
        ),
        Target::ClosedFormVEps { epsilon } => (
            GridFunction::try_from_fn(vec![Axis::with_step(0.0, 1.0, grid_step)], |x| {
                closed_form_v_eps(*epsilon, x[0])
            }),
            *epsilon,
        ),
        Target::Fd { epsilon, m } => (fd_solve_1d(*epsilon, *m), *epsilon),
    };
    let u = u.map_err(runtime("check the target parameters"))?;
    let eq = Equation::Dirichlet { problem: unit_problem(), spec: spec_for(eps) };
    let cfg = CheckerConfig { tolerance, workers, ..CheckerConfig::default() };
    let axis = u.axes[0];
    let mut t = Table::new(
        "checks",
        &[
            "x",
            "mode",
            "passed",
            "sub_holds",
            "super_holds",
            "violation_count",
            "tested_count",
            "tested_plus",
            "tested_minus",
            "j_plus_empty",
            "j_minus_empty",
            "on_boundary",
        ],
    );
    for &p in points {
        // snap to the nearest lattice node
        let k = ((p - axis.lo) / axis.spacing()).round() as usize;
        let x = axis.node(k.min(axis.n - 1));
        let r = check_viscosity_point(&u, &eq, &[x], mode, &cfg).map_err(runtime("check grid_step and points"))?;
        t.push(vec![
            Cell::F(x),
            Cell::S(mode.as_str().into()),
            Cell::B(r.passed()),
            Cell::B(r.sub_holds()),
            Cell::B(r.super_holds()),
            Cell::U(r.violation_count as u64),
            Cell::U(r.tested_count as u64),
            Cell::U(r.tested_plus as u64),
            Cell::U(r.tested_minus as u64),
            Cell::B(r.j_plus_empty),
            Cell::B(r.j_minus_empty),
            Cell::B(r.on_boundary),
        ]);
    }
    Ok(vec![t])
}
