use fk_core::pde_oracle::{frac_laplacian, generator_apply, FracLapOptions, TestFunction};
use fk_core::ProcessSpec;
use proptest::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

const PERIOD: f64 = 409.6;
const NODES: usize = 8192;

/// `(−Δ)^{α/2}f` on the periodic grid through the multiplier `|ξ|^α`.
fn spectral(f: impl Fn(f64) -> f64, alpha: f64) -> Vec<f64> {
    let dx = PERIOD / NODES as f64;
    let mut buf: Vec<Complex<f64>> =
        (0..NODES).map(|k| Complex::new(f(-0.5 * PERIOD + k as f64 * dx), 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(NODES).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let m = if k <= NODES / 2 { k as f64 } else { k as f64 - NODES as f64 };
        *c *= (2.0 * std::f64::consts::PI * m / PERIOD).abs().powf(alpha);
    }
    planner.plan_fft_inverse(NODES).process(&mut buf);
    buf.iter().map(|c| c.re / NODES as f64).collect()
}

fn node(k: usize) -> f64 {
    -0.5 * PERIOD + k as f64 * PERIOD / NODES as f64
}

fn sample_nodes() -> Vec<usize> {
    // 20 nodes spread over [−3.5, 3.0]
    (0..20).map(|j| NODES / 2 - 70 + 7 * j).collect()
}

#[test]
fn quadrature_matches_spectral_oracle() {
    let phi = TestFunction::gaussian(vec![0.2], 1.0, 1.0);
    for alpha in [0.5, 1.0, 1.5] {
        let reference = spectral(|x| phi.value(&[x]), alpha);
        let nodes = sample_nodes();
        let scale = nodes.iter().map(|&k| reference[k].abs()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for &k in &nodes {
            let q = frac_laplacian(&phi, &[node(k)], alpha, &FracLapOptions::default()).unwrap();
            worst = worst.max((q - reference[k]).abs());
        }
        eprintln!("alpha {alpha}: relative error {:.2e}", worst / scale);
        assert!(worst / scale <= 1e-3, "alpha {alpha}: relative error {}", worst / scale);
    }
}

#[test]
fn generator_of_pure_stable_noise_is_minus_the_operator() {
    let spec = ProcessSpec::stable(1.5, 1.0, 1);
    let phi = TestFunction::gaussian(vec![0.0], 1.0, 1.0);
    let reference = spectral(|x| phi.value(&[x]), 1.5);
    for k in sample_nodes().into_iter().step_by(4) {
        let g = generator_apply(&spec, &phi, &[node(k)], &FracLapOptions::default()).unwrap();
        assert!((g + reference[k]).abs() < 1e-3, "{g} vs {}", -reference[k]);
    }
    // |σ|^α scaling
    let spec2 = ProcessSpec::stable(1.5, 2.0, 1);
    let a = generator_apply(&spec, &phi, &[0.3], &FracLapOptions::default()).unwrap();
    let b = generator_apply(&spec2, &phi, &[0.3], &FracLapOptions::default()).unwrap();
    assert!((b - 2f64.powf(1.5) * a).abs() < 1e-12);
}

#[test]
fn dilation_scaling_identity() {
    let phi = TestFunction::touching(vec![0.1], vec![0.8], 1.0, vec![0.5], &[-1.0]);
    let s = 2.0;
    let o = FracLapOptions::default();
    for alpha in [0.5, 1.0, 1.5] {
        for x in [-0.7, 0.0, 0.4, 1.3] {
            let lhs = frac_laplacian(&phi.dilated(s), &[x], alpha, &o).unwrap();
            let rhs = s.powf(-alpha) * frac_laplacian(&phi, &[x / s], alpha, &o).unwrap();
            assert!((lhs - rhs).abs() <= 1e-3 * rhs.abs().max(1e-3), "{alpha} {x}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn linearity() {
    let phi = TestFunction::gaussian(vec![0.0, 0.1], 0.7, 1.0);
    let psi = TestFunction::CompactBump { center: vec![0.3, -0.2], radius: 1.5, amplitude: 2.0, sharpness: 1.0 };
    let (a, b) = (1.7, -0.6);
    let combo = TestFunction::Sum { terms: vec![phi.scaled(a), psi.scaled(b)] };
    let o = FracLapOptions::default();
    for x in [[0.0, 0.0], [0.5, 0.2], [-0.4, 0.9]] {
        let lhs = frac_laplacian(&combo, &x, 1.3, &o).unwrap();
        let rhs = a * frac_laplacian(&phi, &x, 1.3, &o).unwrap() + b * frac_laplacian(&psi, &x, 1.3, &o).unwrap();
        // panel layouts differ between the sum and its parts
        assert!((lhs - rhs).abs() < 1e-9 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
}

fn arb_function() -> impl Strategy<Value = TestFunction> {
    let gauss = (
        prop::collection::vec(-1.0..1.0f64, 2),
        prop::collection::vec(0.3..3.0f64, 2),
        -2.0..2.0f64,
        prop::collection::vec(-3.0..3.0f64, 2),
        prop::collection::vec(-5.0..5.0f64, 2),
    )
        .prop_map(|(center, widths, amplitude, tilt, curvature)| TestFunction::GaussianBump {
            center,
            widths,
            amplitude,
            tilt,
            curvature,
        });
    let compact = (prop::collection::vec(-1.0..1.0f64, 2), 1.0..3.0f64, -2.0..2.0f64, 0.5..2.0f64)
        .prop_map(|(center, radius, amplitude, sharpness)| TestFunction::CompactBump { center, radius, amplitude, sharpness });
    prop_oneof![gauss, compact]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn analytic_derivatives_match_differences(phi in arb_function(), y in prop::collection::vec(-1.5..1.5f64, 2)) {
        let e = 1e-5;
        let g = phi.gradient(&y);
        let h = phi.hessian(&y);
        for i in 0..2 {
            let mut p = y.clone();
            let mut m = y.clone();
            p[i] += e;
            m[i] -= e;
            let fd = (phi.value(&p) - phi.value(&m)) / (2.0 * e);
            prop_assert!(close(g[i], fd), "gradient {i}: {} vs {fd}", g[i]);
            let (gp, gm) = (phi.gradient(&p), phi.gradient(&m));
            for j in 0..2 {
                let fd = (gp[j] - gm[j]) / (2.0 * e);
                prop_assert!(close(h[j * 2 + i], fd), "hessian {j}{i}: {} vs {fd}", h[j * 2 + i]);
            }
        }
    }
}
