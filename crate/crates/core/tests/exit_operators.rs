use fk_core::exit::{sample_exits, ExitRecord};
use fk_core::levy::simulate_path;
use fk_core::poly::Poly;
use fk_core::paths::PolyFlow;
use fk_core::{CadlagPath, Domain, ExitMode, McOptions, ProcessSpec, RngStream};
use rand::Rng;

#[test]
fn left_limit_exit_has_no_order_with_hitting() {
    let b = Domain::interval(0.0, 3.0);
    // |t − 1| + 1_{[0,1)}(t)
    let kink = CadlagPath::linear(vec![0.0, 1.0, 5.0], vec![vec![2.0], vec![0.0], vec![4.0]], vec![(1, vec![1.0])]).unwrap();
    assert_eq!(kink.exit_time(&b, ExitMode::OpenHit).unwrap(), 1.0);
    assert_eq!(kink.exit_time_left(&b).unwrap(), 4.0);
    // 1 − t·1_{[0,1)}(t)
    let dip = CadlagPath::linear(vec![0.0, 1.0, 2.0], vec![vec![1.0], vec![1.0], vec![1.0]], vec![(1, vec![0.0])]).unwrap();
    assert_eq!(dip.exit_time_or_inf(&b, ExitMode::OpenHit).unwrap(), f64::INFINITY);
    assert_eq!(dip.exit_time_left(&b).unwrap(), 1.0);
}

#[test]
fn lifetime_is_discontinuous_at_the_uniform_motion() {
    let o = Domain::interval(0.0, 1.0);
    let omega0 = CadlagPath::flow(PolyFlow::new(vec![Poly::linear(0.0, 1.0)]));
    assert_eq!(omega0.exit_time(&o, ExitMode::ClosureHit).unwrap(), 1.0);
    assert_eq!(omega0.exit_time(&o, ExitMode::OpenHit).unwrap(), 1.0);
    assert_eq!(omega0.exit_time(&o, ExitMode::Entrance).unwrap(), 0.0);
    let mut last = f64::INFINITY;
    for n in [1u32, 2, 4, 8, 16, 64, 256, 1024] {
        let t = 1.0 / n as f64;
        // 1/n − 2s on [0, 1/n), then s
        let omega_n =
            CadlagPath::linear(vec![0.0, t, 2.0], vec![vec![t], vec![t], vec![2.0]], vec![(1, vec![-t])]).unwrap();
        let zeta = omega_n.exit_time(&o, ExitMode::ClosureHit).unwrap();
        assert_eq!(zeta, 0.5 * t);
        assert!(zeta < last);
        last = zeta;
    }
}

#[test]
fn shift_identity_on_flows() {
    let mut rng = RngStream::new(11, 0).rng();
    let o = Domain::interval(0.0, 1.0);
    for _ in 0..100 {
        let x = rng.random_range(0.0..1.0);
        let b = rng.random_range(0.2..3.0);
        let c = rng.random_range(-1.0..1.0);
        let w = CadlagPath::flow(PolyFlow::new(vec![Poly::new(&[x, b, c])]));
        let zeta = w.exit_time(&o, ExitMode::ClosureHit).unwrap();
        let zeta_hat = w.exit_time(&o, ExitMode::OpenHit).unwrap();
        let h = rng.random_range(0.0..zeta_hat);
        let shifted = w.shift(h).exit_time(&o, ExitMode::ClosureHit).unwrap();
        assert!((shifted - (zeta - h)).abs() <= 1e-12 * (1.0 + zeta), "{shifted} vs {}", zeta - h);
    }
}

#[test]
fn continuous_paths_have_equal_left_exits() {
    let spec = ProcessSpec::drifted_brownian(0.5);
    let o = Domain::interval(0.0, 1.0);
    for i in 0..50 {
        let mut rng = RngStream::new(3, i).rng();
        let p = simulate_path(&spec, &[0.5], 1e-3, 5.0, &mut rng).unwrap();
        assert!(p.is_continuous());
        assert_eq!(p.exit_time_or_inf(&o, ExitMode::OpenHit).unwrap(), p.exit_time_left_or_inf(&o).unwrap());
    }
}

#[test]
fn simulated_records_are_ordered() {
    let o = Domain::ball(vec![0.0, 0.0], 1.0);
    for spec in [ProcessSpec::stable(1.2, 1.0, 2), ProcessSpec::new(fk_core::Drift::Constant { value: vec![1.0, 0.0] }, fk_core::Noise::Brownian { epsilon: 0.3 }, 2)] {
        let records: Vec<ExitRecord> = sample_exits(&spec, &o, &[0.3, 0.2], &McOptions::new(5_000, 1e-3, 2)).unwrap();
        assert!(records.iter().all(|r| r.zeta_hat <= r.zeta));
    }
}
