use fk_core::feynman_kac::*;
use fk_core::pde_oracle::{example15_v, example15_zeta};
use fk_core::{Domain, Field, McOptions, ProcessSpec};

#[test]
fn regular_endpoint_takes_the_boundary_value() {
    let p = DirichletProblem::new(Domain::interval(0.0, 1.0), Field::constant(1.0), Field::constant(0.3), 1.0);
    let v = estimate_v(&p, &ProcessSpec::uniform_motion(), &[1.0], &McOptions::new(100, 1e-3, 1)).unwrap();
    assert_eq!(v.mean, 0.3);
    let v = estimate_v(&p, &ProcessSpec::drifted_brownian(1.0), &[0.0], &McOptions::new(2000, 1e-3, 1)).unwrap();
    assert!(v.agrees_with(0.3, 3.0, 1e-3), "{v:?}");
}

#[test]
fn open_and_closure_rules_agree_under_regularity() {
    let p = DirichletProblem::new(Domain::interval(0.0, 1.0), Field::constant(1.0), Field::constant(0.5), 1.0);
    let r = estimate_v_rules(&p, &ProcessSpec::drifted_brownian(1.0), &[0.3], &McOptions::new(10_000, 1e-3, 4)).unwrap();
    let se = (r.closure.std_error.powi(2) + r.open.std_error.powi(2)).sqrt();
    assert!((r.closure.mean - r.open.mean).abs() <= 3.0 * se + 1e-12);
}

#[test]
fn values_respect_the_a_priori_bound() {
    let p = DirichletProblem::new(
        Domain::ball(vec![0.0, 0.0], 1.0),
        Field::Gaussian { center: vec![0.2, 0.0], width: 0.5, amplitude: 2.0 },
        Field::ExpDecay { center: vec![1.0, 0.0], amplitude: -1.5 },
        0.5,
    );
    let bound = p.value_bound();
    for spec in [ProcessSpec::stable(0.8, 1.0, 2), ProcessSpec::stable(1.7, 0.5, 2)] {
        let v = estimate_v(&p, &spec, &[0.1, -0.3], &McOptions::new(2000, 1e-3, 2)).unwrap();
        assert!(v.mean.abs() <= bound);
    }
}

#[test]
fn deterministic_flow_values_are_exact() {
    let p = DirichletProblem::new(Domain::RectExample15, Field::constant(1.0), Field::Zero, 1.0);
    let spec = ProcessSpec::example15();
    for x in [[0.5, 0.5], [0.5, 0.1], [-0.5, 0.1], [-0.2, 0.9]] {
        let v = estimate_v(&p, &spec, &x, &McOptions::new(4, 1e-3, 0)).unwrap();
        assert!((v.mean - example15_v(&x).unwrap()).abs() < 1e-10, "{x:?}");
        assert_eq!(v.std_error, 0.0);
    }
    assert!((example15_zeta(&[0.5, 0.5]).unwrap() - (-0.5 + 0.75f64.sqrt())).abs() < 1e-12);
}

#[test]
fn discontinuity_across_the_ridge() {
    let p = DirichletProblem::new(Domain::RectExample15, Field::constant(1.0), Field::Zero, 1.0);
    let spec = ProcessSpec::example15();
    let o = McOptions::new(4, 1e-3, 0);
    let above = estimate_v(&p, &spec, &[-0.5, 0.26], &o).unwrap().mean;
    let below = estimate_v(&p, &spec, &[-0.5, 0.24], &o).unwrap().mean;
    assert!((above - below).abs() > 0.1);
    let a = estimate_v(&p, &spec, &[0.5, 0.5], &o).unwrap().mean;
    let b = estimate_v(&p, &spec, &[0.51, 0.5], &o).unwrap().mean;
    assert!((a - b).abs() < 0.02);
}

#[test]
fn nonstationary_routes_agree() {
    let prob = NonstationaryProblem::new(1.0, Domain::ball(vec![0.0], 1.0), Field::constant(1.0));
    let spec = ProcessSpec::stable(1.5, 1.0, 1);
    let c = estimate_v1_nonstationary(&prob, &spec, 0.4, &[0.2], 1.0, &McOptions::new(4000, 1e-3, 3)).unwrap();
    assert!(c.agree, "{c:?}");
    assert!(c.direct.mean >= 0.0 && c.direct.mean <= 0.6 + 3.0 * c.direct.std_error);
}
