use fk_core::regularity::*;
use fk_core::{Domain, ProcessSpec};

#[test]
fn probe_probabilities_shrink_with_the_window() {
    let spec = ProcessSpec::stable(0.6, 1.0, 2);
    let dom = Domain::ball(vec![0.0, 0.0], 1.0);
    let s = ProbeSettings { n: 200, ..ProbeSettings::default() };
    for x in [vec![1.0, 0.0], vec![0.9, 0.0], vec![0.0, 0.0]] {
        let r = probe_regularity(&spec, &dom, &x, &s, 0).unwrap();
        assert!(r.probe_probs.windows(2).all(|w| w[0].p_hat >= w[1].p_hat), "{r:?}");
    }
}

#[test]
fn small_alpha_without_drift_uses_the_second_rule() {
    let spec = ProcessSpec::stable(0.6, 1.0, 2);
    let dom = Domain::ball(vec![0.0, 0.0], 1.0);
    assert_eq!(classify_by_cone_rules(&spec, &dom, &[0.0, 1.0]).unwrap(), ConeRule::A2);
    let r = probe_regularity(&spec, &dom, &[0.0, 1.0], &ProbeSettings::default(), 0).unwrap();
    assert_eq!(r.classification, Classification::Regular);
    assert!(r.probe_consistent);
}

#[test]
fn drift_into_the_domain_defeats_the_cone_rules() {
    let spec = ProcessSpec::uniform_motion();
    let dom = Domain::interval(0.0, 1.0);
    assert_eq!(classify_by_cone_rules(&spec, &dom, &[0.0]).unwrap(), ConeRule::NoneApplicable);
    assert_eq!(classify_by_cone_rules(&spec, &dom, &[1.0]).unwrap(), ConeRule::A3);
    let mut out = Vec::new();
    let part = classify_points(&spec, &dom, &[vec![0.0], vec![1.0]], &ProbeSettings::default()).unwrap();
    write_regularity_csv(&mut out, &part.reports).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("x0,dt,p_hat,se,rule,classification\n"));
    assert!(text.contains("0,0.001,0,0,none,irregular"), "{text}");
}
