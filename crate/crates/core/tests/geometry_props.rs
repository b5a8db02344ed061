use fk_core::{Domain, Membership, RngStream};
use proptest::prelude::*;

fn domains() -> Vec<Domain> {
    vec![
        Domain::interval(-0.5, 1.5),
        Domain::Box { lo: vec![0.0, -1.0], hi: vec![2.0, 1.0] },
        Domain::ball(vec![0.2, -0.1], 0.8),
        Domain::ball(vec![0.0, 0.0, 0.0], 1.0),
        Domain::RectExample15,
        Domain::cylinder(1.0, Domain::ball(vec![0.0], 1.0)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn open_is_inside_closure(k in 0usize..6, raw in prop::collection::vec(-2.0..2.0f64, 3)) {
        let dom = &domains()[k];
        let x = &raw[..dom.dim()];
        let open = dom.contains(x, Membership::Open).unwrap();
        let closed = dom.contains(x, Membership::Closure).unwrap();
        prop_assert!(!open || closed);
        prop_assert!(!(open && dom.on_boundary(x).unwrap()));
    }
}

#[test]
fn boundary_samples_lie_on_the_boundary() {
    let mut rng = RngStream::new(0, 0).rng();
    for dom in domains() {
        for p in dom.sample_boundary(200, &mut rng).unwrap() {
            assert!(dom.on_boundary(&p).unwrap(), "{dom:?}: {p:?}");
            let nearest = dom.nearest_boundary_point(&p);
            let gap: f64 = p.iter().zip(&nearest).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(gap <= 1e-12, "{dom:?}: {p:?} is {gap} from the boundary");
        }
    }
}

#[test]
fn terminal_slice_is_not_in_the_open_cylinder() {
    let q = Domain::cylinder(1.0, Domain::ball(vec![0.0], 1.0));
    assert!(!q.contains(&[1.0, 0.0], Membership::Open).unwrap());
    assert!(q.contains(&[1.0, 0.0], Membership::Closure).unwrap());
    assert!(q.contains(&[0.5, 0.0], Membership::Open).unwrap());
    assert!(q.on_boundary(&[0.3, 1.0]).unwrap());
}

#[test]
fn domains_round_trip_through_json() {
    for dom in domains() {
        let s = serde_json::to_string(&dom).unwrap();
        let back: Domain = serde_json::from_str(&s).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }
}
