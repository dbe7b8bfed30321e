use std::f64::consts::PI;

use pasym::linalg::{dot, Mat3, Quat};
use pasym::ogroup::*;
use pasym::{Error, Transform};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn quat() -> impl Strategy<Value = Quat<f64>> {
    any::<u64>().prop_map(|s| random_quat(&mut pasym::rng::stream(s, &[])))
}

fn element() -> impl Strategy<Value = Transform> {
    (quat(), any::<bool>()).prop_map(|(q, imp)| OrthoTransform::from_quat(&q, imp))
}

fn unit_axis() -> impl Strategy<Value = [f64; 3]> {
    quat().prop_map(|q| q.to_mat().apply(&[0.0, 0.0, 1.0]))
}

#[test]
fn displacement_examples() {
    let i = Transform::identity();
    let quarter = Transform::rotation(&[0.0, 0.0, 1.0], PI / 2.0);
    assert!(displacement_distance(&i, &i, 1.0).abs() < TOL);
    assert!((displacement_distance(&i, &quarter, 1.0) - 2f64.sqrt()).abs() < TOL);
    assert!((displacement_distance(&i, &Transform::inversion(), 2.5) - 5.0).abs() < TOL);
    assert!((geodesic_distance(&i, &quarter).unwrap() - PI / 2.0).abs() < TOL);
    assert_eq!(
        geodesic_distance(&i, &Transform::inversion()).unwrap_err(),
        Error::ComponentMismatch
    );
}

#[test]
fn classification_examples() {
    let tol = DEFAULT_CLASSIFY_TOL_DEG.to_radians();
    let m = OrthoTransform::new(Mat3::diag(1.0, 1.0, -1.0)).unwrap();
    let c = classify(&m, tol).unwrap();
    assert_eq!(c.kind, TransformKind::PlaneReflection);
    assert!((dot(&c.axis.unwrap(), &[0.0, 0.0, 1.0]).abs() - 1.0).abs() < TOL);

    let c = classify(&Transform::rotation(&[0.0, 0.0, 1.0], 2.0 * PI / 5.0), tol).unwrap();
    assert_eq!(c.kind, TransformKind::Rotation);
    assert!((c.angle.to_degrees() - 72.0).abs() < 1e-9);
    assert!((c.axis.unwrap()[2] - 1.0).abs() < TOL);

    assert_eq!(
        classify(&Transform::inversion(), tol).unwrap().kind,
        TransformKind::PointInversion
    );
    assert!(matches!(
        OrthoTransform::new(Mat3::diag(1.0, 2.0, 1.0)),
        Err(Error::NotOrthogonal(_))
    ));
}

#[test]
fn net_sizes_follow_the_packing_bound() {
    let rho = 0.3;
    let packing = 4.0 * PI / (rho - f64::sin(rho));
    assert!((packing - 2.8e3).abs() < 100.0, "{packing}");
    let net = Net::with_radius(rho, 1.0, DEFAULT_NET_CAP).unwrap();
    assert!(
        (net.len() as f64) <= 64.0 * packing,
        "{} elements",
        net.len()
    );
    assert!(net.covering_bound() <= rho);

    let coarse = Net::with_radius(PI, 1.0, DEFAULT_NET_CAP).unwrap();
    assert_eq!(coarse.len(), 2);
    assert!(covering_certificate(&coarse, 1000, 3) <= 2.0 + TOL);

    assert!(matches!(
        build_net::<f64>(1e-7, 5.0, 1.0),
        Err(Error::ExcessiveNetSize { .. })
    ));
}

type Net = TransformNet<f64>;

#[test]
fn covering_certificate_stays_below_rho() {
    for rho in [0.1, 0.3, 0.6] {
        let net = Net::with_radius(rho, 1.0, DEFAULT_NET_CAP).unwrap();
        let gap = covering_certificate(&net, 100_000, 11);
        assert!(gap <= rho, "rho {rho}: gap {gap}");
    }
    // A net containing the queried elements exactly.
    let elems: Vec<Transform> = (0..20)
        .map(|s| {
            OrthoTransform::from_quat(&random_quat(&mut pasym::rng::stream(s, &[])), s % 2 == 0)
        })
        .collect();
    let net = Net::from_elements(&elems, 0.1, 1.0);
    for e in &elems {
        let single = Net::from_elements(std::slice::from_ref(e), 0.1, 1.0);
        assert!(displacement_distance(e, &single.element(0), 1.0) < 1e-9);
    }
    assert!(covering_certificate(&net, 10, 0) <= 2.0);
}

#[test]
fn carving_examples() {
    let z = [0.0, 0.0, 1.0];
    let net = Net::from_elements(
        &[
            Transform::rotation(&z, PI),
            Transform::rotation(&z, 2.0 * PI / 3.0),
            Transform::reflection(&z),
            Transform::rotation(&[1.0, 0.0, 0.0], PI),
            Transform::identity(),
            Transform::inversion(),
        ],
        0.1,
        1.0,
    );
    let carved = net.carve(&[Transform::rotation(&z, PI)], 10.0);
    assert!(!carved.is_active(0) && !carved.is_active(1));
    assert!(
        carved.is_active(2),
        "a rotation carve must leave reflections alone"
    );
    assert!(carved.is_active(3) && carved.is_active(5));
    assert!(
        carved.is_active(4),
        "the identity has no axis and sits outside the carve ball"
    );

    let all = net.carve(&[Transform::rotation(&[0.3, 0.1, 0.2], 0.4)], 180.0);
    assert_eq!(all.active_indices(), vec![2, 5]);
}

#[test]
fn nfold_examples() {
    let half = nfold_members::<f64>(&[0.0, 0.0, 1.0], 2).unwrap();
    assert_eq!(half.len(), 1);
    assert!((half[0].classify(1e-6).angle - PI).abs() < 1e-9);
    let quarter = nfold_members::<f64>(&[0.0, 0.0, 1.0], 4).unwrap();
    for (i, t) in quarter.iter().enumerate() {
        let want = Transform::rotation(&[0.0, 0.0, 1.0], PI / 2.0 * (i + 1) as f64);
        assert!(displacement_distance(t, &want, 1.0) < 1e-9);
    }
    assert!(nfold_members::<f64>(&[0.0, 0.0, 1.0], 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn elements_are_orthogonal(t in element()) {
        let m = t.matrix();
        prop_assert!((m.transpose() * *m - Mat3::identity()).max_abs() <= TOL);
        prop_assert!((m.det().abs() - 1.0).abs() <= TOL);
        prop_assert_eq!(m.det() > 0.0, t.is_proper());
    }

    #[test]
    fn metric_axioms(a in element(), b in element(), c in element(), r in 0.1f64..5.0) {
        let d = |x: &Transform, y: &Transform| displacement_distance(x, y, r);
        prop_assert!(d(&a, &a).abs() <= TOL);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= TOL);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + TOL);
        if d(&a, &b) <= TOL {
            prop_assert!((*a.matrix() - *b.matrix()).max_abs() <= 1e-6);
        }
        prop_assert!((d(&a.flip(), &b.flip()) - d(&a, &b)).abs() <= TOL);
    }

    #[test]
    fn displacement_is_bounded_by_geodesic(q1 in quat(), q2 in quat(), imp in any::<bool>(), r in 0.1f64..5.0) {
        let (a, b) = (OrthoTransform::from_quat(&q1, imp), OrthoTransform::from_quat(&q2, imp));
        prop_assert!(displacement_distance(&a, &b, r) <= r * geodesic_distance(&a, &b).unwrap() + TOL);
    }

    #[test]
    fn classification_is_consistent(t in element()) {
        let c = t.classify(DEFAULT_CLASSIFY_TOL_DEG.to_radians());
        prop_assert_eq!(c.kind.is_proper(), t.is_proper());
        if let Some(a) = c.axis {
            prop_assert!((dot(&a, &a) - 1.0).abs() <= 1e-9);
        }
        prop_assert!((*t.compose(&t.inverse()).matrix() - Mat3::identity()).max_abs() <= TOL);
    }

    #[test]
    fn nfold_members_classify_back(axis in unit_axis(), n in 2usize..=12) {
        let members = nfold_members(&axis, n).unwrap();
        for (i, t) in members.iter().enumerate() {
            let c = t.classify(1e-6);
            let k = i + 1;
            let want = 2.0 * PI * k.min(n - k) as f64 / n as f64;
            prop_assert_eq!(c.kind, TransformKind::Rotation);
            prop_assert!((c.angle - want).abs() <= 1e-6);
            prop_assert!((dot(&c.axis.unwrap(), &axis).abs() - 1.0).abs() <= 1e-6);
        }
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let prod = members[i].compose(&members[j]);
                let s = (i + 1 + j + 1) % n;
                let want = if s == 0 { Transform::identity() } else { members[s - 1] };
                prop_assert!(displacement_distance(&prod, &want, 1.0) <= 1e-9);
            }
        }
    }

    #[test]
    fn carving_stays_in_its_component(axis in unit_axis(), angle in 0.3f64..3.0, probe in element(), deg in 1.0f64..60.0) {
        let rot = Transform::rotation(&axis, angle);
        let regions = CarveRegion::around(&rot, deg.to_radians());
        let q = probe.proper_quat();
        let inside = regions.iter().any(|g| g.contains(&q, !probe.is_proper()));
        if !probe.is_proper() {
            prop_assert!(!inside);
        }
        if probe.is_proper() && geodesic_distance(&rot, &probe).unwrap() < deg.to_radians() * 0.999 {
            prop_assert!(inside);
        }
    }
}
