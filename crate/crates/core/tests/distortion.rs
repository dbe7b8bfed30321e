use std::f64::consts::PI;

use pasym::distortion::*;
use pasym::linalg::{norm, Mat3};
use pasym::ogroup::{displacement_distance, random_quat, OrthoTransform};
use pasym::rng::stream;
use pasym::shapes::{gen_primitive, Primitive};
use pasym::volume::{Grid, ScalarVolume, ShapeRepresentation};
use pasym::{Shape, Transform};
use proptest::prelude::*;

fn box_shape(dim: usize) -> Shape {
    let v = gen_primitive(
        &Primitive::Box {
            half_extents: [1.0, 2.0, 3.0],
        },
        dim,
    )
    .unwrap();
    ShapeRepresentation::binary(&v).unwrap()
}

fn quarter_z() -> Transform {
    Transform::rotation(&[0.0, 0.0, 1.0], PI / 2.0)
}

#[test]
fn sample_size_formula() {
    assert_eq!(required_samples(0.05, 0.01).unwrap(), 1060);
    assert_eq!(required_samples(0.125, 0.01).unwrap(), 170);
    let (a, b) = (
        required_samples(0.02, 0.01).unwrap(),
        required_samples(0.04, 0.01).unwrap(),
    );
    assert!((a as f64 / b as f64 - 4.0).abs() < 0.01);
    assert!(required_samples(0.0, 0.01).is_err() && required_samples(0.1, 1.0).is_err());
}

#[test]
fn ball_points_have_the_uniform_radial_moment() {
    let pts = uniform_ball_points(2.0f64, 1_000_000, 5);
    assert!(pts.iter().all(|p| norm(p) <= 2.0));
    let mean = pts.iter().map(|p| norm(p) / 2.0).sum::<f64>() / pts.len() as f64;
    assert!((mean - 0.75).abs() < 0.002, "{mean}");
    assert_eq!(
        uniform_ball_points(1.0f64, 100, 9),
        uniform_ball_points(1.0f64, 100, 9)
    );
}

#[test]
fn identity_scores_zero() {
    let s = box_shape(32);
    assert_eq!(
        exact_distortion(&s, &Transform::identity()).unwrap().value,
        0.0
    );
    for seed in 0..5 {
        assert_eq!(
            approx_distortion(&s, &Transform::identity(), 0.1, 0.01, seed)
                .unwrap()
                .value,
            0.0
        );
    }
}

#[test]
fn half_ball_reflection_is_total() {
    let a = 1.0f64;
    let grid = Grid::centered([129; 3], 2.0 * a / 128.0).unwrap();
    let v = ScalarVolume::from_fn(grid, 1.0, |c| {
        if c[2] <= 0.0 && norm(&c) <= a {
            0.0
        } else {
            1.0
        }
    })
    .unwrap();
    let s = ShapeRepresentation::uncentered(&v).unwrap();
    assert!((s.radius() - a).abs() <= grid.spacing * 3f64.sqrt());
    let d = exact_distortion(&s, &Transform::reflection(&[0.0, 0.0, 1.0]))
        .unwrap()
        .value;
    assert!((d - 1.0).abs() <= 0.02, "{d}");
}

#[test]
fn box_quarter_turn_matches_overlap_volume() {
    let s = box_shape(128);
    let want = 48.0 / (4.0 / 3.0 * PI * 14f64.powf(1.5));
    assert!((want - 0.219).abs() < 0.001);
    let d = exact_distortion(&s, &quarter_z()).unwrap().value;
    assert!((d - want).abs() <= 0.01, "{d} vs {want}");
}

#[test]
fn sampled_estimate_tracks_the_exact_value() {
    let s = box_shape(64);
    let exact = exact_distortion(&s, &quarter_z()).unwrap().value;
    let good = (0..100u64)
        .filter(|&seed| {
            let e = approx_distortion(&s, &quarter_z(), 0.02, 0.01, seed).unwrap();
            assert_eq!(e.samples_used, required_samples(0.02, 0.01).unwrap());
            (e.value - exact).abs() <= 0.02
        })
        .count();
    assert!(good >= 99, "{good} of 100");
}

#[test]
fn estimator_concentrates() {
    let v = gen_primitive(&Primitive::icosahedron(1.0), 48).unwrap();
    let s = ShapeRepresentation::truncated(&v, 0.3).unwrap();
    let t = Transform::rotation(&[0.2, 0.5, 0.8], 0.6);
    let exact = exact_distortion(&s, &t).unwrap().value;
    let (eps, p) = (0.05, 0.01);
    let bad = (0..1000u64)
        .filter(|&seed| {
            (approx_distortion(&s, &t, eps, p, seed).unwrap().value - exact).abs() > eps
        })
        .count();
    assert!(bad as f64 / 1000.0 <= p + 0.01, "{bad} deviations");
}

#[test]
fn polarity_and_inverse_invariance() {
    let v = gen_primitive(
        &Primitive::Cylinder {
            radius: 1.0,
            half_height: 1.5,
        },
        48,
    )
    .unwrap();
    let s = ShapeRepresentation::truncated(&v, 0.2).unwrap();
    let f = s.flipped();
    let mut rng = stream(21, &[]);
    for _ in 0..10 {
        let t =
            OrthoTransform::from_quat(&random_quat(&mut rng), rand::Rng::random::<bool>(&mut rng));
        let a = exact_distortion(&s, &t).unwrap().value;
        assert!((a - exact_distortion(&f, &t).unwrap().value).abs() < 1e-12);
        assert!((a - exact_distortion(&s, &t.inverse()).unwrap().value).abs() <= 0.01);
        assert!((0.0..=1.0).contains(&a));
    }
}

#[test]
fn sample_sets_are_seed_deterministic() {
    let s = box_shape(32);
    let m: Mat3<f64> = *quarter_z().matrix();
    let a = SampleSet::for_accuracy(&s, 0.05, 0.01, 3).unwrap();
    let b = SampleSet::for_accuracy(&s, 0.05, 0.01, 3).unwrap();
    assert_eq!(
        a.estimate(s.volume(), &m).to_bits(),
        b.estimate(s.volume(), &m).to_bits()
    );
    let full = a.estimate(s.volume(), &m);
    assert_eq!(a.estimate_below(s.volume(), &m, 1.0), Some(full));
    assert_eq!(a.estimate_below(s.volume(), &m, full / 2.0), None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lipschitz_in_the_transform(s1 in any::<u64>(), tilt in 0.0f64..0.3, imp in any::<bool>()) {
        let v = gen_primitive(&Primitive::Box { half_extents: [1.0, 2.0, 3.0] }, 32).unwrap();
        let shape = ShapeRepresentation::truncated(&v, 0.2 * v.support_radius()).unwrap();
        let mut rng = stream(s1, &[]);
        let q = random_quat(&mut rng);
        let a = OrthoTransform::from_quat(&q, imp);
        let b = a.compose(&Transform::rotation(&[0.6, -0.3, 0.74], tilt));
        let da = exact_distortion(&shape, &a).unwrap().value;
        let db = exact_distortion(&shape, &b).unwrap().value;
        let bound = shape.total_variation() * displacement_distance(&a, &b, shape.radius()) + 0.02;
        prop_assert!((da - db).abs() <= bound, "{} vs {}", (da - db).abs(), bound);
    }

    #[test]
    fn estimates_stay_in_unit_interval(seed in any::<u64>(), imp in any::<bool>()) {
        let s = box_shape(24);
        let t = OrthoTransform::from_quat(&random_quat(&mut stream(seed, &[])), imp);
        let e = approx_distortion(&s, &t, 0.1, 0.05, seed).unwrap();
        prop_assert!((0.0..=1.0).contains(&e.value));
        prop_assert!(e.std_dev >= 0.0);
    }
}
