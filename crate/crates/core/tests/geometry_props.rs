use capgeo_core::geometry::{functionals, mesh_body, parse_body, unit_sphere_area, Body};
use capgeo_core::harness::corpus;
use proptest::prelude::*;
use std::f64::consts::PI;

fn measure(body: &Body, res: usize) -> capgeo_core::geometry::GeometricFunctionals {
    let mesh = mesh_body(body, res).unwrap();
    functionals(&mesh, &[body.dim() as f64]).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn convex_body() -> impl Strategy<Value = Body> {
    let axes = prop::collection::vec(0.4f64..2.5, 3);
    prop_oneof![
        axes.clone().prop_map(|a| Body::ellipsoid(&a).unwrap()),
        (axes.clone(), 2.0f64..6.0).prop_map(|(a, e)| Body::superellipsoid(&a, e).unwrap()),
        (axes, 0.1f64..0.9).prop_map(|(a, f)| {
            let r = f * a.iter().cloned().fold(f64::INFINITY, f64::min);
            Body::rounded_box(&a, r).unwrap()
        }),
    ]
}

#[test]
fn unit_sphere_areas() {
    assert!(rel(unit_sphere_area(2).unwrap(), 2.0 * PI) < 1e-14);
    assert!(rel(unit_sphere_area(3).unwrap(), 4.0 * PI) < 1e-14);
    assert!(rel(unit_sphere_area(4).unwrap(), 2.0 * PI * PI) < 1e-14);
}

#[test]
fn ball_quadrature_converges_at_second_order() {
    let ball = Body::ball(3, 1.0).unwrap();
    let (a, v) = (4.0 * PI, 4.0 * PI / 3.0);
    let errs: Vec<(f64, f64)> = [6, 12, 24]
        .iter()
        .map(|&r| {
            let f = measure(&ball, r);
            (rel(f.area, a), rel(f.volume, v))
        })
        .collect();
    for w in errs.windows(2) {
        assert!(w[0].0 >= 3.0 * w[1].0 || w[1].0 < 1e-13, "{errs:?}");
        assert!(w[0].1 >= 3.0 * w[1].1 || w[1].1 < 1e-13, "{errs:?}");
    }
    let f = measure(&ball, 64);
    assert!(rel(f.area, a) < 5e-3);
}

#[test]
fn closed_meshes() {
    for b in corpus() {
        let mesh = mesh_body(&b, 32).unwrap();
        assert!(mesh.closedness_defect() < 1e-10, "{}", b);
        // flat faces of the rounded box have H = 0
        assert!(mesh.min_curvature() >= -1e-12, "{}", b);
    }
}

#[test]
fn isoperimetric_and_willmore_on_corpus() {
    for b in corpus() {
        let f = measure(&b, 64);
        let w = f.willmore_at(3.0).unwrap();
        assert!(f.volume_radius <= f.area_radius * (1.0 + 1e-9), "{b}");
        assert!(w >= 1.0 - 1e-3, "{b}: {w}");
        let gap = 1.0 - f.volume_radius / f.area_radius;
        if b.is_ball() {
            assert!(gap.abs() < 1e-3 && (w - 1.0).abs() < 1e-3, "{b}");
        } else {
            assert!(gap > 1e-3 && w > 1.0 + 1e-3, "{b}: gap {gap}, willmore {w}");
        }
    }
}

#[test]
fn descriptors_round_trip() {
    for d in [
        "ball:r=1.5",
        "ball:r=1;n=4",
        "ellipsoid:1,2,3",
        "superellipsoid:1,1,1;e=4",
        "roundedbox:1,1,1;r=0.3",
        "ellipsoid:1,1,2;c=0.5,0,-1",
    ] {
        assert_eq!(parse_body(d).unwrap().descriptor(), d);
    }
    for bad in ["ball", "ball:1", "cube:1", "ellipsoid:1,-1,2", "ellipsoid:1,1,2;z=3"] {
        assert!(parse_body(bad).is_err(), "{bad}");
    }
}

#[test]
fn rigid_motions_preserve_functionals() {
    let base = Body::ellipsoid(&[1.0, 1.5, 2.0]).unwrap();
    let moved = base
        .clone()
        .with_center(&[0.3, -1.0, 2.0])
        .unwrap()
        .with_rotation([1.0, 2.0, 0.5], 0.7)
        .unwrap();
    let (a, b) = (measure(&base, 48), measure(&moved, 48));
    assert!(rel(a.area, b.area) < 1e-9);
    assert!(rel(a.volume, b.volume) < 1e-9);
    assert!(rel(a.willmore[0].1, b.willmore[0].1) < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scaling_laws(body in convex_body(), lambda in 0.2f64..5.0) {
        let a = measure(&body, 16);
        let b = measure(&body.scaled(lambda).unwrap(), 16);
        prop_assert!(rel(b.area, lambda.powi(2) * a.area) < 1e-6);
        prop_assert!(rel(b.volume, lambda.powi(3) * a.volume) < 1e-6);
        prop_assert!(rel(b.willmore[0].1, a.willmore[0].1) < 1e-6);
    }

    #[test]
    fn isoperimetric_inequality(body in convex_body()) {
        let f = measure(&body, 32);
        prop_assert!(f.volume_radius <= f.area_radius * (1.0 + 1e-6));
    }

    #[test]
    fn willmore_inequality(body in convex_body()) {
        let f = measure(&body, 32);
        prop_assert!(f.willmore[0].1 >= 1.0 - 1e-3);
    }

    #[test]
    fn sampled_convexity(body in convex_body()) {
        prop_assert!(body.sampled_convexity_check().is_ok());
    }
}
