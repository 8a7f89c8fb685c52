use capgeo_core::capacity::{capacity_constant, solve_p_capacity, SolverConfig};
use capgeo_core::flow::{
    area_growth_check, evolve, flow_capacity_bound, required_time, up_growth_check, FlowConfig,
    FlowSurface, FlowTrace,
};
use capgeo_core::geometry::{unit_sphere_area, Body};
use capgeo_core::harness::corpus;
use capgeo_core::CapError;
use proptest::prelude::*;

fn run(body: &Body, t: f64, dt: f64, exponents: &[f64]) -> FlowTrace {
    evolve(
        body,
        &FlowConfig {
            dt,
            final_time: t,
            exponents: exponents.to_vec(),
            ..FlowConfig::default()
        },
    )
    .unwrap()
}

/// Default step, reduced below the initial stability bound when needed.
fn stable_dt(body: &Body, at_most: f64) -> f64 {
    let bound = FlowSurface::from_body(body, capgeo_core::flow::DEFAULT_SAMPLES)
        .unwrap()
        .step_bound();
    at_most.min(0.9 * bound)
}

/// Largest relative error of the mean radius against `r0 e^{t/(n-1)}`.
fn radius_error(trace: &FlowTrace, r0: f64) -> f64 {
    let n = trace.dimension as f64;
    trace
        .points
        .iter()
        .map(|pt| {
            let exact = r0 * (pt.t / (n - 1.0)).exp();
            (pt.mean_radius - exact).abs() / exact
        })
        .fold(0.0, f64::max)
}

#[test]
fn spheres_and_circles_grow_exponentially() {
    for body in [Body::ball(2, 1.5).unwrap(), Body::ball(3, 0.7).unwrap()] {
        let r0 = match body.kind() {
            capgeo_core::geometry::BodyKind::Ball { radius } => *radius,
            _ => unreachable!(),
        };
        let tr = run(&body, 1.0, capgeo_core::flow::DEFAULT_DT, &[]);
        assert!(radius_error(&tr, r0) < 1e-2, "{body}");
        assert!(area_growth_check(&tr) < 1e-2, "{body}");
        // a round datum stays round
        assert!(tr.points.iter().all(|pt| pt.anisotropy - 1.0 < 1e-6), "{body}");
    }
}

#[test]
fn step_halving_reduces_the_error() {
    let body = Body::ball(3, 1.0).unwrap();
    let coarse = radius_error(&run(&body, 1.0, 0.005, &[]), 1.0);
    let fine = radius_error(&run(&body, 1.0, 0.0025, &[]), 1.0);
    assert!(coarse / fine >= 1.8, "{coarse} / {fine}");
}

#[test]
fn traces_are_increasing_and_star_shaped() {
    for desc in ["ellipsoid:1,1,2", "ellipsoid:1,1,0.5", "ellipsoid:1,2", "ellipsoid:2,1"] {
        let body = capgeo_core::geometry::parse_body(desc).unwrap();
        let tr = run(&body, 2.0, stable_dt(&body, capgeo_core::flow::DEFAULT_DT), &[]);
        for w in tr.points.windows(2) {
            assert!(w[1].t > w[0].t && w[1].area > w[0].area, "{desc}");
        }
        assert!(area_growth_check(&tr) < 2e-2, "{desc}: {}", area_growth_check(&tr));
        // the flow rounds the surface off
        let last = tr.points.last().unwrap();
        assert!(last.anisotropy < tr.points[0].anisotropy, "{desc}");
    }
}

#[test]
fn monotone_quantity_on_the_ellipsoid() {
    let body = Body::ellipsoid(&[1.0, 1.0, 2.0]).unwrap();
    let tr = run(&body, 1.0, capgeo_core::flow::DEFAULT_DT, &[2.0, 2.5]);
    for p in [2.0, 2.5] {
        let g = up_growth_check(&tr, p).unwrap();
        assert!(g.passes(1e-2), "p={p}: {g:?}");
    }
}

#[test]
fn sphere_bounds_are_sharp() {
    for (r, p) in [(1.0, 2.0), (2.0, 2.0), (1.0, 2.5)] {
        let body = Body::ball(3, r).unwrap();
        let t = required_time(3, p);
        let tr = run(&body, t, 0.005, &[p]);
        let b = flow_capacity_bound(&tr, p).unwrap();
        let expected = r.powf(3.0 - p);
        assert!((b.normalized - expected).abs() < 2e-2 * expected, "r={r} p={p}: {}", b.normalized);
    }
}

#[test]
fn short_traces_are_rejected() {
    let tr = run(&Body::ball(3, 1.0).unwrap(), 0.5, 0.005, &[2.0]);
    assert!(matches!(flow_capacity_bound(&tr, 2.0), Err(CapError::TraceTooShort(_))));
}

#[test]
fn unsupported_data_is_rejected() {
    let triaxial = Body::ellipsoid(&[1.0, 2.0, 3.0]).unwrap();
    assert!(matches!(FlowSurface::from_body(&triaxial, 32), Err(CapError::Unsupported(_))));
    let too_large = FlowConfig {
        dt: 0.5,
        ..FlowConfig::default()
    };
    assert!(matches!(
        evolve(&Body::ellipsoid(&[1.0, 1.0, 3.0]).unwrap(), &too_large),
        Err(CapError::StepTooLarge { .. })
    ));
}

#[test]
fn flow_bound_dominates_the_solver_lower_bound() {
    let solver = SolverConfig {
        grid: 48,
        ..SolverConfig::default()
    };
    let sigma = unit_sphere_area(3).unwrap();
    // only axisymmetric corpus bodies can be flowed
    let bodies: Vec<Body> = corpus()
        .into_iter()
        .filter(|b| FlowSurface::from_body(b, 32).is_ok())
        .collect();
    assert!(bodies.len() >= 5);
    for b in &bodies {
        for p in [2.0, 2.5] {
            let tr = run(b, required_time(3, p), stable_dt(b, 0.005), &[p]);
            let bound = flow_capacity_bound(&tr, p).unwrap();
            let est = solve_p_capacity(b, p, &solver).unwrap();
            // equality for balls, so the flow's own integration error is allowed for
            assert!(
                bound.bound >= (1.0 - 2e-2) * est.lower / sigma,
                "{b} p={p}: bound {} below {}",
                bound.bound,
                est.lower / sigma
            );
            assert!(bound.normalized * capacity_constant(3, p).unwrap() - bound.bound < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn area_law_on_random_spheroids(equatorial in 0.6f64..1.6, polar in 0.6f64..1.6) {
        let body = Body::ellipsoid(&[equatorial, equatorial, polar]).unwrap();
        let tr = run(&body, 1.0, stable_dt(&body, capgeo_core::flow::DEFAULT_DT), &[2.0]);
        prop_assert!(area_growth_check(&tr) < 2e-2);
        prop_assert!(tr.points.iter().all(|pt| pt.willmore >= 1.0 - 1e-3));
        prop_assert!(up_growth_check(&tr, 2.0).unwrap().passes(1e-2));
    }

    #[test]
    fn flow_commutes_with_scaling(a in 0.6f64..1.6, b in 0.6f64..1.6, lambda in 0.2f64..5.0) {
        let body = Body::ellipsoid(&[a, b]).unwrap();
        let dt = stable_dt(&body, 0.005);
        let t1 = run(&body, 0.5, dt, &[]);
        let t2 = run(&body.scaled(lambda).unwrap(), 0.5, dt, &[]);
        for (x, y) in t1.points.iter().zip(&t2.points) {
            prop_assert!((y.area - lambda * x.area).abs() < 1e-9 * y.area);
        }
    }
}
