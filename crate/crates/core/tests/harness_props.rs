use capgeo_core::capacity::SolverConfig;
use capgeo_core::geometry::Body;
use capgeo_core::harness::{
    corpus, evaluate_body, polya_szego_constants, BodyEvaluation, HarnessConfig, InequalityId,
    InequalityReport, RieszConfig,
};

fn config(grid: usize, riesz: bool) -> HarnessConfig {
    HarnessConfig {
        solver: SolverConfig {
            grid,
            ..SolverConfig::default()
        },
        mesh_resolution: 48,
        riesz: RieszConfig {
            samples: 24,
            resolution: 32,
            ..RieszConfig::default()
        },
        riesz_enabled: riesz,
        ..HarnessConfig::default()
    }
}

fn key(r: &InequalityReport) -> (InequalityId, Option<u64>, Option<String>) {
    (r.inequality, r.p.map(f64::to_bits), r.branch.clone())
}

#[test]
fn constants_match_their_closed_forms() {
    let k = polya_szego_constants();
    let pi = std::f64::consts::PI;
    assert!((k.conjectured - 4.0 * (2.0 / pi).sqrt()).abs() < 1e-15);
    assert!((k.new - 1.5 * pi.sqrt()).abs() < 1e-15);
    assert!((k.old - 4.0 / pi.sqrt()).abs() < 1e-15);
    assert!((k.conjectured_minus_new - 0.532857).abs() < 5e-7);
    assert!((k.new_minus_old - 0.401922).abs() < 5e-7);
    assert!(k.ordered);
}

#[test]
fn scale_covariance() {
    let body = Body::ellipsoid(&[1.0, 1.0, 2.0]).unwrap();
    let cfg = config(32, true);
    let a = evaluate_body(&body, &[2.0, 2.5], &cfg).unwrap();
    let b = evaluate_body(&body.scaled(2.0).unwrap(), &[2.0, 2.5], &cfg).unwrap();
    assert_eq!(a.reports.len(), b.reports.len());
    for (x, y) in a.reports.iter().zip(&b.reports) {
        assert_eq!(key(x), key(y));
        let (kl, kr) = (y.left / x.left, y.right / x.right);
        // capacity-free reports scale exactly; solver ones up to the solver tolerance
        let tol = if x.provenance.capacity.is_some() { 1e-4 } else { 1e-6 };
        assert!((kl - kr).abs() <= tol * kr.abs(), "{}: {kl} vs {kr}", x.inequality);
    }
}

#[test]
fn sandwich_chain_holds_on_the_corpus() {
    let cfg = config(48, false);
    for body in corpus() {
        let ev = evaluate_body(&body, &[1.3, 2.0, 2.5], &cfg).unwrap();
        for p in [1.3, 2.0, 2.5] {
            let lo = ev.find(InequalityId::SandwichJ, Some(p), Some("lower")).unwrap();
            let hi = ev.find(InequalityId::SandwichJ, Some(p), Some("upper")).unwrap();
            // both halves share the normalized ratio
            assert!((lo.right - hi.left).abs() <= 1e-12 * hi.left.abs() || lo.provenance.capacity_end != hi.provenance.capacity_end);
            assert!(lo.pass && hi.pass, "{body} p={p}: {lo:?} {hi:?}");
        }
        assert!(ev.violations().is_empty(), "{body}: {:?}", ev.violations());
    }
}

fn ball_equalities(ev: &BodyEvaluation) {
    for r in &ev.reports {
        let equality = r.inequality.ball_equality()
            || (r.inequality == InequalityId::SandwichJ && r.branch.as_deref() == Some("upper"));
        if equality {
            assert!(r.slack.abs() <= r.tolerance, "{} {} p={:?}: {r:?}", r.body, r.inequality, r.p);
        }
    }
}

#[test]
fn balls_are_equality_cases() {
    let cfg = config(48, true);
    for r in [0.5, 1.0, 2.0] {
        let ev = evaluate_body(&Body::ball(3, r).unwrap(), &[1.3, 2.0, 2.5], &cfg).unwrap();
        assert!(ev.violations().is_empty());
        ball_equalities(&ev);
        let e13 = ev.find(InequalityId::E13, Some(2.0), None).unwrap();
        assert!((e13.right / e13.left - 4.0 / 3.0).abs() < 1e-9);
    }
}

#[test]
fn balls_in_four_dimensions_use_closed_forms() {
    let ev = evaluate_body(&Body::ball(4, 1.5).unwrap(), &[1.5, 2.0, 3.0], &config(48, true)).unwrap();
    assert!(ev.violations().is_empty());
    ball_equalities(&ev);
    assert!(ev.capacities.iter().all(|c| c.lower == c.upper));
}

#[test]
fn prolate_spheroid_is_not_an_equality_case() {
    // clearing three tolerances needs a finer grid; see the acceptance suite
    let ev = evaluate_body(&Body::ellipsoid(&[1.0, 1.0, 2.0]).unwrap(), &[2.0], &config(96, false)).unwrap();
    for (id, branch) in [(InequalityId::E29First, None), (InequalityId::E29e, None)] {
        let r = ev.find(id, Some(2.0), branch).unwrap();
        assert!(r.slack > r.tolerance, "{id}: {r:?}");
    }
    let eav = ev.find(InequalityId::EAv, Some(2.0), None).unwrap();
    assert!(eav.slack > 0.0 && eav.pass);
}

#[test]
fn reports_round_trip_through_json() {
    let ev = evaluate_body(&Body::ellipsoid(&[1.0, 2.0, 1.5]).unwrap(), &[2.0], &config(32, true)).unwrap();
    let text = serde_json::to_string(&ev.reports).unwrap();
    let back: Vec<InequalityReport> = serde_json::from_str(&text).unwrap();
    assert_eq!(back, ev.reports);
    for r in &ev.reports {
        assert_eq!(r.slack, r.right - r.left);
        assert_eq!(r.asserted, !r.inequality.exploratory());
        if r.provenance.capacity.is_some() {
            assert!(r.provenance.capacity_end.is_some());
        }
    }
}

#[test]
fn invalid_requests_are_rejected() {
    let cfg = config(32, false);
    let ball = capgeo_core::geometry::parse_body("ball:r=1").unwrap();
    assert!(evaluate_body(&ball, &[0.9], &cfg).is_err());
    assert!(evaluate_body(&ball, &[3.5], &cfg).is_err());
    let with_q = HarnessConfig {
        q: Some(3.5),
        ..cfg
    };
    assert!(evaluate_body(&ball, &[2.0], &with_q).is_err());
}
