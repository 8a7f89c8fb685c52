use serde::{Deserialize, Serialize};

use super::evaluate::*;
use super::report::{CapacityBracket, InequalityId, InequalityReport};
use super::riesz::{riesz_survey, RieszConfig, RieszSurvey};
use crate::capacity::{ball_capacity, solve_p_capacity, SolverConfig};
use crate::error::{CapError, Result};
use crate::geometry::Body;

/// Exponents every corpus body is checked at.
pub const CORPUS_EXPONENTS: [f64; 3] = [1.3, 2.0, 2.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub solver: SolverConfig,
    /// Polar resolution of the boundary quadrature.
    pub mesh_resolution: usize,
    pub riesz: RieszConfig,
    /// Run the single-layer checks.
    pub riesz_enabled: bool,
    /// Exponent of the mixed branch; `2` when absent.
    pub q: Option<f64>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            solver: SolverConfig::default(),
            mesh_resolution: 64,
            riesz: RieszConfig::default(),
            riesz_enabled: true,
            q: None,
        }
    }
}

/// Everything computed for one body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyEvaluation {
    pub body: String,
    pub n: usize,
    pub ingredients: Ingredients,
    pub capacities: Vec<CapacityBracket>,
    pub riesz: Option<RieszSurvey>,
    pub reports: Vec<InequalityReport>,
}

impl BodyEvaluation {
    pub fn violations(&self) -> Vec<&InequalityReport> {
        self.reports.iter().filter(|r| r.violated()).collect()
    }

    pub fn find(&self, id: InequalityId, p: Option<f64>, branch: Option<&str>) -> Option<&InequalityReport> {
        self.reports.iter().find(|r| {
            r.inequality == id
                && match (p, r.p) {
                    (Some(a), Some(b)) => (a - b).abs() < 1e-12,
                    (None, _) => true,
                    _ => false,
                }
                && (branch.is_none() || r.branch.as_deref() == branch)
        })
    }

    pub fn capacity(&self, p: f64) -> Option<&CapacityBracket> {
        self.capacities.iter().find(|c| (c.p - p).abs() < 1e-12)
    }
}

/// Balls of radii 0.5, 1 and 2, three ellipsoids, a superellipsoid and a
/// rounded cube.
pub fn corpus() -> Vec<Body> {
    let mut v: Vec<Body> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&r| Body::ball(3, r).expect("valid ball"))
        .collect();
    for axes in [[1.0, 1.0, 2.0], [1.0, 2.0, 3.0], [1.0, 1.0, 0.5]] {
        v.push(Body::ellipsoid(&axes).expect("valid ellipsoid"));
    }
    v.push(Body::superellipsoid(&[1.0, 1.0, 1.0], 4.0).expect("valid superellipsoid"));
    v.push(Body::rounded_box(&[1.0, 1.0, 1.0], 0.3).expect("valid rounded box"));
    v
}

/// Solver bracket in R^3; the closed form for balls in other dimensions.
pub fn capacity_bracket(body: &Body, p: f64, solver: &SolverConfig) -> Result<CapacityBracket> {
    if body.dim() == 3 {
        return Ok(CapacityBracket::from_estimate(&solve_p_capacity(body, p, solver)?));
    }
    if body.is_ball() {
        return Ok(CapacityBracket::exact(p, ball_capacity(body.dim(), p, body.inradius())?));
    }
    Err(CapError::Unsupported(format!(
        "no capacity solver for {} in R^{}",
        body.descriptor(),
        body.dim()
    )))
}

/// All checks for one body at the exponents `ps`. Checks involving `cap_2`
/// run only when `2` is among `ps`.
pub fn evaluate_body(body: &Body, ps: &[f64], config: &HarnessConfig) -> Result<BodyEvaluation> {
    if ps.is_empty() {
        return Err(CapError::InvalidParameter("no exponents given".into()));
    }
    let mut exps: Vec<f64> = ps.to_vec();
    exps.extend(config.q);
    let ing = Ingredients::measure(body, config.mesh_resolution, &exps)?;
    let capacities = ps
        .iter()
        .map(|&p| capacity_bracket(body, p, &config.solver))
        .collect::<Result<Vec<_>>>()?;
    let cap2 = capacities.iter().find(|c| (c.p - 2.0).abs() < 1e-12);

    let mut reports = Vec::new();
    for cap in &capacities {
        let p = cap.p;
        reports.push(eval_eav(&ing, cap)?);
        reports.push(eval_e14(&ing, cap)?);
        let q = if p <= 2.0 { config.q } else { None };
        reports.extend(eval_e29(&ing, cap, q)?);
        reports.extend(eval_e29e_and_sandwich(&ing, cap)?);
        reports.extend(eval_limits_k(&ing, cap)?);
        reports.extend(
            eval_e210_af_e20aa(&ing, Some(p), q, None)?
                .into_iter()
                .filter(|r| r.inequality == InequalityId::E210),
        );
    }
    reports.push(eval_willmore(&ing)?);
    reports.extend(eval_e210_af_e20aa(&ing, None, None, cap2)?);
    if let Some(c2) = cap2 {
        if body.dim() == 3 {
            reports.extend(eval_cap2_constants(&ing, c2)?);
        }
    }
    let riesz = if config.riesz_enabled && body.dim() >= 3 {
        let s = riesz_survey(body, &config.riesz)?;
        reports.extend(eval_riesz_e23_e24(&ing, &s, cap2)?);
        reports.push(scan_conjecture_e25(&ing, &s)?);
        if let Some(c2) = cap2 {
            reports.push(eval_e26(&ing, &s, c2)?);
        }
        Some(s)
    } else {
        None
    };
    Ok(BodyEvaluation {
        body: body.descriptor(),
        n: body.dim(),
        ingredients: ing,
        capacities,
        riesz,
        reports,
    })
}

/// Evaluate each body in turn; the capacity solves parallelize internally.
pub fn sweep(bodies: &[Body], ps: &[f64], config: &HarnessConfig) -> Vec<Result<BodyEvaluation>> {
    bodies.iter().map(|b| evaluate_body(b, ps, config)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_has_eight_convex_bodies() {
        let c = corpus();
        assert_eq!(c.len(), 8);
        assert!(c.iter().all(|b| b.is_convex_kind() && b.dim() == 3));
    }

    #[test]
    fn four_dimensional_ball_uses_closed_form() {
        let b = Body::ball(4, 1.0).unwrap();
        let cfg = HarnessConfig {
            mesh_resolution: 12,
            riesz: RieszConfig {
                samples: 3,
                resolution: 10,
                outer_resolution: 4,
                inner_resolution: 10,
            },
            ..Default::default()
        };
        let ev = evaluate_body(&b, &[2.0, 3.0], &cfg).unwrap();
        assert!(ev.violations().is_empty(), "{:#?}", ev.violations());
        for r in &ev.reports {
            if r.inequality.ball_equality() && r.branch.as_deref() != Some("lower") {
                assert!(r.slack.abs() <= r.tolerance, "{r:?}");
            }
        }
        assert!(ev.find(InequalityId::E13, None, None).is_none());
        assert!(ev.find(InequalityId::E26, Some(2.0), None).is_some());
    }
}
