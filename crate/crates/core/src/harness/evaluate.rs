use serde::{Deserialize, Serialize};

use super::report::{
    judge, BracketEnd, CapacityBracket, InequalityId, InequalityReport, Provenance, Relation,
};
use super::riesz::RieszSurvey;
use crate::capacity::{capacity_constant, capacity_radius, normalized_capacity};
use crate::error::{CapError, Result};
use crate::geometry::{functionals, mesh_body, unit_sphere_area, Body, GeometricFunctionals};

/// Relative tolerance floor for every check.
pub const RELATIVE_FLOOR: f64 = 1e-2;
/// Window for the `p -> 1` and `p -> n` limit checks.
pub const LIMIT_WINDOW: f64 = 5e-2;
/// Tolerance of the Willmore lower bound, which involves no capacity.
pub const WILLMORE_FLOOR: f64 = 1e-3;
/// Distance from an endpoint of `(1, n)` within which `limits_k` is evaluated.
pub const LIMIT_REACH: f64 = 0.1;

/// Boundary functionals of one body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ingredients {
    pub body: String,
    pub n: usize,
    pub mesh_resolution: usize,
    pub convex: bool,
    pub functionals: GeometricFunctionals,
}

impl Ingredients {
    /// Mesh the body and integrate area, volume and `willmore_q` for each `q`
    /// in `exponents` together with `q = 2` and `q = n`.
    pub fn measure(body: &Body, resolution: usize, exponents: &[f64]) -> Result<Self> {
        let n = body.dim();
        let mut qs = vec![2.0, n as f64];
        for &q in exponents {
            if !qs.iter().any(|e| (e - q).abs() < 1e-12) {
                qs.push(q);
            }
        }
        let mesh = mesh_body(body, resolution)?;
        Ok(Ingredients {
            body: body.descriptor(),
            n,
            mesh_resolution: resolution,
            convex: body.is_convex_kind(),
            functionals: functionals(&mesh, &qs)?,
        })
    }

    pub fn sigma(&self) -> f64 {
        unit_sphere_area(self.n).expect("n >= 2")
    }

    /// `area / sigma_{n-1}`
    pub fn normalized_area(&self) -> f64 {
        self.functionals.area / self.sigma()
    }

    pub fn willmore(&self, q: f64) -> Result<f64> {
        self.functionals
            .willmore_at(q)
            .ok_or_else(|| CapError::Missing(format!("willmore_{q}")))
    }

    fn require_convex(&self) -> Result<()> {
        if self.convex {
            Ok(())
        } else {
            Err(CapError::Unsupported(format!("{} is not a convex body", self.body)))
        }
    }

    fn provenance(&self) -> Provenance {
        Provenance {
            mesh_resolution: Some(self.mesh_resolution),
            ..Default::default()
        }
    }

    fn base(&self, id: InequalityId, p: Option<f64>, q: Option<f64>) -> InequalityReport {
        InequalityReport {
            body: self.body.clone(),
            n: self.n,
            p,
            q,
            inequality: id,
            branch: None,
            left: f64::NAN,
            right: f64::NAN,
            slack: f64::NAN,
            relation: Relation::AtMost,
            scale: f64::NAN,
            tolerance: f64::NAN,
            pass: false,
            asserted: !id.exploratory(),
            provenance: self.provenance(),
        }
    }
}

/// Sides of a check as a function of the capacity value.
struct Check<'a> {
    id: InequalityId,
    branch: Option<&'static str>,
    p: Option<f64>,
    q: Option<f64>,
    relation: Relation,
    floor: f64,
    /// `(left, right)` at a capacity value; `slack = right - left`.
    sides: Box<dyn Fn(f64) -> Result<(f64, f64)> + 'a>,
}

impl<'a> Check<'a> {
    fn new(
        id: InequalityId,
        p: Option<f64>,
        sides: impl Fn(f64) -> Result<(f64, f64)> + 'a,
    ) -> Self {
        Check {
            id,
            branch: None,
            p,
            q: None,
            relation: Relation::AtMost,
            floor: RELATIVE_FLOOR,
            sides: Box::new(sides),
        }
    }

    fn branch(mut self, b: &'static str) -> Self {
        self.branch = Some(b);
        self
    }

    fn q(mut self, q: f64) -> Self {
        self.q = Some(q);
        self
    }

    /// Evaluate at the unfavorable end of `cap` (the end with the smaller
    /// slack for one-sided checks, the best value for two-sided ones).
    /// Tolerance: twice the change of slack across the bracket, floored at
    /// `floor * |right|`.
    fn with_capacity(self, ing: &Ingredients, cap: &CapacityBracket) -> Result<InequalityReport> {
        let eval = |end| -> Result<(f64, f64, f64)> {
            let (l, r) = (self.sides)(cap.at(end))?;
            Ok((l, r, r - l))
        };
        let lo = eval(BracketEnd::Lower)?;
        let hi = eval(BracketEnd::Upper)?;
        let width = (hi.2 - lo.2).abs();
        let (end, (left, right, slack)) = match self.relation {
            Relation::AtMost if lo.2 <= hi.2 => (BracketEnd::Lower, lo),
            Relation::AtMost => (BracketEnd::Upper, hi),
            Relation::Approx => (BracketEnd::Best, eval(BracketEnd::Best)?),
        };
        let mut rep = self.finish(ing, left, right, slack, width);
        rep.provenance.capacity = Some(cap.clone());
        rep.provenance.capacity_end = Some(end);
        Ok(rep)
    }

    fn without_capacity(self, ing: &Ingredients) -> Result<InequalityReport> {
        let (left, right) = (self.sides)(f64::NAN)?;
        Ok(self.finish(ing, left, right, right - left, 0.0))
    }

    fn finish(
        &self,
        ing: &Ingredients,
        left: f64,
        right: f64,
        slack: f64,
        width: f64,
    ) -> InequalityReport {
        let scale = right.abs();
        let tolerance = (2.0 * width).max(self.floor * scale);
        let mut rep = ing.base(self.id, self.p, self.q);
        rep.branch = self.branch.map(str::to_string);
        rep.left = left;
        rep.right = right;
        rep.slack = slack;
        rep.relation = self.relation;
        rep.scale = scale;
        rep.tolerance = tolerance;
        rep.pass = judge(self.relation, slack, tolerance);
        rep.provenance.propagated_width = width;
        rep
    }
}

fn check_cap(ing: &Ingredients, cap: &CapacityBracket) -> Result<f64> {
    let p = cap.p;
    if !(p > 1.0 && p < ing.n as f64) {
        return Err(CapError::InvalidParameter(format!("p = {p} outside (1, {})", ing.n)));
    }
    if !(cap.lower > 0.0 && cap.lower <= cap.best && cap.best <= cap.upper) {
        return Err(CapError::InvalidParameter(format!(
            "inconsistent capacity bracket {} <= {} <= {}",
            cap.lower, cap.best, cap.upper
        )));
    }
    Ok(p)
}

/// `(n(p-1)/(p(n-1))) (A*/C*)^{(n-p)/(p-1)} + ((n-p)/(p(n-1))) (V*/A*)^n <= 1`,
/// reported with `left = LHS`, `right = 1`, `slack = 1 - LHS`.
pub fn eval_eav(ing: &Ingredients, cap: &CapacityBracket) -> Result<InequalityReport> {
    ing.require_convex()?;
    let p = check_cap(ing, cap)?;
    let n = ing.n;
    let nf = n as f64;
    let a = ing.functionals.area_radius;
    let v = ing.functionals.volume_radius;
    Check::new(InequalityId::EAv, Some(p), move |c| {
        let cs = capacity_radius(n, p, c)?;
        let lhs = nf * (p - 1.0) / (p * (nf - 1.0)) * (a / cs).powf((nf - p) / (p - 1.0))
            + (nf - p) / (p * (nf - 1.0)) * (v / a).powf(nf);
        Ok((lhs, 1.0))
    })
    .with_capacity(ing, cap)
}

/// Lower constant `(n(p-1)/(p(n-1)))^{p-1}` of the two-sided bound.
pub fn sandwich_lower_constant(n: usize, p: f64) -> f64 {
    let n = n as f64;
    (n * (p - 1.0) / (p * (n - 1.0))).powf(p - 1.0)
}

/// `(area/sigma)^{(n-p)/(n-1)} <= normalized cap_p * (p(n-1)/(n(p-1)))^{p-1}`.
pub fn eval_e14(ing: &Ingredients, cap: &CapacityBracket) -> Result<InequalityReport> {
    ing.require_convex()?;
    let p = check_cap(ing, cap)?;
    let n = ing.n;
    let nf = n as f64;
    let left = ing.normalized_area().powf((nf - p) / (nf - 1.0));
    Check::new(InequalityId::E14, Some(p), move |c| {
        Ok((left, normalized_capacity(n, p, c)? / sandwich_lower_constant(n, p)))
    })
    .with_capacity(ing, cap)
}

fn check_q(n: usize, q: f64) -> Result<()> {
    if !(q >= 2.0 && q < n as f64) {
        return Err(CapError::InvalidParameter(format!(
            "q = {q} outside [2, {n})"
        )));
    }
    Ok(())
}

/// Both branches of the Willmore upper bound on the normalized capacity:
/// `willmore_p` for `2 <= p < n`, and
/// `willmore_q^{(p-1)/(q-1)} (area/sigma)^{(q-p)/(q-1)}` for `1 < p <= 2 <= q < n`
/// (with `q = 2` when not given). At `p = 2` both are reported.
pub fn eval_e29(
    ing: &Ingredients,
    cap: &CapacityBracket,
    q: Option<f64>,
) -> Result<Vec<InequalityReport>> {
    let p = check_cap(ing, cap)?;
    let n = ing.n;
    let mut out = Vec::new();
    if let Some(q) = q {
        check_q(n, q)?;
        if p > 2.0 {
            return Err(CapError::InvalidParameter(format!(
                "second branch needs p <= 2 (got p = {p}, q = {q})"
            )));
        }
    }
    if p >= 2.0 {
        let w = ing.willmore(p)?;
        out.push(
            Check::new(InequalityId::E29First, Some(p), move |c| {
                Ok((normalized_capacity(n, p, c)?, w))
            })
            .with_capacity(ing, cap)?,
        );
    }
    if p <= 2.0 {
        let q = q.unwrap_or(2.0);
        let right = second_branch(ing, p, q)?;
        out.push(
            Check::new(InequalityId::E29Second, Some(p), move |c| {
                Ok((normalized_capacity(n, p, c)?, right))
            })
            .q(q)
            .with_capacity(ing, cap)?,
        );
    }
    Ok(out)
}

fn second_branch(ing: &Ingredients, p: f64, q: f64) -> Result<f64> {
    let w = ing.willmore(q)?;
    Ok(w.powf((p - 1.0) / (q - 1.0)) * ing.normalized_area().powf((q - p) / (q - 1.0)))
}

/// The upper bound by area and `willmore_n`, and both halves of the
/// two-sided bound on `normalized cap_p / (area/sigma)^{(n-p)/(n-1)}`.
pub fn eval_e29e_and_sandwich(
    ing: &Ingredients,
    cap: &CapacityBracket,
) -> Result<Vec<InequalityReport>> {
    ing.require_convex()?;
    let p = check_cap(ing, cap)?;
    let n = ing.n;
    let nf = n as f64;
    let area_term = ing.normalized_area().powf((nf - p) / (nf - 1.0));
    let wn = ing.willmore(nf)?;
    let upper = wn.powf((p - 1.0) / (nf - 1.0));
    let lower = sandwich_lower_constant(n, p);
    Ok(vec![
        Check::new(InequalityId::E29e, Some(p), move |c| {
            Ok((normalized_capacity(n, p, c)?, area_term * upper))
        })
        .with_capacity(ing, cap)?,
        Check::new(InequalityId::SandwichJ, Some(p), move |c| {
            Ok((lower, normalized_capacity(n, p, c)? / area_term))
        })
        .branch("lower")
        .with_capacity(ing, cap)?,
        Check::new(InequalityId::SandwichJ, Some(p), move |c| {
            Ok((normalized_capacity(n, p, c)? / area_term, upper))
        })
        .branch("upper")
        .with_capacity(ing, cap)?,
    ])
}

/// Limit checks near the ends of `(1, n)`:
/// near `p = 1`, `cap_p / (((p-1)/(n-p))^{1-p} area)` is close to one;
/// near `p = n`, the normalized capacity is close to one.
/// Returns `None` when `p` is not within [`LIMIT_REACH`] of either end.
pub fn eval_limits_k(ing: &Ingredients, cap: &CapacityBracket) -> Result<Option<InequalityReport>> {
    ing.require_convex()?;
    let p = check_cap(ing, cap)?;
    let n = ing.n;
    let area = ing.functionals.area;
    let check = if p - 1.0 <= LIMIT_REACH {
        Check::new(InequalityId::LimitsK, Some(p), move |c| {
            Ok((c / (capacity_constant(n, p)? * area), 1.0))
        })
        .branch("p_to_1")
    } else if n as f64 - p <= LIMIT_REACH {
        Check::new(InequalityId::LimitsK, Some(p), move |c| {
            Ok((normalized_capacity(n, p, c)?, 1.0))
        })
        .branch("p_to_n")
    } else {
        return Ok(None);
    };
    let mut check = check;
    check.relation = Relation::Approx;
    check.floor = LIMIT_WINDOW;
    check.with_capacity(ing, cap).map(Some)
}

/// `willmore_n >= 1`, reported as `left = 1`, `right = willmore_n`.
pub fn eval_willmore(ing: &Ingredients) -> Result<InequalityReport> {
    ing.require_convex()?;
    let w = ing.willmore(ing.n as f64)?;
    let mut c = Check::new(InequalityId::Willmore, None, move |_| Ok((1.0, w)));
    c.floor = WILLMORE_FLOOR;
    c.without_capacity(ing)
}

/// Constants of the lower bounds `cap_2 >= c sqrt(area)` for convex bodies in R^3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyaSzegoConstants {
    /// `4 sqrt(2/pi)`, conjectured sharp (attained by the flat disk).
    pub conjectured: f64,
    /// `3 sqrt(pi) / 2`
    pub new: f64,
    /// `4 / sqrt(pi)`
    pub old: f64,
    pub conjectured_minus_new: f64,
    pub new_minus_old: f64,
    pub ordered: bool,
}

pub fn polya_szego_constants() -> PolyaSzegoConstants {
    let pi = std::f64::consts::PI;
    let conjectured = 4.0 * (2.0 / pi).sqrt();
    let new = 1.5 * pi.sqrt();
    let old = 4.0 / pi.sqrt();
    PolyaSzegoConstants {
        conjectured,
        new,
        old,
        conjectured_minus_new: conjectured - new,
        new_minus_old: new - old,
        ordered: conjectured > new && new > old,
    }
}

/// `cap_2 >= c sqrt(area)` for the conjectured, new and old constants (R^3 only).
/// The conjectured one is exploratory.
pub fn eval_cap2_constants(ing: &Ingredients, cap2: &CapacityBracket) -> Result<Vec<InequalityReport>> {
    ing.require_convex()?;
    if ing.n != 3 || (cap2.p - 2.0).abs() > 1e-12 {
        return Err(CapError::InvalidParameter(
            "area lower bounds need n = 3 and p = 2".into(),
        ));
    }
    check_cap(ing, cap2)?;
    let k = polya_szego_constants();
    let root = ing.functionals.area.sqrt();
    [
        (InequalityId::E11Conjecture, k.conjectured),
        (InequalityId::E12, k.old),
        (InequalityId::E13, k.new),
    ]
    .into_iter()
    .map(|(id, c)| Check::new(id, Some(2.0), move |cap| Ok((c * root, cap))).with_capacity(ing, cap2))
    .collect()
}

fn riesz_provenance(rep: &mut InequalityReport, survey: &RieszSurvey) {
    rep.provenance.riesz_resolution = Some(survey.config.resolution);
    rep.provenance.riesz_samples = Some(survey.values.len());
}

fn check_survey(ing: &Ingredients, survey: &RieszSurvey) -> Result<()> {
    if survey.body != ing.body || survey.n != ing.n {
        return Err(CapError::InvalidParameter(format!(
            "single-layer survey of {} does not belong to {}",
            survey.body, ing.body
        )));
    }
    Ok(())
}

/// `max_x v(x) <= (n-1) (area/sigma)^{1/(n-1)}` and, given `cap_2`,
/// `(area/sigma)^{(n-2)/(n-1)} <= (n-1) cap_2 / ((n-2) sigma)`.
pub fn eval_riesz_e23_e24(
    ing: &Ingredients,
    survey: &RieszSurvey,
    cap2: Option<&CapacityBracket>,
) -> Result<Vec<InequalityReport>> {
    ing.require_convex()?;
    check_survey(ing, survey)?;
    let nf = ing.n as f64;
    let a = ing.normalized_area();
    let vmax = survey.max;
    let mut e23 = Check::new(InequalityId::E23, None, move |_| {
        Ok((vmax, (nf - 1.0) * a.powf(1.0 / (nf - 1.0))))
    })
    .without_capacity(ing)?;
    riesz_provenance(&mut e23, survey);
    let mut out = vec![e23];
    if let Some(cap) = cap2 {
        check_p2(cap)?;
        check_cap(ing, cap)?;
        let sigma = ing.sigma();
        out.push(
            Check::new(InequalityId::E24, Some(2.0), move |c| {
                Ok((
                    a.powf((nf - 2.0) / (nf - 1.0)),
                    (nf - 1.0) * c / ((nf - 2.0) * sigma),
                ))
            })
            .with_capacity(ing, cap)?,
        );
    }
    Ok(out)
}

fn check_p2(cap: &CapacityBracket) -> Result<()> {
    if (cap.p - 2.0).abs() > 1e-12 {
        return Err(CapError::InvalidParameter(format!(
            "expected a 2-capacity, got p = {}",
            cap.p
        )));
    }
    Ok(())
}

/// Exploratory: `max_x v(x)` against `(area/sigma)^{1/(n-1)}`.
pub fn scan_conjecture_e25(ing: &Ingredients, survey: &RieszSurvey) -> Result<InequalityReport> {
    ing.require_convex()?;
    check_survey(ing, survey)?;
    let nf = ing.n as f64;
    let a = ing.normalized_area();
    let vmax = survey.max;
    let mut rep = Check::new(InequalityId::E25Scan, None, move |_| {
        Ok((vmax, a.powf(1.0 / (nf - 1.0))))
    })
    .without_capacity(ing)?;
    riesz_provenance(&mut rep, survey);
    Ok(rep)
}

/// `(n-2) sigma / cap_2 <= int int |x-y|^{2-n} / area^2`.
pub fn eval_e26(
    ing: &Ingredients,
    survey: &RieszSurvey,
    cap2: &CapacityBracket,
) -> Result<InequalityReport> {
    ing.require_convex()?;
    check_survey(ing, survey)?;
    check_p2(cap2)?;
    check_cap(ing, cap2)?;
    let nf = ing.n as f64;
    let sigma = ing.sigma();
    let right = survey.double_integral / (survey.area * survey.area);
    let mut rep = Check::new(InequalityId::E26, Some(2.0), move |c| {
        Ok(((nf - 2.0) * sigma / c, right))
    })
    .with_capacity(ing, cap2)?;
    riesz_provenance(&mut rep, survey);
    rep.provenance.mesh_resolution = Some(survey.config.outer_resolution);
    Ok(rep)
}

/// Aleksandrov-Fenchel type bounds: `(area/sigma)^{(n-2)/(n-1)} <= willmore_2`;
/// for a given `p`, the bound of `(area/sigma)^{(n-p)/(n-1)}` by `willmore_p`
/// (`p >= 2`) or by the mixed term with `q` (`p <= 2`); and, given `cap_2`,
/// `cap_2/((n-2) sigma) <= (area/sigma)^{(n-2)/(n-1)} willmore_n^{1/(n-1)}`.
pub fn eval_e210_af_e20aa(
    ing: &Ingredients,
    p: Option<f64>,
    q: Option<f64>,
    cap2: Option<&CapacityBracket>,
) -> Result<Vec<InequalityReport>> {
    ing.require_convex()?;
    let n = ing.n;
    let nf = n as f64;
    let a = ing.normalized_area();
    let w2 = ing.willmore(2.0)?;
    let mut out = vec![Check::new(InequalityId::Af, None, move |_| {
        Ok((a.powf((nf - 2.0) / (nf - 1.0)), w2))
    })
    .without_capacity(ing)?];
    if let Some(p) = p {
        if !(p > 1.0 && p < nf) {
            return Err(CapError::InvalidParameter(format!("p = {p} outside (1, {n})")));
        }
        if let Some(q) = q {
            check_q(n, q)?;
        }
        let left = a.powf((nf - p) / (nf - 1.0));
        if p >= 2.0 {
            let w = ing.willmore(p)?;
            out.push(
                Check::new(InequalityId::E210, Some(p), move |_| Ok((left, w)))
                    .branch("first")
                    .without_capacity(ing)?,
            );
        }
        if p <= 2.0 {
            let q = q.unwrap_or(2.0);
            let right = second_branch(ing, p, q)?;
            out.push(
                Check::new(InequalityId::E210, Some(p), move |_| Ok((left, right)))
                    .branch("second")
                    .q(q)
                    .without_capacity(ing)?,
            );
        }
    }
    if let Some(cap) = cap2 {
        check_p2(cap)?;
        check_cap(ing, cap)?;
        let sigma = ing.sigma();
        let right = a.powf((nf - 2.0) / (nf - 1.0)) * ing.willmore(nf)?.powf(1.0 / (nf - 1.0));
        out.push(
            Check::new(InequalityId::E20aa, Some(2.0), move |c| {
                Ok((c / ((nf - 2.0) * sigma), right))
            })
            .with_capacity(ing, cap)?,
        );
    }
    Ok(out)
}
