//! Inverse mean curvature flow of star-shaped curves (n = 2) and
//! axisymmetric surfaces (n = 3) written as radial graphs `rho(theta)`.
//!
//! Surfaces move with normal speed `1 / H_sum`, `H_sum` the sum of the
//! principal curvatures, so a sphere grows like `r0 e^{t/(n-1)}` and every
//! area grows like `e^t`. The flow commutes with scaling; samples are kept
//! normalized and the accumulated scale is tracked as a logarithm.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::capacity::capacity_constant;
use crate::error::{CapError, Result};
use crate::geometry::{unit_sphere_area, Body};
use crate::numfmt::sig12;

pub const DEFAULT_DT: f64 = 0.0025;
pub const DEFAULT_SAMPLES: usize = 32;
/// Safety factor of the explicit step bound.
pub const CFL: f64 = 0.2;
/// Largest admissible `max rho / min rho`.
pub const DEFAULT_ANISOTROPY_BOUND: f64 = 1e3;
/// Largest fraction of the flow integral that may come from the tail estimate.
pub const MAX_TAIL_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryClass {
    /// Closed curve in the plane, `theta` in `[0, 2 pi)`.
    PlanarCurve,
    /// Surface of revolution about the third axis, `theta` in `(0, pi)`.
    Axisymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSurface {
    pub class: SymmetryClass,
    /// Radii at the staggered angles `(i + 1/2) dtheta` (curves: `i dtheta`).
    pub rho: Vec<f64>,
    pub time: f64,
    /// Physical radii are `exp(log_scale) * rho`.
    pub log_scale: f64,
}

/// Local geometry at one sample.
#[derive(Debug, Clone, Copy)]
struct Local {
    rho: f64,
    d1: f64,
    h_sum: f64,
    /// `rho sin(theta) sqrt(rho^2 + rho'^2)` (surfaces) or `sqrt(rho^2 + rho'^2)` (curves).
    jac: f64,
}

impl FlowSurface {
    /// Samples a body. Curves need `n = 2`; surfaces need `n = 3` and
    /// rotational symmetry about the third body axis.
    pub fn from_body(body: &Body, samples: usize) -> Result<Self> {
        if samples < 8 {
            return Err(CapError::Resolution(samples));
        }
        let class = match body.dim() {
            2 => SymmetryClass::PlanarCurve,
            3 => SymmetryClass::Axisymmetric,
            n => {
                return Err(CapError::Unsupported(format!(
                    "flows are implemented for n = 2 and n = 3 (got {n})"
                )))
            }
        };
        let mut s = FlowSurface {
            class,
            rho: vec![0.0; samples],
            time: 0.0,
            log_scale: 0.0,
        };
        for i in 0..samples {
            let th = s.theta(i);
            s.rho[i] = match class {
                SymmetryClass::PlanarCurve => body.radial_local(&[th.cos(), th.sin()]),
                SymmetryClass::Axisymmetric => {
                    let (st, ct) = (th.sin(), th.cos());
                    let r = body.radial_local(&[st, 0.0, ct]);
                    for phi in [0.5 * PI, 0.25 * PI, 1.1] {
                        let q = body.radial_local(&[st * phi.cos(), st * phi.sin(), ct]);
                        if (q - r).abs() > 1e-9 * r {
                            return Err(CapError::Unsupported(format!(
                                "{} is not rotationally symmetric about the third axis",
                                body.descriptor()
                            )));
                        }
                    }
                    r
                }
            };
        }
        s.check()?;
        Ok(s)
    }

    pub fn dimension(&self) -> usize {
        match self.class {
            SymmetryClass::PlanarCurve => 2,
            SymmetryClass::Axisymmetric => 3,
        }
    }

    pub fn dtheta(&self) -> f64 {
        match self.class {
            SymmetryClass::PlanarCurve => 2.0 * PI / self.rho.len() as f64,
            SymmetryClass::Axisymmetric => PI / self.rho.len() as f64,
        }
    }

    pub fn theta(&self, i: usize) -> f64 {
        match self.class {
            SymmetryClass::PlanarCurve => i as f64 * self.dtheta(),
            SymmetryClass::Axisymmetric => (i as f64 + 0.5) * self.dtheta(),
        }
    }

    /// Sample with periodic (curves) or even (surfaces, at the poles) extension.
    fn at(&self, i: isize) -> f64 {
        let n = self.rho.len() as isize;
        let j = match self.class {
            SymmetryClass::PlanarCurve => i.rem_euclid(n),
            SymmetryClass::Axisymmetric => {
                if i < 0 {
                    -1 - i
                } else if i >= n {
                    2 * n - 1 - i
                } else {
                    i
                }
            }
        };
        self.rho[j as usize]
    }

    fn local(&self, i: usize) -> Local {
        let h = self.dtheta();
        let k = i as isize;
        let (m2, m1, c, p1, p2) = (self.at(k - 2), self.at(k - 1), self.at(k), self.at(k + 1), self.at(k + 2));
        let d1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
        let d2 = (-p2 + 16.0 * p1 - 30.0 * c + 16.0 * m1 - m2) / (12.0 * h * h);
        let g2 = c * c + d1 * d1;
        let g = g2.sqrt();
        let k1 = (c * c + 2.0 * d1 * d1 - c * d2) / (g2 * g);
        match self.class {
            SymmetryClass::PlanarCurve => Local {
                rho: c,
                d1,
                h_sum: k1,
                jac: g,
            },
            SymmetryClass::Axisymmetric => {
                let th = self.theta(i);
                let (st, ct) = (th.sin(), th.cos());
                let k2 = (c * st - d1 * ct) / (g * c * st);
                Local {
                    rho: c,
                    d1,
                    h_sum: k1 + k2,
                    jac: c * st * g,
                }
            }
        }
    }

    fn locals(&self) -> Vec<Local> {
        (0..self.rho.len()).map(|i| self.local(i)).collect()
    }

    fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    /// Integral of `f(H_sum)` over the normalized surface, with the
    /// Euler-Maclaurin end correction of the midpoint rule at the poles.
    fn integrate(&self, locals: &[Local], f: impl Fn(f64) -> f64) -> f64 {
        let h = self.dtheta();
        let sum: f64 = locals.iter().map(|l| f(l.h_sum) * l.jac).sum::<f64>() * h;
        match self.class {
            SymmetryClass::PlanarCurve => sum,
            SymmetryClass::Axisymmetric => {
                let n = locals.len();
                // the integrand is G(theta) sin(theta) with G even about each
                // pole; fit G = A + B theta^2 there from the first two samples
                let pole = |a: &Local, b: &Local| {
                    let g0 = f(a.h_sum) * a.rho * a.rho;
                    let g1 = f(b.h_sum) * b.rho * b.rho;
                    ((9.0 * g0 - g1) / 8.0, (g1 - g0) / (h * h))
                };
                let (g0, c0) = pole(&locals[0], &locals[1]);
                let (gpi, cpi) = pole(&locals[n - 1], &locals[n - 2]);
                // jumps f'(pi) - f'(0) and f'''(pi) - f'''(0) of G sin
                let d1 = -(gpi + g0);
                let d3 = -(3.0 * cpi - gpi) - (3.0 * c0 - g0);
                2.0 * PI * (sum + h * h / 24.0 * d1 - 7.0 * h.powi(4) / 5760.0 * d3)
            }
        }
    }

    /// Measure of the curve or surface.
    pub fn area(&self) -> f64 {
        let n = self.dimension() as i32;
        self.integrate(&self.locals(), |_| 1.0) * self.scale().powi(n - 1)
    }

    /// Sums of principal curvatures at the samples (physical scale).
    pub fn curvature_sums(&self) -> Vec<f64> {
        let s = self.scale();
        self.locals().iter().map(|l| l.h_sum / s).collect()
    }

    /// `(n-1)^{p-1} int H^{p-1} d sigma / sigma_{n-1}` with `H` the mean curvature.
    pub fn up(&self, p: f64) -> Result<f64> {
        let n = self.dimension();
        let m = (n - 1) as f64;
        let locals = self.locals();
        let raw = self.integrate(&locals, |hs| (hs / m).powf(p - 1.0));
        Ok(m.powf(p - 1.0) * raw * self.scale().powf(n as f64 - p) / unit_sphere_area(n)?)
    }

    /// `int H^{q-1} d sigma / sigma_{n-1}` with `H` the mean curvature.
    pub fn willmore(&self, q: f64) -> Result<f64> {
        let n = self.dimension();
        let m = (n - 1) as f64;
        let raw = self.integrate(&self.locals(), |hs| (hs / m).powf(q - 1.0));
        Ok(raw * self.scale().powf(n as f64 - q) / unit_sphere_area(n)?)
    }

    pub fn anisotropy(&self) -> f64 {
        let (lo, hi) = self
            .rho
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        hi / lo
    }

    /// Largest stable explicit step: `CFL dtheta^2 min H_sum^2 (rho^2 + rho'^2)`
    /// (scale invariant).
    pub fn step_bound(&self) -> f64 {
        let h = self.dtheta();
        self.locals()
            .iter()
            .map(|l| CFL * h * h * l.h_sum * l.h_sum * (l.rho * l.rho + l.d1 * l.d1))
            .fold(f64::INFINITY, f64::min)
    }

    fn check(&self) -> Result<()> {
        for (i, &r) in self.rho.iter().enumerate() {
            if !(r > 0.0) || !r.is_finite() {
                return Err(CapError::NotStarShaped(r));
            }
            let l = self.local(i);
            if !(l.h_sum > 0.0) {
                return Err(CapError::NonPositiveCurvature {
                    value: l.h_sum,
                    location: vec![self.theta(i)],
                });
            }
        }
        Ok(())
    }

    /// One explicit Euler step `rho_t = sqrt(rho^2 + rho'^2) / (rho H_sum)`.
    /// `dt` is flow time, independent of the normalization.
    fn euler_step(&mut self, dt: f64) -> Result<()> {
        let locals = self.locals();
        // in normalized coordinates the speed carries no scale factor
        for (r, l) in self.rho.iter_mut().zip(&locals) {
            if !(l.h_sum > 0.0) {
                return Err(CapError::NonPositiveCurvature {
                    value: l.h_sum,
                    location: vec![],
                });
            }
            *r += dt * (l.rho * l.rho + l.d1 * l.d1).sqrt() / (l.rho * l.h_sum);
        }
        self.time += dt;
        // renormalize so that the largest radius is one
        let hi = self.rho.iter().cloned().fold(0.0, f64::max);
        if !(hi.is_finite() && hi > 0.0) {
            return Err(CapError::BlowUp(hi));
        }
        for r in &mut self.rho {
            *r /= hi;
        }
        self.log_scale += hi.ln();
        self.check()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub dt: f64,
    pub final_time: f64,
    pub exponents: Vec<f64>,
    pub samples: usize,
    pub anisotropy_bound: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            dt: DEFAULT_DT,
            final_time: 1.0,
            exponents: vec![2.0],
            samples: DEFAULT_SAMPLES,
            anisotropy_bound: DEFAULT_ANISOTROPY_BOUND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowPoint {
    pub t: f64,
    pub area: f64,
    /// `U_p(t)` for each requested exponent, in order.
    pub up: Vec<f64>,
    /// `int H^{n-1} d sigma / sigma_{n-1}`.
    pub willmore: f64,
    /// Mean radius `exp(log_scale) * mean(rho)`.
    pub mean_radius: f64,
    pub anisotropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub body: String,
    pub dimension: usize,
    pub dt: f64,
    pub samples: usize,
    pub exponents: Vec<f64>,
    pub points: Vec<FlowPoint>,
}

fn record(s: &FlowSurface, exponents: &[f64]) -> Result<FlowPoint> {
    let n = s.dimension() as f64;
    let mean = s.rho.iter().sum::<f64>() / s.rho.len() as f64;
    Ok(FlowPoint {
        t: s.time,
        area: s.area(),
        up: exponents.iter().map(|&p| s.up(p)).collect::<Result<_>>()?,
        willmore: s.willmore(n)?,
        mean_radius: s.scale() * mean,
        anisotropy: s.anisotropy(),
    })
}

/// Integrates the flow from `body` up to `config.final_time`, recording every step.
pub fn evolve(body: &Body, config: &FlowConfig) -> Result<FlowTrace> {
    let mut s = FlowSurface::from_body(body, config.samples)?;
    let n = s.dimension() as f64;
    if !(config.dt > 0.0 && config.final_time > 0.0) {
        return Err(CapError::InvalidParameter("dt and T must be positive".into()));
    }
    for &p in &config.exponents {
        if !(p > 1.0 && p < n) {
            return Err(CapError::InvalidParameter(format!("p = {p} outside (1, {n})")));
        }
    }
    let steps = (config.final_time / config.dt).round().max(1.0) as usize;
    let dt = config.final_time / steps as f64;
    // normalize the initial samples
    let hi = s.rho.iter().cloned().fold(0.0, f64::max);
    s.rho.iter_mut().for_each(|r| *r /= hi);
    s.log_scale = hi.ln();
    let mut points = vec![record(&s, &config.exponents)?];
    for _ in 0..steps {
        let bound = s.step_bound();
        if dt > bound {
            return Err(CapError::StepTooLarge { dt, bound });
        }
        s.euler_step(dt)?;
        let a = s.anisotropy();
        if a > config.anisotropy_bound {
            return Err(CapError::BlowUp(a));
        }
        points.push(record(&s, &config.exponents)?);
    }
    Ok(FlowTrace {
        body: body.descriptor(),
        dimension: s.dimension(),
        dt,
        samples: config.samples,
        exponents: config.exponents.clone(),
        points,
    })
}

impl FlowTrace {
    fn column(&self, p: f64) -> Result<usize> {
        self.exponents
            .iter()
            .position(|&q| (q - p).abs() < 1e-12)
            .ok_or_else(|| CapError::Missing(format!("U_p for p = {p} not recorded")))
    }

    /// CSV with columns `t, area, U_p=<p>..., willmore_n`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = vec!["t".to_string(), "area".to_string()];
        header.extend(self.exponents.iter().map(|p| format!("U_p={}", sig12(*p))));
        header.push("willmore_n".into());
        writeln!(w, "{}", header.join(","))?;
        for pt in &self.points {
            let mut row = vec![sig12(pt.t), sig12(pt.area)];
            row.extend(pt.up.iter().map(|v| sig12(*v)));
            row.push(sig12(pt.willmore));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Largest relative deviation of `area(t)` from `e^t area(0)`.
pub fn area_growth_check(trace: &FlowTrace) -> f64 {
    let a0 = trace.points[0].area;
    trace
        .points
        .iter()
        .map(|pt| {
            let exact = pt.t.exp() * a0;
            (pt.area - exact).abs() / exact
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSlack {
    pub p: f64,
    /// `min_t U_p(0) e^{t (n-p)/(n-1)} - U_p(t)`.
    pub slack: f64,
    pub time_of_min: f64,
    pub u0: f64,
}

impl GrowthSlack {
    pub fn passes(&self, tol: f64) -> bool {
        self.slack >= -tol * self.u0
    }
}

/// Slack of `U_p(t) <= U_p(0) e^{t (n-p)/(n-1)}` along a surface trace, `2 <= p < 3`.
pub fn up_growth_check(trace: &FlowTrace, p: f64) -> Result<GrowthSlack> {
    if trace.dimension != 3 {
        return Err(CapError::Unsupported("growth check needs a surface trace".into()));
    }
    let n = 3.0;
    if !(p >= 2.0 && p < n) {
        return Err(CapError::InvalidParameter(format!("p = {p} outside [2, 3)")));
    }
    let c = trace.column(p)?;
    let u0 = trace.points[0].up[c];
    let rate = (n - p) / (n - 1.0);
    let (slack, time_of_min) = trace
        .points
        .iter()
        .map(|pt| (u0 * (rate * pt.t).exp() - pt.up[c], pt.t))
        .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
    Ok(GrowthSlack {
        p,
        slack,
        time_of_min,
        u0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowBound {
    pub p: f64,
    /// Trapezoid integral of `U_p^{1/(1-p)}` over the trace.
    pub integral: f64,
    /// Closed-form tail beyond the last point.
    pub tail: f64,
    /// Upper bound on `cap_p / sigma_{n-1}`.
    pub bound: f64,
    /// `bound / ((p-1)/(n-p))^{1-p}`; equals `r^{n-p}` for a ball.
    pub normalized: f64,
}

/// `(int_0^inf U_p^{1/(1-p)} dt)^{1-p}`, the tail continued with the growth bound.
pub fn flow_capacity_bound(trace: &FlowTrace, p: f64) -> Result<FlowBound> {
    let n = trace.dimension as f64;
    let c = trace.column(p)?;
    let e = 1.0 / (1.0 - p);
    let pts = &trace.points;
    let mut integral = 0.0;
    for w in pts.windows(2) {
        integral += 0.5 * (w[1].t - w[0].t) * (w[0].up[c].powf(e) + w[1].up[c].powf(e));
    }
    let last = pts.last().expect("trace has points");
    let tail = last.up[c].powf(e) * (n - 1.0) * (p - 1.0) / (n - p);
    let total = integral + tail;
    if tail > MAX_TAIL_FRACTION * total {
        return Err(CapError::TraceTooShort(tail / total));
    }
    let bound = total.powf(1.0 - p);
    Ok(FlowBound {
        p,
        integral,
        tail,
        bound,
        normalized: bound / capacity_constant(trace.dimension, p)?,
    })
}

/// Flow time after which the tail is below `MAX_TAIL_FRACTION` for a sphere.
pub fn required_time(n: usize, p: f64) -> f64 {
    let n = n as f64;
    let rate = (n - p) / ((n - 1.0) * (p - 1.0));
    (1.0 / MAX_TAIL_FRACTION).ln() / rate * 1.05
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_quantities_are_exact() {
        let b = Body::ball(3, 1.5).unwrap();
        let s = FlowSurface::from_body(&b, 32).unwrap();
        assert!((s.area() - 4.0 * PI * 2.25).abs() < 1e-9);
        for h in s.curvature_sums() {
            assert!((h - 2.0 / 1.5).abs() < 1e-12);
        }
        assert!((s.willmore(3.0).unwrap() - 1.0).abs() < 1e-9);
        let c = Body::ball(2, 2.0).unwrap();
        let s = FlowSurface::from_body(&c, 32).unwrap();
        assert!((s.area() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_area_matches_closed_form() {
        let b = Body::ellipsoid(&[1.0, 1.0, 2.0]).unwrap();
        let s = FlowSurface::from_body(&b, 64).unwrap();
        let e = (0.75f64).sqrt();
        let exact = 2.0 * PI * (1.0 + 2.0 / e * e.asin());
        assert!((s.area() / exact - 1.0).abs() < 1e-5, "{} vs {exact}", s.area());
    }

    #[test]
    fn rejects_non_axisymmetric() {
        let b = Body::ellipsoid(&[1.0, 1.5, 2.0]).unwrap();
        assert!(matches!(FlowSurface::from_body(&b, 32), Err(CapError::Unsupported(_))));
    }

    #[test]
    fn circle_grows_exponentially() {
        let b = Body::ball(2, 1.0).unwrap();
        let tr = evolve(&b, &FlowConfig { exponents: vec![1.5], ..Default::default() }).unwrap();
        let r = tr.points.last().unwrap().mean_radius;
        assert!((r / 1f64.exp() - 1.0).abs() < 5e-3);
    }
}
