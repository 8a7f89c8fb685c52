//! Single-layer potential `v(x) = int |x-y|^{2-n} d sigma(y) / sigma_{n-1}`
//! on a star-shaped boundary.
//!
//! The kernel is integrated in polar coordinates about the target: the
//! product rule on the sphere is rotated so its pole points at `x`. Near the
//! pole `|x - y| ~ c theta` while the polar measure carries
//! `sin^{n-2} theta`, so the integrand stays bounded and the Gauss rule in
//! `theta` converges without an exclusion patch.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CapError, Result};
use crate::geometry::body::dot;
use crate::geometry::quadrature::{sphere_rule, SphereNode};
use crate::geometry::{mesh_body, unit_sphere_area, Body};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RieszConfig {
    /// Boundary points at which `v` is sampled for the pointwise checks.
    pub samples: usize,
    /// Polar resolution of the rotated rule for each target.
    pub resolution: usize,
    /// Outer resolution of the double integral.
    pub outer_resolution: usize,
    /// Inner resolution of the double integral.
    pub inner_resolution: usize,
}

impl Default for RieszConfig {
    fn default() -> Self {
        RieszConfig {
            samples: 64,
            resolution: 48,
            outer_resolution: 16,
            inner_resolution: 32,
        }
    }
}

/// Potential values at sampled boundary points and the double integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszSurvey {
    pub body: String,
    pub n: usize,
    /// `v(x)` at each sample, in sample order.
    pub values: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub max: f64,
    pub min: f64,
    /// `int int |x-y|^{2-n} d sigma d sigma`.
    pub double_integral: f64,
    /// Area from the outer rule of the double integral.
    pub area: f64,
    pub config: RieszConfig,
}

/// Orthonormal frame whose first vector is `d`.
fn frame(d: &[f64]) -> Vec<Vec<f64>> {
    let n = d.len();
    let mut basis = vec![d.to_vec()];
    for k in 0..n {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for b in &basis {
            let c = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let len = dot(&v, &v).sqrt();
        if len > 1e-8 {
            v.iter_mut().for_each(|x| *x /= len);
            basis.push(v);
            if basis.len() == n {
                break;
            }
        }
    }
    basis
}

fn check(body: &Body) -> Result<()> {
    if body.dim() < 3 {
        return Err(CapError::InvalidParameter(format!(
            "single-layer potential needs n >= 3 (got {})",
            body.dim()
        )));
    }
    Ok(())
}

fn potential_with_rule(body: &Body, dir: &[f64], rule: &[SphereNode]) -> Result<f64> {
    let n = body.dim();
    let len = dot(dir, dir).sqrt();
    let d: Vec<f64> = dir.iter().map(|v| v / len).collect();
    let x = body.surface_point(&d).point;
    let basis = frame(&d);
    let mut sum = 0.0;
    for node in rule {
        let mut w = vec![0.0; n];
        for (c, b) in node.direction.iter().zip(&basis) {
            w.iter_mut().zip(b).for_each(|(a, v)| *a += c * v);
        }
        let sp = body.surface_point(&w);
        if !(sp.radius > 0.0 && sp.cos_angle > 0.0) {
            return Err(CapError::NotStarShaped(sp.radius.min(sp.cos_angle)));
        }
        let jac = sp.radius.powi(n as i32 - 1) / sp.cos_angle;
        let r2: f64 = x.iter().zip(&sp.point).map(|(a, b)| (a - b) * (a - b)).sum();
        if r2 == 0.0 {
            continue;
        }
        sum += node.weight * jac * r2.powf(0.5 * (2.0 - n as f64));
    }
    Ok(sum / unit_sphere_area(n)?)
}

/// `v` at the boundary point in body-frame direction `dir`.
pub fn single_layer_potential(body: &Body, dir: &[f64], resolution: usize) -> Result<f64> {
    check(body)?;
    if dir.len() != body.dim() {
        return Err(CapError::InvalidParameter("direction has wrong dimension".into()));
    }
    potential_with_rule(body, dir, &sphere_rule(body.dim(), resolution))
}

/// Deterministic, roughly uniform directions on `S^2` (Fibonacci lattice), or
/// the nodes of a coarse product rule in other dimensions.
pub fn sample_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    if n == 3 {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        return (0..count)
            .map(|i| {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
                let s = (1.0 - z * z).sqrt();
                let a = golden * i as f64;
                vec![s * a.cos(), s * a.sin(), z]
            })
            .collect();
    }
    let mut res = 2;
    while sphere_rule(n, res).len() < count {
        res += 1;
    }
    sphere_rule(n, res)
        .into_iter()
        .take(count)
        .map(|q| q.direction)
        .collect()
}

pub fn riesz_survey(body: &Body, config: &RieszConfig) -> Result<RieszSurvey> {
    check(body)?;
    let n = body.dim();
    if config.samples == 0 {
        return Err(CapError::InvalidParameter("need at least one sample".into()));
    }
    let rule = sphere_rule(n, config.resolution);
    let dirs = sample_directions(n, config.samples);
    let values = dirs
        .par_iter()
        .map(|d| potential_with_rule(body, d, &rule))
        .collect::<Result<Vec<_>>>()?;
    let points = dirs.iter().map(|d| body.surface_point(d).point).collect();

    let outer = mesh_body(body, config.outer_resolution)?;
    let inner = sphere_rule(n, config.inner_resolution);
    let sigma = unit_sphere_area(n)?;
    let parts = outer
        .elements
        .par_iter()
        .map(|e| {
            let local = body.to_local(&e.point);
            potential_with_rule(body, &local, &inner).map(|v| v * sigma * e.weight)
        })
        .collect::<Result<Vec<_>>>()?;
    let double_integral = parts.iter().sum();

    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(RieszSurvey {
        body: body.descriptor(),
        n,
        values,
        points,
        max,
        min,
        double_integral,
        area: outer.area(),
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_potential_is_one() {
        let b = Body::ball(3, 1.0).unwrap();
        for d in sample_directions(3, 5) {
            let v = single_layer_potential(&b, &d, 16).unwrap();
            assert!((v - 1.0).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn potential_scales_with_radius() {
        let b = Body::ball(3, 2.0).unwrap();
        let v = single_layer_potential(&b, &[0.3, -0.2, 0.9], 16).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn four_dimensional_sphere() {
        // mean of |x-y|^{2-n} over the unit sphere is 1 in every dimension
        let b = Body::ball(4, 1.0).unwrap();
        let v = single_layer_potential(&b, &[0.0, 0.0, 0.0, 1.0], 24).unwrap();
        assert!((v - 1.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn off_axis_ellipsoid_converges() {
        let b = Body::ellipsoid(&[1.0, 1.0, 2.0]).unwrap();
        let d = [0.6, 0.0, 0.8];
        let a = single_layer_potential(&b, &d, 32).unwrap();
        let c = single_layer_potential(&b, &d, 64).unwrap();
        assert!((a - c).abs() < 1e-6 * c, "{a} {c}");
    }

    #[test]
    fn double_integral_of_sphere() {
        let b = Body::ball(3, 1.0).unwrap();
        let s = riesz_survey(
            &b,
            &RieszConfig {
                samples: 4,
                resolution: 12,
                outer_resolution: 8,
                inner_resolution: 12,
            },
        )
        .unwrap();
        let four_pi = 4.0 * std::f64::consts::PI;
        assert!((s.double_integral - four_pi * four_pi).abs() < 1e-8);
    }

    #[test]
    fn frame_is_orthonormal() {
        let f = frame(&[0.0, 0.6, 0.8]);
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(&f[i], &f[j]);
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
