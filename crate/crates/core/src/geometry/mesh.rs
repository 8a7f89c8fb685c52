//! Boundary discretization and the integrals built on it.

use serde::{Deserialize, Serialize};

use super::body::{dot, Body};
use super::quadrature::sphere_rule;
use super::unit_sphere_area;
use crate::error::{CapError, Result};

pub const MIN_RESOLUTION: usize = 2;
/// Upper bound on the number of surface elements.
pub const MAX_ELEMENTS: usize = 4_000_000;

#[derive(Debug, Clone)]
pub struct SurfaceElement {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
    /// Area weight `d sigma`.
    pub weight: f64,
    pub mean_curvature: f64,
}

/// Boundary quadrature of a body: one element per node of a product rule on
/// the radial chart about the body center. Weights carry the exact surface
/// Jacobian `rho^{n-1} / cos(normal, ray)`; normals and curvature are evaluated
/// from the body's analytic description.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub dim: usize,
    pub resolution: usize,
    pub elements: Vec<SurfaceElement>,
    /// Set when the body is known to have `H > 0` everywhere.
    pub strictly_convex: bool,
    pub convex: bool,
}

pub fn mesh_body(body: &Body, resolution: usize) -> Result<SurfaceMesh> {
    let n = body.dim();
    if resolution < MIN_RESOLUTION {
        return Err(CapError::Resolution(resolution));
    }
    let count = (resolution as f64).powi(n as i32 - 2) * 2.0 * resolution as f64;
    if count > MAX_ELEMENTS as f64 {
        return Err(CapError::Resolution(resolution));
    }
    let rule = sphere_rule(n, resolution);
    let mut elements = Vec::with_capacity(rule.len());
    for q in &rule {
        let sp = body.surface_point(&q.direction);
        if !(sp.radius > 0.0) {
            return Err(CapError::NotStarShaped(sp.radius));
        }
        if !(sp.cos_angle > 0.0) {
            return Err(CapError::NotStarShaped(sp.cos_angle));
        }
        let weight = sp.radius.powi(n as i32 - 1) * q.weight / sp.cos_angle;
        elements.push(SurfaceElement {
            point: sp.point,
            normal: sp.normal,
            weight,
            mean_curvature: sp.mean_curvature,
        });
    }
    Ok(SurfaceMesh {
        dim: n,
        resolution,
        elements,
        strictly_convex: body.has_positive_curvature(),
        convex: body.is_convex_kind(),
    })
}

impl SurfaceMesh {
    pub fn area(&self) -> f64 {
        self.elements.iter().map(|e| e.weight).sum()
    }

    /// Divergence theorem: `vol = (1/n) sum <x, nu> d sigma`.
    pub fn volume(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| dot(&e.point, &e.normal) * e.weight)
            .sum::<f64>()
            / self.dim as f64
    }

    /// `|sum nu d sigma| / area`; vanishes on a closed surface.
    pub fn closedness_defect(&self) -> f64 {
        let mut flux = vec![0.0; self.dim];
        for e in &self.elements {
            for (f, v) in flux.iter_mut().zip(&e.normal) {
                *f += v * e.weight;
            }
        }
        flux.iter().map(|v| v * v).sum::<f64>().sqrt() / self.area()
    }

    pub fn min_curvature(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| e.mean_curvature)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_curvature(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| e.mean_curvature)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `int H^{q-1} d sigma / sigma_{n-1}`.
    pub fn willmore(&self, q: f64) -> Result<f64> {
        let n = self.dim as f64;
        if !(q >= 1.0 && q <= n) {
            return Err(CapError::InvalidParameter(format!(
                "willmore exponent {q} outside [1, {n}]"
            )));
        }
        let mut s = 0.0;
        for e in &self.elements {
            let h = e.mean_curvature;
            if q > 1.0 && h < 0.0 {
                return Err(CapError::NonPositiveCurvature {
                    value: h,
                    location: e.point.clone(),
                });
            }
            s += if q == 1.0 { 1.0 } else { h.max(0.0).powf(q - 1.0) } * e.weight;
        }
        Ok(s / unit_sphere_area(self.dim)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricFunctionals {
    pub dim: usize,
    pub area: f64,
    pub volume: f64,
    /// `(q, willmore_q)` pairs in request order.
    pub willmore: Vec<(f64, f64)>,
    /// `(area / sigma_{n-1})^{1/(n-1)}`
    pub area_radius: f64,
    /// `(volume / (sigma_{n-1}/n))^{1/n}`
    pub volume_radius: f64,
}

impl GeometricFunctionals {
    pub fn willmore_at(&self, q: f64) -> Option<f64> {
        self.willmore
            .iter()
            .find(|(e, _)| (e - q).abs() < 1e-12)
            .map(|(_, w)| *w)
    }

    /// `area / sigma_{n-1}`
    pub fn normalized_area(&self) -> f64 {
        self.area_radius.powi(self.dim as i32 - 1)
    }
}

pub fn functionals(mesh: &SurfaceMesh, exponents: &[f64]) -> Result<GeometricFunctionals> {
    let n = mesh.dim;
    let sigma = unit_sphere_area(n)?;
    let area = mesh.area();
    let volume = mesh.volume();
    let willmore = exponents
        .iter()
        .map(|&q| mesh.willmore(q).map(|w| (q, w)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GeometricFunctionals {
        dim: n,
        area,
        volume,
        willmore,
        area_radius: (area / sigma).powf(1.0 / (n as f64 - 1.0)),
        volume_radius: (volume / (sigma / n as f64)).powf(1.0 / n as f64),
    })
}
