//! Bodies, boundary quadrature and curvature functionals.

pub mod body;
pub mod mesh;
pub mod quadrature;
pub mod radial;

pub use body::{parse_body, Body, BodyKind, SurfacePoint};
pub use mesh::{functionals, mesh_body, GeometricFunctionals, SurfaceElement, SurfaceMesh};
pub use radial::{RadialFile, RadialFunction};

use crate::error::{CapError, Result};
use std::f64::consts::PI;

/// Surface area `sigma_{n-1} = 2 pi^{n/2} / Gamma(n/2)` of the unit sphere in R^n.
pub fn unit_sphere_area(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(CapError::InvalidParameter(format!("dimension {n} < 2")));
    }
    // sigma_{n-1} = 2 pi / (n - 2) * sigma_{n-3}
    let mut s = if n % 2 == 0 { 2.0 * PI } else { 4.0 * PI };
    let mut k = if n % 2 == 0 { 2 } else { 3 };
    while k < n {
        k += 2;
        s *= 2.0 * PI / (k as f64 - 2.0);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(2).unwrap() - 6.283185307179586).abs() < 1e-14);
        assert!((unit_sphere_area(3).unwrap() - 12.566370614359172).abs() < 1e-14);
        assert!((unit_sphere_area(4).unwrap() - 2.0 * PI * PI).abs() < 1e-13);
        // sigma_4 = 8 pi^2 / 3
        assert!((unit_sphere_area(5).unwrap() - 8.0 * PI * PI / 3.0).abs() < 1e-12);
        assert!(unit_sphere_area(1).is_err());
    }
}
