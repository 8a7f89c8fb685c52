//! p-capacity of compact bodies: closed forms for balls and annuli, and a
//! finite-element minimizer of the truncated p-Dirichlet energy.

mod diagnostics;
mod energy;
mod export;
mod lattice;
mod limit;
mod newton;
mod solver;

pub use diagnostics::{
    equilibrium_diagnostics, DiagnosticsConfig, EquilibriumDiagnostics, LevelSetReport, ScalingCheck,
};
pub use export::{export_field, FieldSidecar, GradingSidecar};
pub use lattice::{Grading, Lattice, Obstacle};
pub use limit::{fit_limit, p1_limit_probe, LimitProbe, PROBE_RANGE};
pub use newton::IterationRecord;
pub use solver::{
    bracket_margin, margin_floor, required_box_radius, solve_p_capacity,
    solve_p_capacity_with_field, NodeMask, PCapacityEstimate, PotentialField, SolverConfig,
    CLEARANCE_FACTOR, MIN_ORDER_GRID,
};

use crate::error::{CapError, Result};
use crate::geometry::unit_sphere_area;

/// Distance of admissible `p` from the endpoints `1` and `n` in numerical solves.
pub const P_MARGIN: f64 = 0.05;

fn check_p(n: usize, p: f64) -> Result<()> {
    if !(p > 1.0 && p < n as f64) {
        return Err(CapError::InvalidParameter(format!(
            "p = {p} outside (1, {n})"
        )));
    }
    Ok(())
}

/// `((p-1)/(n-p))^{1-p}`, the constant in the ball capacity.
pub fn capacity_constant(n: usize, p: f64) -> Result<f64> {
    check_p(n, p)?;
    let n = n as f64;
    Ok(((p - 1.0) / (n - p)).powf(1.0 - p))
}

/// `cap_p(B(x, r)) = r^{n-p} ((p-1)/(n-p))^{1-p} sigma_{n-1}`.
pub fn ball_capacity(n: usize, p: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(CapError::InvalidParameter(format!("radius {r} must be positive")));
    }
    Ok(r.powf(n as f64 - p) * capacity_constant(n, p)? * unit_sphere_area(n)?)
}

/// Capacity of `B(r)` relative to the concentric ball `B(R)`:
/// `((p-1)/(n-p))^{1-p} sigma_{n-1} (r^{(p-n)/(p-1)} - R^{(p-n)/(p-1)})^{1-p}`.
pub fn annulus_capacity(n: usize, p: f64, r: f64, outer: f64) -> Result<f64> {
    if !(r > 0.0 && r < outer) {
        return Err(CapError::InvalidParameter(format!(
            "annulus needs 0 < r < R (got r={r}, R={outer})"
        )));
    }
    let e = (p - n as f64) / (p - 1.0);
    Ok(capacity_constant(n, p)?
        * unit_sphere_area(n)?
        * (r.powf(e) - outer.powf(e)).powf(1.0 - p))
}

/// Radius of the ball whose capacity relative to `B(R)` equals `truncated`.
/// Inverts [`annulus_capacity`] in closed form.
pub fn annulus_equivalent_radius(n: usize, p: f64, truncated: f64, outer: f64) -> Result<f64> {
    let k = capacity_constant(n, p)? * unit_sphere_area(n)?;
    let e = (p - n as f64) / (p - 1.0);
    let inner = (truncated / k).powf(1.0 / (1.0 - p)) + outer.powf(e);
    Ok(inner.powf(1.0 / e))
}

/// Normalized capacity `cap_p / (((p-1)/(n-p))^{1-p} sigma_{n-1})`; equals
/// `r^{n-p}` for a ball of radius `r`.
pub fn normalized_capacity(n: usize, p: f64, cap: f64) -> Result<f64> {
    Ok(cap / (capacity_constant(n, p)? * unit_sphere_area(n)?))
}

/// Capacity radius `C* = normalized_capacity^{1/(n-p)}`.
pub fn capacity_radius(n: usize, p: f64, cap: f64) -> Result<f64> {
    Ok(normalized_capacity(n, p, cap)?.powf(1.0 / (n as f64 - p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_capacity_examples() {
        assert!((ball_capacity(3, 2.0, 1.0).unwrap() - 4.0 * PI).abs() < 1e-12);
        assert!((ball_capacity(3, 2.0, 5.0).unwrap() - 20.0 * PI).abs() < 1e-12);
        // ((1)/(2))^{-1} sigma_3 = 2 * 2 pi^2
        assert!((ball_capacity(4, 2.0, 1.0).unwrap() - 4.0 * PI * PI).abs() < 1e-12);
        assert!(ball_capacity(3, 3.0, 1.0).is_err());
        assert!(ball_capacity(3, 1.0, 1.0).is_err());
    }

    #[test]
    fn annulus_examples() {
        let far = annulus_capacity(3, 2.0, 1.0, 1e6).unwrap();
        assert!((far / (4.0 * PI) - 1.0).abs() < 1e-5);
        // radial oracle 4 pi / (1/r - 1/R)
        let a = annulus_capacity(3, 2.0, 1.0, 2.0).unwrap();
        assert!((a - 4.0 * PI / 0.5).abs() < 1e-12);
        assert!(annulus_capacity(3, 2.0, 2.0, 2.0).is_err());
        for &(n, p) in &[(3, 1.3), (3, 2.5), (4, 2.0), (2, 1.5)] {
            let b = ball_capacity(n, p, 0.7).unwrap();
            let a1 = annulus_capacity(n, p, 0.7, 3.0).unwrap();
            let a2 = annulus_capacity(n, p, 0.7, 6.0).unwrap();
            assert!(a1 > a2 && a2 > b);
        }
    }

    #[test]
    fn equivalent_radius_inverts_annulus() {
        for &p in &[1.3, 2.0, 2.5, 2.95] {
            let a = annulus_capacity(3, p, 1.3, 7.0).unwrap();
            let r = annulus_equivalent_radius(3, p, a, 7.0).unwrap();
            assert!((r - 1.3).abs() < 1e-9, "p={p}: {r}");
        }
    }
}
