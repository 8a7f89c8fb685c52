//! Extrapolation of `cap_p` to `p = 1`, where it equals the boundary area.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::capacity_constant;
use super::solver::{solve_p_capacity, SolverConfig};
use crate::error::{CapError, Result};
use crate::geometry::{mesh_body, Body};

/// Admissible exponents for the probe.
pub const PROBE_RANGE: (f64, f64) = (1.05, 1.5);
/// Largest RMS residual of the log-linear fit.
pub const MAX_RESIDUAL: f64 = 1e-2;
/// Surface resolution used for the reference area.
pub const AREA_RESOLUTION: usize = 96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitProbe {
    pub exponents: Vec<f64>,
    pub capacities: Vec<f64>,
    /// `cap_p / ((p-1)/(n-p))^{1-p}` at each exponent.
    pub reduced: Vec<f64>,
    pub extrapolated: f64,
    pub slope: f64,
    pub residual: f64,
    pub area: f64,
    /// `extrapolated / area - 1`.
    pub relative_gap: f64,
}

/// Fits `ln(cap_p / K_p) = a + b (p - 1)` by least squares and returns `e^a`.
/// The fit is exact for balls, where `cap_p / K_p = sigma r^{n-p}`.
pub fn fit_limit(exponents: &[f64], capacities: &[f64], n: usize) -> Result<(f64, f64, f64, Vec<f64>)> {
    let k = exponents.len();
    let reduced = exponents
        .iter()
        .zip(capacities)
        .map(|(&p, &c)| Ok(c / capacity_constant(n, p)?))
        .collect::<Result<Vec<f64>>>()?;
    let a = DMatrix::from_fn(k, 2, |i, j| if j == 0 { 1.0 } else { exponents[i] - 1.0 });
    let y = DVector::from_iterator(k, reduced.iter().map(|r| r.ln()));
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| CapError::InvalidParameter(format!("least squares failed: {e}")))?;
    let res = &a * &coef - &y;
    let rms = (res.norm_squared() / k as f64).sqrt();
    Ok((coef[0].exp(), coef[1], rms, reduced))
}

/// Solves at each exponent and extrapolates to `p = 1`.
pub fn p1_limit_probe(body: &Body, exponents: &[f64], config: &SolverConfig) -> Result<LimitProbe> {
    if exponents.len() < 2 {
        return Err(CapError::InvalidParameter("at least two exponents are needed".into()));
    }
    for w in exponents.windows(2) {
        if !(w[1] < w[0]) {
            return Err(CapError::InvalidParameter("exponents must decrease".into()));
        }
    }
    for &p in exponents {
        if p < PROBE_RANGE.0 - 1e-12 || p > PROBE_RANGE.1 + 1e-12 {
            return Err(CapError::InvalidParameter(format!(
                "exponent {p} outside [{}, {}]",
                PROBE_RANGE.0, PROBE_RANGE.1
            )));
        }
    }
    if !body.is_convex_kind() {
        return Err(CapError::InvalidParameter("the p -> 1 probe needs a convex body".into()));
    }
    let n = body.dim();
    let capacities = exponents
        .iter()
        .map(|&p| Ok(solve_p_capacity(body, p, config)?.best()))
        .collect::<Result<Vec<f64>>>()?;
    let (extrapolated, slope, residual, reduced) = fit_limit(exponents, &capacities, n)?;
    if residual > MAX_RESIDUAL {
        return Err(CapError::Extrapolation(residual));
    }
    let area = mesh_body(body, AREA_RESOLUTION)?.area();
    Ok(LimitProbe {
        exponents: exponents.to_vec(),
        capacities,
        reduced,
        extrapolated,
        slope,
        residual,
        area,
        relative_gap: extrapolated / area - 1.0,
    })
}
