//! p-capacity solve with truncation correction, two-grid Richardson
//! extrapolation, and a bracket sized by the order observed on three grids.

use serde::{Deserialize, Serialize};

use super::energy::Energy;
use super::lattice::{build_mesh, Grading, Lattice, Obstacle, FREE, INNER};
use super::newton::{minimize, IterationRecord};
use super::{annulus_equivalent_radius, ball_capacity, capacity_radius, P_MARGIN};
use crate::error::{CapError, Result};
use crate::geometry::Body;

/// Grading starts at this fraction of the inradius.
pub const GRADING_START: f64 = 0.9;

/// Smallest cell count of the third grid used to observe the convergence order.
pub const MIN_ORDER_GRID: usize = 12;

/// Box radius in units of the circumradius: clearance of two diameters.
pub const CLEARANCE_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Cells across the box `[c-R, c+R]` on the fine grid.
    pub grid: usize,
    /// Truncation radius `R`; defaults to `CLEARANCE_FACTOR` times the circumradius.
    pub box_radius: Option<f64>,
    /// Relative energy tolerance of the Newton stopping test.
    pub tol: f64,
    pub max_iter: usize,
    /// Also solve on `N/2` cells and extrapolate.
    pub extrapolate: bool,
    /// Radially graded lattice (finer near the body).
    pub graded: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid: 96,
            box_radius: None,
            tol: 1e-8,
            max_iter: 200,
            extrapolate: true,
            graded: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PCapacityEstimate {
    pub dimension: usize,
    pub p: f64,
    /// Fine-grid energy of the truncated problem.
    pub raw: f64,
    /// Truncation-corrected fine-grid value.
    pub corrected: f64,
    /// Truncation-corrected value on the grid of `N/2` cells.
    pub coarse: Option<f64>,
    /// Truncation-corrected value on the grid of `N/4` cells.
    pub coarsest: Option<f64>,
    /// Convergence order seen across the three grids, if they approach monotonically.
    pub observed_order: Option<f64>,
    /// Richardson extrapolation of `coarse` and `corrected`.
    pub extrapolated: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    /// Capacity radius of `best()`.
    pub normalized: f64,
    pub spacing: f64,
    pub grid: usize,
    pub box_radius: f64,
    pub iterations: Vec<IterationRecord>,
}

impl PCapacityEstimate {
    /// Extrapolated value when available, else the corrected one, kept inside the bracket.
    pub fn best(&self) -> f64 {
        self.extrapolated
            .unwrap_or(self.corrected)
            .clamp(self.lower, self.upper)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    pub fn relative_half_width(&self) -> f64 {
        self.half_width() / self.best()
    }
}

/// Node classification of a converged field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeMask {
    Exterior,
    Inside,
    OuterBoundary,
}

/// Converged potential on the lattice (truncated problem, `u = 0` at `|x - c| = R`).
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub p: f64,
    pub lattice: Lattice,
    pub values: Vec<f64>,
    pub mask: Vec<NodeMask>,
    /// Radius `rho*` of the ball with the same truncated capacity.
    pub equivalent_radius: f64,
    pub descriptor: String,
    /// Fine-grid corrected capacity belonging to this field.
    pub capacity: f64,
}

impl PotentialField {
    pub fn dimension(&self) -> usize {
        3
    }

    /// `(rho*/R)^{(n-p)/(p-1)}`: value of the untruncated ball potential at `R`.
    pub fn far_value(&self) -> f64 {
        let beta = (3.0 - self.p) / (self.p - 1.0);
        (self.equivalent_radius / self.lattice.radius).powf(beta)
    }

    /// Truncated potential at `x`; zero beyond the lattice.
    pub fn raw_value(&self, x: &[f64; 3]) -> f64 {
        self.lattice.interpolate(&self.values, x).unwrap_or(0.0)
    }

    /// Potential lifted so that it matches the whole-space decay: `m + (1 - m) u`.
    pub fn corrected_value(&self, x: &[f64; 3]) -> f64 {
        let m = self.far_value();
        let c = self.lattice.center;
        let r = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)).sqrt();
        if r >= self.lattice.radius {
            let beta = (3.0 - self.p) / (self.p - 1.0);
            return (self.equivalent_radius / r).powf(beta);
        }
        m + (1.0 - m) * self.raw_value(x)
    }
}

fn radial_guess(lat: &Lattice, state: &[u8], p: f64, rho0: f64) -> Vec<f64> {
    let e = (p - 3.0) / (p - 1.0);
    let big = lat.radius.powf(e);
    let denom = rho0.powf(e) - big;
    (0..lat.len())
        .map(|i| match state[i] {
            INNER => 1.0,
            FREE => {
                let x = lat.position(i);
                let c = lat.center;
                let r = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2))
                    .sqrt()
                    .max(1e-12);
                ((r.powf(e) - big) / denom).clamp(0.0, 1.0)
            }
            _ => 0.0,
        })
        .collect()
}

struct LevelSolve {
    raw: f64,
    corrected: f64,
    equivalent_radius: f64,
    values: Vec<f64>,
    state: Vec<u8>,
    lattice: Lattice,
    records: Vec<IterationRecord>,
}

fn solve_level(
    ob: &dyn Obstacle,
    p: f64,
    cells: usize,
    radius: f64,
    octant: bool,
    config: &SolverConfig,
    start: Option<(&Lattice, &[f64])>,
) -> Result<LevelSolve> {
    let grading = if config.graded {
        Some(Grading::new(GRADING_START * ob.inradius(), radius)?)
    } else {
        None
    };
    let lattice = Lattice::new(ob.center(), radius, cells, octant, grading)?;
    let mesh = build_mesh(ob, lattice)?;
    let lat = mesh.lattice.clone();
    let rho0 = 0.5 * (ob.inradius() + ob.circumradius());
    let mut u = radial_guess(&lat, &mesh.state, p, rho0);
    if let Some((coarse, vals)) = start {
        for i in 0..u.len() {
            if mesh.state[i] == FREE {
                if let Some(v) = coarse.interpolate(vals, &lat.position(i)) {
                    u[i] = v;
                }
            }
        }
    }
    let mut energy = Energy::new(&mesh, p);
    let records = minimize(&mut energy, &mut u, config.tol, config.max_iter)?;
    let raw = energy.value(&u);
    let equivalent_radius = annulus_equivalent_radius(3, p, raw, radius)?;
    let corrected = ball_capacity(3, p, equivalent_radius)?;
    Ok(LevelSolve {
        raw,
        corrected,
        equivalent_radius,
        values: u,
        state: mesh.state,
        lattice: lat,
        records,
    })
}

/// Required box radius for an obstacle.
pub fn required_box_radius(ob: &dyn Obstacle) -> f64 {
    CLEARANCE_FACTOR * ob.circumradius()
}

pub(crate) fn solve_obstacle(
    ob: &dyn Obstacle,
    p: f64,
    config: &SolverConfig,
) -> Result<(PCapacityEstimate, PotentialField)> {
    if !(p >= 1.0 + P_MARGIN - 1e-12 && p <= 3.0 - P_MARGIN + 1e-12) {
        return Err(CapError::InvalidParameter(format!(
            "p = {p} outside [{}, {}]",
            1.0 + P_MARGIN,
            3.0 - P_MARGIN
        )));
    }
    if !(config.tol > 0.0) || config.max_iter == 0 {
        return Err(CapError::InvalidParameter("tol and max_iter must be positive".into()));
    }
    let required = required_box_radius(ob);
    let radius = config.box_radius.unwrap_or(required);
    if radius < required * (1.0 - 1e-12) {
        return Err(CapError::BoxTooSmall { radius, required });
    }
    let octant = ob.mirror_symmetric();
    let grid = config.grid;
    // extrapolation also solves on N/2 and N/4 cells; octant lattices need even cell counts
    let divisor = match (config.extrapolate, octant) {
        (true, true) => 8,
        (true, false) => 4,
        (false, true) => 2,
        (false, false) => 1,
    };
    if grid < 8 || grid % divisor != 0 {
        return Err(CapError::InvalidParameter(format!(
            "grid {grid} must be >= 8 and divisible by {divisor}"
        )));
    }
    let (coarsest, coarse) = if config.extrapolate {
        // the coarser levels only inform the bracket; a failure there drops the
        // extrapolation instead of the solve
        let q = if grid / 4 >= MIN_ORDER_GRID {
            solve_level(ob, p, grid / 4, radius, octant, config, None).ok()
        } else {
            None
        };
        let c = solve_level(
            ob,
            p,
            grid / 2,
            radius,
            octant,
            config,
            q.as_ref().map(|q| (&q.lattice, q.values.as_slice())),
        )
        .ok();
        (q.filter(|_| c.is_some()), c)
    } else {
        (None, None)
    };
    let fine = solve_level(
        ob,
        p,
        grid,
        radius,
        octant,
        config,
        coarse.as_ref().map(|c| (&c.lattice, c.values.as_slice())),
    )?;
    let inscribed = ball_capacity(3, p, ob.inradius())?;
    let (extrapolated, observed_order, lower, upper) = match &coarse {
        Some(c) => {
            let f = fine.corrected;
            let ext = (4.0 * f - c.corrected) / 3.0;
            let order = coarsest
                .as_ref()
                .and_then(|q| observed_order(q.corrected, c.corrected, f));
            if grid / 2 < MIN_ORDER_GRID {
                // a pre-asymptotic coarse level says nothing about the error
                (Some(ext), order, inscribed, fine.raw)
            } else {
                let margin = bracket_margin(f, ext, order, p, grid);
                let lo = (f.min(ext) - margin).max(inscribed);
                let hi = (f.max(ext) + margin).min(fine.raw);
                (Some(ext), order, lo, hi)
            }
        }
        None => (None, None, inscribed, fine.raw),
    };
    let lower = lower.min(fine.corrected);
    let upper = upper.max(fine.corrected);
    let mut iterations = Vec::new();
    for level in [&coarsest, &coarse].into_iter().flatten() {
        iterations.extend(level.records.iter().cloned());
    }
    iterations.extend(fine.records.iter().cloned());
    let best = extrapolated.unwrap_or(fine.corrected).clamp(lower, upper);
    let estimate = PCapacityEstimate {
        dimension: 3,
        p,
        raw: fine.raw,
        corrected: fine.corrected,
        coarse: coarse.as_ref().map(|c| c.corrected),
        coarsest: coarsest.as_ref().map(|c| c.corrected),
        observed_order,
        extrapolated,
        lower,
        upper,
        normalized: capacity_radius(3, p, best)?,
        spacing: fine.lattice.h,
        grid,
        box_radius: radius,
        iterations,
    };
    let mask = fine
        .state
        .iter()
        .map(|&s| match s {
            FREE => NodeMask::Exterior,
            INNER => NodeMask::Inside,
            _ => NodeMask::OuterBoundary,
        })
        .collect();
    let field = PotentialField {
        p,
        lattice: fine.lattice,
        values: fine.values,
        mask,
        equivalent_radius: fine.equivalent_radius,
        descriptor: ob.describe(),
        capacity: fine.corrected,
    };
    Ok((estimate, field))
}

/// Convergence order seen on the grids of `N/4`, `N/2` and `N` cells, when
/// the three values approach monotonically.
fn observed_order(coarsest: f64, coarse: f64, fine: f64) -> Option<f64> {
    let (d1, d2) = (coarsest - coarse, coarse - fine);
    (d1 * d2 > 0.0 && d1.abs() > d2.abs()).then(|| (d1 / d2).log2())
}

/// Margin beyond the fine and extrapolated values, as a multiple of their
/// difference plus a small relative floor. The extrapolant assumes order two;
/// with order `a` the order-`a` extrapolant lies `3 / (2^a - 1) - 1`
/// differences beyond it, and the multiple is that distance with a 25 %
/// allowance (first order when no order was observed). Order estimates on
/// coarse grids are unreliable, so the multiple is at least
/// [`margin_floor`].
pub fn bracket_margin(fine: f64, ext: f64, order: Option<f64>, p: f64, grid: usize) -> f64 {
    let a = order.unwrap_or(1.0).min(2.0);
    let from_order = 1.25 * (3.0 / (2f64.powf(a) - 1.0) - 1.0);
    from_order.max(margin_floor(p, grid)) * (ext - fine).abs() + 1e-5 * ext.abs()
}

/// Smallest margin multiple, calibrated on balls over grids of 32 to 96
/// cells: the ratio of extrapolation error to `|ext - fine|` peaks near 2.6
/// at `p = 1.05` and near 0.6 for `p >= 1.5` at 48 cells, and shrinks
/// roughly like the spacing.
pub fn margin_floor(p: f64, grid: usize) -> f64 {
    let near_one = ((1.5 - p) / 0.45).max(0.0);
    (0.6 + 2.2 * near_one) * 48.0 / grid as f64
}

fn check_body(body: &Body) -> Result<()> {
    if body.dim() != 3 {
        return Err(CapError::Unsupported(format!(
            "capacity solves are implemented in R^3 only (got n = {})",
            body.dim()
        )));
    }
    Ok(())
}

/// p-capacity of a body in R^3.
pub fn solve_p_capacity(body: &Body, p: f64, config: &SolverConfig) -> Result<PCapacityEstimate> {
    Ok(solve_p_capacity_with_field(body, p, config)?.0)
}

/// As [`solve_p_capacity`], also returning the fine-grid potential.
pub fn solve_p_capacity_with_field(
    body: &Body,
    p: f64,
    config: &SolverConfig,
) -> Result<(PCapacityEstimate, PotentialField)> {
    check_body(body)?;
    solve_obstacle(body, p, config)
}
