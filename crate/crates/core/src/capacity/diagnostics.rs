//! Checks on a converged potential: flux through level sets, sampled
//! convexity of superlevel sets and the capacity scaling of superlevel sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lattice::{build_mesh, path_metric, tet_corners, Mesh, Obstacle, FIXED_VERTEX, PERMS};
use super::solver::{solve_obstacle, PotentialField, SolverConfig, CLEARANCE_FACTOR};
use crate::error::{CapError, Result};
use crate::geometry::Body;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticsConfig {
    /// Levels `t` of the (truncation-corrected) potential.
    pub levels: Vec<f64>,
    /// Random chord midpoints tested per level set.
    pub convexity_pairs: usize,
    /// Allowed dip of the potential at a chord midpoint, relative to `t`.
    pub convexity_tolerance: f64,
    /// Levels at which `{u >= t}` is re-solved as an obstacle.
    pub scaling_levels: Vec<f64>,
    /// Solver settings of the re-solves (box radius is chosen per level set).
    pub solver: SolverConfig,
    pub seed: u64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            levels: vec![0.2, 0.4, 0.6, 0.8],
            convexity_pairs: 4000,
            convexity_tolerance: 1e-2,
            scaling_levels: vec![0.5],
            solver: SolverConfig {
                extrapolate: false,
                ..SolverConfig::default()
            },
            seed: 0x5eed,
        }
    }
}

impl DiagnosticsConfig {
    /// Truncation radius keeping every requested level set of `body` inside the box.
    /// The potential of the circumscribed ball bounds `u` from above, so `{u >= t}`
    /// lies within `rho t^{-(p-1)/(3-p)}` of the center.
    pub fn box_radius(&self, body: &Body, p: f64) -> f64 {
        let rho = body.circumradius();
        let t = self.levels.iter().chain(&self.scaling_levels).fold(1.0f64, |a, &b| a.min(b));
        let reach = rho * t.powf(-(p - 1.0) / (3.0 - p));
        (1.5 * reach).max(CLEARANCE_FACTOR * rho)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub level: f64,
    pub area: f64,
    /// `int_{u = t} |grad u|^{p-1} d sigma`.
    pub flux: f64,
    /// `flux / capacity - 1`.
    pub flux_deviation: f64,
    pub triangles: usize,
    pub convex: bool,
    /// Largest value of `t - u(midpoint)` over sampled chords (negative when convex).
    pub convexity_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub level: f64,
    /// Capacity of `{u >= t}` from a fresh solve.
    pub solved: f64,
    /// `t^{1-p}` times the capacity of the body.
    pub expected: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumDiagnostics {
    pub p: f64,
    /// Corrected capacity of the field, the reference for fluxes.
    pub capacity: f64,
    pub levels: Vec<LevelSetReport>,
    /// `(max flux - min flux) / capacity`.
    pub flux_spread: f64,
    pub scaling: Vec<ScalingCheck>,
}

impl EquilibriumDiagnostics {
    pub fn all_convex(&self) -> bool {
        self.levels.iter().all(|l| l.convex)
    }

    pub fn max_flux_deviation(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| l.flux_deviation.abs())
            .fold(0.0, f64::max)
    }
}

/// Calls `f(positions, values)` for every tetrahedron of the mesh.
pub(crate) fn for_each_tet(mesh: &Mesh, values: &[f64], mut f: impl FnMut(&[[f64; 3]; 4], &[f64; 4])) {
    let lat = &mesh.lattice;
    let off = lat.corner_offsets();
    for &b in &mesh.regular {
        let b = b as usize;
        for perm in &PERMS {
            let c = tet_corners(perm);
            let idx: [usize; 4] = std::array::from_fn(|v| b + off[c[v]]);
            let pos = idx.map(|i| lat.position(i));
            let val = idx.map(|i| values[i]);
            f(&pos, &val);
        }
    }
    for t in &mesh.generic {
        let val: [f64; 4] = std::array::from_fn(|v| {
            if t.node[v] == FIXED_VERTEX {
                t.fixed[v]
            } else {
                values[t.node[v] as usize]
            }
        });
        f(&t.pos, &val);
    }
}

/// Gradient of the linear interpolant on a tet.
pub(crate) fn tet_gradient(pos: &[[f64; 3]; 4], val: &[f64; 4]) -> [f64; 3] {
    let m = path_metric(*pos);
    let d = [val[1] - val[0], val[2] - val[1], val[3] - val[2]];
    let gd = [
        m[0] * d[0] + m[1] * d[1] + m[2] * d[2],
        m[1] * d[0] + m[3] * d[1] + m[4] * d[2],
        m[2] * d[0] + m[4] * d[1] + m[5] * d[2],
    ];
    // g = E^T G d with edge rows E_j = x_{j+1} - x_j
    let mut g = [0.0; 3];
    for j in 0..3 {
        for a in 0..3 {
            g[a] += (pos[j + 1][a] - pos[j][a]) * gd[j];
        }
    }
    g
}

fn lerp(a: &[f64; 3], b: &[f64; 3], t: f64) -> [f64; 3] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
}

fn tri_area(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let w = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    0.5 * (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt()
}

/// Polygon cut from a tet by `{f = level}` (empty, triangle or quad).
fn slice(pos: &[[f64; 3]; 4], val: &[f64; 4], level: f64) -> Vec<[f64; 3]> {
    let above: Vec<usize> = (0..4).filter(|&v| val[v] >= level).collect();
    let below: Vec<usize> = (0..4).filter(|&v| val[v] < level).collect();
    if above.is_empty() || below.is_empty() {
        return Vec::new();
    }
    let cut = |a: usize, b: usize| lerp(&pos[a], &pos[b], (level - val[a]) / (val[b] - val[a]));
    match (above.len(), below.len()) {
        (1, 3) => below.iter().map(|&b| cut(above[0], b)).collect(),
        (3, 1) => above.iter().map(|&a| cut(a, below[0])).collect(),
        _ => {
            let (a0, a1, b0, b1) = (above[0], above[1], below[0], below[1]);
            vec![cut(a0, b0), cut(a0, b1), cut(a1, b1), cut(a1, b0)]
        }
    }
}

struct LevelSet {
    area: f64,
    flux: f64,
    triangles: usize,
    points: Vec<[f64; 3]>,
}

fn extract(mesh: &Mesh, values: &[f64], level: f64, p: f64) -> LevelSet {
    let factor = mesh.lattice.symmetry_factor();
    let mut area = 0.0;
    let mut flux = 0.0;
    let mut triangles = 0;
    let mut points = Vec::new();
    for_each_tet(mesh, values, |pos, val| {
        let poly = slice(pos, val, level);
        if poly.len() < 3 {
            return;
        }
        let g = tet_gradient(pos, val);
        let gn = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        let mut a = tri_area(&poly[0], &poly[1], &poly[2]);
        triangles += 1;
        if poly.len() == 4 {
            a += tri_area(&poly[0], &poly[2], &poly[3]);
            triangles += 1;
        }
        area += a;
        flux += a * gn.powf(p - 1.0);
        points.push(poly[0]);
    });
    LevelSet {
        area: factor * area,
        flux: factor * flux,
        triangles,
        points,
    }
}

/// Reflects octant points into all eight octants about `c`.
fn unfold(points: &[[f64; 3]], c: [f64; 3], octant: bool) -> Vec<[f64; 3]> {
    if !octant {
        return points.to_vec();
    }
    let mut out = Vec::with_capacity(8 * points.len());
    for x in points {
        for m in 0..8 {
            let s = |a: usize| if m >> a & 1 == 1 { -1.0 } else { 1.0 };
            out.push([
                c[0] + s(0) * (x[0] - c[0]),
                c[1] + s(1) * (x[1] - c[1]),
                c[2] + s(2) * (x[2] - c[2]),
            ]);
        }
    }
    out
}

/// The superlevel set `{u >= t}` of a field as an obstacle.
struct SuperLevel<'a> {
    field: &'a PotentialField,
    level: f64,
    inradius: f64,
    circumradius: f64,
    symmetric: bool,
}

impl Obstacle for SuperLevel<'_> {
    fn level(&self, x: &[f64; 3]) -> f64 {
        self.level - self.field.corrected_value(x)
    }
    fn center(&self) -> [f64; 3] {
        self.field.lattice.center
    }
    fn inradius(&self) -> f64 {
        self.inradius
    }
    fn circumradius(&self) -> f64 {
        self.circumradius
    }
    fn mirror_symmetric(&self) -> bool {
        self.symmetric
    }
    fn describe(&self) -> String {
        format!("superlevel:{};t={}", self.field.descriptor, self.level)
    }
}

/// Level-set diagnostics of `field`, which must have been solved for `body`.
pub fn equilibrium_diagnostics(
    field: &PotentialField,
    body: &Body,
    config: &DiagnosticsConfig,
) -> Result<EquilibriumDiagnostics> {
    if body.descriptor() != field.descriptor {
        return Err(CapError::InvalidParameter(format!(
            "field was solved for {} not {}",
            field.descriptor,
            body.descriptor()
        )));
    }
    let mesh = build_mesh(body, field.lattice.clone())?;
    let p = field.p;
    let m = field.far_value();
    let c = field.lattice.center;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut levels = Vec::new();
    let mut sets = Vec::new();
    for &t in &config.levels {
        if !(t > 0.0 && t < 1.0) {
            return Err(CapError::InvalidParameter(format!("level {t} outside (0, 1)")));
        }
        // level of the truncated potential u with m + (1 - m) u = t
        let tau = (t - m) / (1.0 - m);
        if tau <= 0.0 {
            return Err(CapError::LevelSetTouchesBoundary(t));
        }
        let set = extract(&mesh, &field.values, tau, p);
        if set.triangles == 0 {
            return Err(CapError::LevelSetTouchesBoundary(t));
        }
        let flux = (1.0 - m).powf(p - 1.0) * set.flux;
        let pts = unfold(&set.points, c, field.lattice.octant);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..config.convexity_pairs {
            let a = &pts[rng.gen_range(0..pts.len())];
            let b = &pts[rng.gen_range(0..pts.len())];
            let mid = lerp(a, b, 0.5);
            worst = worst.max(t - field.corrected_value(&mid));
        }
        levels.push(LevelSetReport {
            level: t,
            area: set.area,
            flux,
            flux_deviation: flux / field.capacity - 1.0,
            triangles: set.triangles,
            convex: worst <= config.convexity_tolerance * t,
            convexity_violation: worst,
        });
        sets.push(pts);
    }
    let (lo, hi) = levels
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), l| (lo.min(l.flux), hi.max(l.flux)));
    let flux_spread = if levels.is_empty() { 0.0 } else { (hi - lo) / field.capacity };

    let mut scaling = Vec::new();
    for &t in &config.scaling_levels {
        let tau = (t - m) / (1.0 - m);
        if !(t > 0.0 && t < 1.0) || tau <= 0.0 {
            return Err(CapError::LevelSetTouchesBoundary(t));
        }
        let set = extract(&mesh, &field.values, tau, p);
        let dist = |x: &[f64; 3]| ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)).sqrt();
        let (rin, rout) = set
            .points
            .iter()
            .map(dist)
            .fold((f64::INFINITY, 0.0f64), |(a, b), d| (a.min(d), b.max(d)));
        if set.points.is_empty() {
            return Err(CapError::LevelSetTouchesBoundary(t));
        }
        let ob = SuperLevel {
            field,
            level: t,
            inradius: rin,
            circumradius: rout,
            symmetric: field.lattice.octant,
        };
        let (est, _) = solve_obstacle(&ob, p, &config.solver)?;
        let expected = t.powf(1.0 - p) * field.capacity;
        scaling.push(ScalingCheck {
            level: t,
            solved: est.corrected,
            expected,
            relative_error: est.corrected / expected - 1.0,
        });
    }
    Ok(EquilibriumDiagnostics {
        p,
        capacity: field.capacity,
        levels,
        flux_spread,
        scaling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_of_unit_tet() {
        let pos = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let val = [0.0, 1.0, 1.0, 1.0];
        let poly = slice(&pos, &val, 0.5);
        assert_eq!(poly.len(), 3);
        assert!((tri_area(&poly[0], &poly[1], &poly[2]) - 3f64.sqrt() / 8.0).abs() < 1e-12);
        let g = tet_gradient(&pos, &[0.0, 1.0, 2.0, 3.0]);
        assert!((g[0] - 1.0).abs() < 1e-12 && (g[1] - 2.0).abs() < 1e-12 && (g[2] - 3.0).abs() < 1e-12);
        let quad = slice(&pos, &[0.0, 0.0, 1.0, 1.0], 0.5);
        assert_eq!(quad.len(), 4);
    }
}
