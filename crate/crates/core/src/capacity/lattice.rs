//! Uniform lattice over the truncation box, Kuhn tetrahedra, and the
//! body-fitted pieces of tetrahedra cut by the obstacle or by the
//! truncation sphere.

use crate::error::{CapError, Result};
use crate::geometry::Body;

/// A compact obstacle in R^3 seen through an implicit inside test.
pub trait Obstacle: Sync {
    /// Non-positive inside or on the obstacle, positive outside.
    fn level(&self, x: &[f64; 3]) -> f64;
    fn center(&self) -> [f64; 3];
    fn inradius(&self) -> f64;
    fn circumradius(&self) -> f64;
    /// Symmetric under reflection in the coordinate planes through the center.
    fn mirror_symmetric(&self) -> bool;
    fn describe(&self) -> String;
}

impl Obstacle for Body {
    fn level(&self, x: &[f64; 3]) -> f64 {
        Body::level(self, x)
    }
    fn center(&self) -> [f64; 3] {
        let c = Body::center(self);
        [c[0], c[1], c[2]]
    }
    fn inradius(&self) -> f64 {
        Body::inradius(self)
    }
    fn circumradius(&self) -> f64 {
        Body::circumradius(self)
    }
    fn mirror_symmetric(&self) -> bool {
        Body::mirror_symmetric(self)
    }
    fn describe(&self) -> String {
        self.descriptor()
    }
}

pub(crate) const FREE: u8 = 0;
pub(crate) const INNER: u8 = 1;
pub(crate) const OUTER: u8 = 2;

/// Axis orders of the six Kuhn tetrahedra of a cube.
pub(crate) const PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Corner bit masks (bit i = +1 along axis i) of the vertex path of each tet.
pub(crate) fn tet_corners(perm: &[usize; 3]) -> [usize; 4] {
    let a = 1 << perm[0];
    let b = a | (1 << perm[1]);
    [0, a, b, 7]
}

/// A tetrahedron (or a body-fitted piece of one) handled generically.
#[derive(Debug, Clone)]
pub(crate) struct GenericTet {
    pub pos: [[f64; 3]; 4],
    /// Lattice node index, or `u32::MAX` for a fixed boundary point.
    pub node: [u32; 4],
    /// Value used at fixed vertices.
    pub fixed: [f64; 4],
    pub grads: [[f64; 3]; 4],
    pub vol: f64,
}

pub(crate) const FIXED_VERTEX: u32 = u32::MAX;

/// Radial grading about the lattice center. The lattice radius `s` maps to
/// `inner * s / knee` for `s <= knee` and to `inner * exp(rate (s - knee))`
/// beyond, with `rate` chosen so that `R` maps to itself. Spacing grows
/// geometrically outside `inner`; the region inside `inner` (taken inside the
/// body) is compressed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grading {
    pub inner: f64,
    pub knee: f64,
    pub rate: f64,
}

/// Fraction of the lattice radius given to the compressed core.
pub const GRADING_KNEE: f64 = 0.2;

impl Grading {
    pub fn new(inner: f64, radius: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < radius) {
            return Err(CapError::InvalidParameter(format!(
                "grading radius {inner} must lie in (0, {radius})"
            )));
        }
        let knee = GRADING_KNEE * radius;
        Ok(Grading {
            inner,
            knee,
            rate: (radius / inner).ln() / (radius - knee),
        })
    }

    #[inline]
    pub fn forward(&self, s: f64) -> f64 {
        if s <= self.knee {
            self.inner * s / self.knee
        } else {
            self.inner * (self.rate * (s - self.knee)).exp()
        }
    }

    #[inline]
    pub fn inverse(&self, rho: f64) -> f64 {
        if rho <= self.inner {
            rho * self.knee / self.inner
        } else {
            self.knee + (rho / self.inner).ln() / self.rate
        }
    }
}

#[derive(Debug, Clone)]
pub struct Lattice {
    /// Nodes per axis.
    pub dims: [usize; 3],
    /// Lattice-coordinate origin and spacing (before grading).
    pub origin: [f64; 3],
    pub h: f64,
    pub center: [f64; 3],
    /// Radius of the truncation sphere about `center`.
    pub radius: f64,
    /// Only the positive octant about `center` is meshed.
    pub octant: bool,
    pub grading: Option<Grading>,
}

impl Lattice {
    /// `cells` is the number of cells across the full box `[c-R, c+R]`.
    pub fn new(
        center: [f64; 3],
        radius: f64,
        cells: usize,
        octant: bool,
        grading: Option<Grading>,
    ) -> Result<Self> {
        if cells < 4 || (octant && cells % 2 != 0) {
            return Err(CapError::InvalidParameter(format!(
                "grid of {cells} cells per axis (needs >= 4, even for symmetric bodies)"
            )));
        }
        let h = 2.0 * radius / cells as f64;
        let (n, origin) = if octant {
            (cells / 2 + 1, center)
        } else {
            (
                cells + 1,
                [center[0] - radius, center[1] - radius, center[2] - radius],
            )
        };
        Ok(Lattice {
            dims: [n, n, n],
            origin,
            h,
            center,
            radius,
            octant,
            grading,
        })
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let r = idx / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    /// Lattice coordinates of a node.
    #[inline]
    pub fn xi(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        [
            self.origin[0] + c[0] as f64 * self.h,
            self.origin[1] + c[1] as f64 * self.h,
            self.origin[2] + c[2] as f64 * self.h,
        ]
    }

    /// Physical position of a node.
    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 3] {
        self.map(&self.xi(idx))
    }

    fn radial(&self, x: &[f64; 3], f: impl Fn(f64) -> f64) -> [f64; 3] {
        let c = self.center;
        let v = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if s == 0.0 {
            return *x;
        }
        let t = f(s) / s;
        [c[0] + t * v[0], c[1] + t * v[1], c[2] + t * v[2]]
    }

    /// Lattice coordinates to physical coordinates.
    pub fn map(&self, xi: &[f64; 3]) -> [f64; 3] {
        match &self.grading {
            Some(g) => self.radial(xi, |s| g.forward(s)),
            None => *xi,
        }
    }

    /// Physical coordinates to lattice coordinates.
    pub fn unmap(&self, x: &[f64; 3]) -> [f64; 3] {
        match &self.grading {
            Some(g) => self.radial(x, |r| g.inverse(r)),
            None => *x,
        }
    }

    /// Offsets of the 8 cube corners (bit-indexed) from the base node.
    pub fn corner_offsets(&self) -> [usize; 8] {
        let sx = 1;
        let sy = self.dims[0];
        let sz = self.dims[0] * self.dims[1];
        let mut o = [0; 8];
        for (m, v) in o.iter_mut().enumerate() {
            *v = (m & 1) * sx + ((m >> 1) & 1) * sy + ((m >> 2) & 1) * sz;
        }
        o
    }

    /// Energy multiplier accounting for the unmeshed octants.
    pub fn symmetry_factor(&self) -> f64 {
        if self.octant {
            8.0
        } else {
            1.0
        }
    }

    fn dist_to_center(&self, x: &[f64; 3]) -> f64 {
        ((x[0] - self.center[0]).powi(2)
            + (x[1] - self.center[1]).powi(2)
            + (x[2] - self.center[2]).powi(2))
        .sqrt()
    }

    /// Maps a world point into the meshed region (reflects into the octant).
    pub fn fold(&self, x: &[f64; 3]) -> [f64; 3] {
        if self.octant {
            [
                self.center[0] + (x[0] - self.center[0]).abs(),
                self.center[1] + (x[1] - self.center[1]).abs(),
                self.center[2] + (x[2] - self.center[2]).abs(),
            ]
        } else {
            *x
        }
    }

    /// Piecewise-linear interpolation of nodal values on the Kuhn mesh in
    /// lattice coordinates. Points outside the lattice return `None`.
    pub fn interpolate(&self, values: &[f64], x: &[f64; 3]) -> Option<f64> {
        let y = self.unmap(&self.fold(x));
        let mut base = [0usize; 3];
        let mut frac = [0f64; 3];
        for a in 0..3 {
            let t = (y[a] - self.origin[a]) / self.h;
            if !(t >= 0.0) || t > (self.dims[a] - 1) as f64 {
                return None;
            }
            let i = (t.floor() as usize).min(self.dims[a] - 2);
            base[a] = i;
            frac[a] = t - i as f64;
        }
        let b = self.index(base[0], base[1], base[2]);
        let off = self.corner_offsets();
        // Kuhn tet containing the point: axes sorted by decreasing fraction
        let mut order = [0usize, 1, 2];
        order.sort_by(|&p, &q| frac[q].partial_cmp(&frac[p]).unwrap());
        let c = tet_corners(&order);
        let f: Vec<f64> = c.iter().map(|&m| values[b + off[m]]).collect();
        Some(
            f[0] + frac[order[0]] * (f[1] - f[0])
                + frac[order[1]] * (f[2] - f[1])
                + frac[order[2]] * (f[3] - f[2]),
        )
    }
}

/// Level of the fixed region for a node state: non-positive inside the
/// region (obstacle for INNER, outside the truncation sphere for OUTER).
fn region_level(ob: &dyn Obstacle, lat: &Lattice, state: u8, x: &[f64; 3]) -> f64 {
    match state {
        INNER => ob.level(x),
        _ => lat.radius - lat.dist_to_center(x),
    }
}

fn region_value(state: u8) -> f64 {
    if state == INNER {
        1.0
    } else {
        0.0
    }
}

/// Point where the segment from `fixed` (in the region) to `free` leaves it.
fn crossing(ob: &dyn Obstacle, lat: &Lattice, state: u8, fixed: &[f64; 3], free: &[f64; 3]) -> [f64; 3] {
    let mut lo = 0.0; // in region
    let mut hi = 1.0;
    let at = |t: f64| {
        [
            fixed[0] + t * (free[0] - fixed[0]),
            fixed[1] + t * (free[1] - fixed[1]),
            fixed[2] + t * (free[2] - fixed[2]),
        ]
    };
    for _ in 0..52 {
        let mid = 0.5 * (lo + hi);
        if region_level(ob, lat, state, &at(mid)) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// The discretized exterior problem: node states, fixed values, and the
/// tetrahedra carrying energy.
pub(crate) struct Mesh {
    pub lattice: Lattice,
    pub state: Vec<u8>,
    /// Base nodes of cells whose eight corners are all free.
    pub regular: Vec<u32>,
    /// Per Kuhn tet of each regular cell (6 per cell): packed inverse Gram
    /// matrix of the path edges and the volume, see [`path_metric`].
    pub metric: Vec<[f64; 7]>,
    pub generic: Vec<GenericTet>,
}

/// Snapping threshold: free nodes closer than this fraction of the cell size
/// to a fixed region along a mesh edge are absorbed into it.
pub(crate) const SNAP_FRACTION: f64 = 0.05;

const NEIGHBOR_STEPS: [[i64; 3]; 7] = [
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 1, 0],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
];

pub(crate) fn build_mesh(ob: &dyn Obstacle, lattice: Lattice) -> Result<Mesh> {
    let lat = lattice;
    let nn = lat.len();
    let mut state = vec![FREE; nn];
    let mut inner_count = 0usize;
    for (idx, s) in state.iter_mut().enumerate() {
        let x = lat.position(idx);
        let inner = ob.level(&x) <= 0.0;
        let outer = lat.dist_to_center(&x) >= lat.radius;
        *s = match (inner, outer) {
            (true, true) => {
                return Err(CapError::BoxTooSmall {
                    radius: lat.radius,
                    required: ob.circumradius(),
                })
            }
            (true, false) => {
                inner_count += 1;
                INNER
            }
            (false, true) => OUTER,
            (false, false) => FREE,
        };
    }
    if inner_count == 0 {
        return Err(CapError::InvalidParameter(
            "obstacle contains no lattice node; refine the grid".into(),
        ));
    }
    snap_nodes(ob, &lat, &mut state);

    let d = lat.dims;
    let off = lat.corner_offsets();
    let mut regular = Vec::new();
    let mut metric = Vec::new();
    let mut generic = Vec::new();
    for k in 0..d[2] - 1 {
        for j in 0..d[1] - 1 {
            for i in 0..d[0] - 1 {
                let b = lat.index(i, j, k);
                let st: [u8; 8] = std::array::from_fn(|m| state[b + off[m]]);
                if st.iter().all(|&s| s == FREE) {
                    regular.push(b as u32);
                    for perm in &PERMS {
                        let c = tet_corners(perm);
                        metric.push(path_metric(std::array::from_fn(|v| lat.position(b + off[c[v]]))));
                    }
                    continue;
                }
                if st.iter().all(|&s| s != FREE) {
                    if st.contains(&INNER) && st.contains(&OUTER) {
                        return Err(CapError::BoxTooSmall {
                            radius: lat.radius,
                            required: ob.circumradius(),
                        });
                    }
                    continue;
                }
                for perm in &PERMS {
                    let c = tet_corners(perm);
                    let nodes: [usize; 4] = std::array::from_fn(|v| b + off[c[v]]);
                    add_tet(ob, &lat, &state, &nodes, &mut generic)?;
                }
            }
        }
    }
    Ok(Mesh {
        lattice: lat,
        state,
        regular,
        metric,
        generic,
    })
}

/// For a tet with vertex path `x0..x3` and value differences
/// `d_j = f_{j+1} - f_j`, the gradient satisfies `E g = d` with edge rows
/// `E_j = x_{j+1} - x_j`, so `|g|^2 = d^T G d` with `G = (E E^T)^{-1}`.
/// Returns `[G00, G01, G02, G11, G12, G22, volume]`.
pub(crate) fn path_metric(x: [[f64; 3]; 4]) -> [f64; 7] {
    let e: [[f64; 3]; 3] = std::array::from_fn(|j| {
        [x[j + 1][0] - x[j][0], x[j + 1][1] - x[j][1], x[j + 1][2] - x[j][2]]
    });
    let d = |a: usize, b: usize| e[a][0] * e[b][0] + e[a][1] * e[b][1] + e[a][2] * e[b][2];
    let (a00, a01, a02, a11, a12, a22) = (d(0, 0), d(0, 1), d(0, 2), d(1, 1), d(1, 2), d(2, 2));
    let c00 = a11 * a22 - a12 * a12;
    let c01 = a02 * a12 - a01 * a22;
    let c02 = a01 * a12 - a02 * a11;
    let det = a00 * c00 + a01 * c01 + a02 * c02;
    let c11 = a00 * a22 - a02 * a02;
    let c12 = a01 * a02 - a00 * a12;
    let c22 = a00 * a11 - a01 * a01;
    [
        c00 / det,
        c01 / det,
        c02 / det,
        c11 / det,
        c12 / det,
        c22 / det,
        det.max(0.0).sqrt() / 6.0,
    ]
}

fn snap_nodes(ob: &dyn Obstacle, lat: &Lattice, state: &mut [u8]) {
    let d = lat.dims;
    let mut snapped = Vec::new();
    for idx in 0..state.len() {
        if state[idx] != FREE {
            continue;
        }
        let c = lat.coords(idx);
        let x = lat.position(idx);
        'dirs: for step in NEIGHBOR_STEPS.iter() {
            for sign in [-1i64, 1] {
                let mut nb = [0usize; 3];
                for a in 0..3 {
                    let v = c[a] as i64 + sign * step[a];
                    if v < 0 || v >= d[a] as i64 {
                        continue 'dirs;
                    }
                    nb[a] = v as usize;
                }
                let nidx = lat.index(nb[0], nb[1], nb[2]);
                let s = state[nidx];
                if s == FREE {
                    continue;
                }
                let y = lat.position(nidx);
                let cx = crossing(ob, lat, s, &y, &x);
                let dist = ((cx[0] - x[0]).powi(2) + (cx[1] - x[1]).powi(2) + (cx[2] - x[2]).powi(2)).sqrt();
                if dist < SNAP_FRACTION * lat.h {
                    snapped.push((idx, s));
                    break 'dirs;
                }
            }
        }
    }
    for (idx, s) in snapped {
        state[idx] = s;
    }
}

fn add_tet(
    ob: &dyn Obstacle,
    lat: &Lattice,
    state: &[u8],
    nodes: &[usize; 4],
    out: &mut Vec<GenericTet>,
) -> Result<()> {
    let st: [u8; 4] = std::array::from_fn(|v| state[nodes[v]]);
    let pos: [[f64; 3]; 4] = std::array::from_fn(|v| lat.position(nodes[v]));
    let mut free: Vec<usize> = (0..4).filter(|&v| st[v] == FREE).collect();
    let fixed: Vec<usize> = (0..4).filter(|&v| st[v] != FREE).collect();
    if free.is_empty() {
        return Ok(());
    }
    if fixed.is_empty() {
        push_piece(out, [pos[0], pos[1], pos[2], pos[3]], [Vtx::Node(nodes[0]), Vtx::Node(nodes[1]), Vtx::Node(nodes[2]), Vtx::Node(nodes[3])]);
        return Ok(());
    }
    let region = st[fixed[0]];
    if fixed.iter().any(|&v| st[v] != region) {
        return Err(CapError::BoxTooSmall {
            radius: lat.radius,
            required: ob.circumradius(),
        });
    }
    let val = region_value(region);
    // free vertices ordered by node index so shared quads split identically
    free.sort_by_key(|&v| nodes[v]);
    let cross = |fv: usize, xv: usize| crossing(ob, lat, region, &pos[xv], &pos[fv]);
    let node = |v: usize| (pos[v], Vtx::Node(nodes[v]));
    let fixpt = |p: [f64; 3]| (p, Vtx::Fixed(val));
    match (free.len(), fixed.len()) {
        (1, 3) => {
            let o = free[0];
            let pieces = [node(o), fixpt(cross(o, fixed[0])), fixpt(cross(o, fixed[1])), fixpt(cross(o, fixed[2]))];
            push_pieces(out, &[pieces]);
        }
        (3, 1) => {
            let x = fixed[0];
            let (o1, o2, o3) = (free[0], free[1], free[2]);
            let (c1, c2, c3) = (fixpt(cross(o1, x)), fixpt(cross(o2, x)), fixpt(cross(o3, x)));
            push_pieces(
                out,
                &[
                    [node(o1), c1, c2, c3],
                    [node(o1), node(o2), node(o3), c3],
                    [node(o1), node(o2), c3, c2],
                ],
            );
        }
        (2, 2) => {
            let (o1, o2) = (free[0], free[1]);
            let (x1, x2) = (fixed[0], fixed[1]);
            let c11 = fixpt(cross(o1, x1));
            let c12 = fixpt(cross(o2, x1));
            let c21 = fixpt(cross(o1, x2));
            let c22 = fixpt(cross(o2, x2));
            push_pieces(
                out,
                &[
                    [node(o1), node(o2), c12, c22],
                    [node(o1), c11, c12, c22],
                    [node(o1), c11, c22, c21],
                ],
            );
        }
        _ => unreachable!(),
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Vtx {
    Node(usize),
    Fixed(f64),
}

fn push_pieces(out: &mut Vec<GenericTet>, pieces: &[[([f64; 3], Vtx); 4]]) {
    for p in pieces {
        push_piece(out, [p[0].0, p[1].0, p[2].0, p[3].0], [p[0].1, p[1].1, p[2].1, p[3].1]);
    }
}

fn push_piece(out: &mut Vec<GenericTet>, pos: [[f64; 3]; 4], vtx: [Vtx; 4]) {
    let e = |i: usize| {
        [
            pos[i][0] - pos[0][0],
            pos[i][1] - pos[0][1],
            pos[i][2] - pos[0][2],
        ]
    };
    let (a, b, c) = (e(1), e(2), e(3));
    let det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0]);
    let scale = [a, b, c]
        .iter()
        .map(|v| v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
        .fold(0.0f64, f64::max)
        .powf(1.5);
    if det.abs() <= 1e-12 * scale {
        return;
    }
    // rows of the inverse-transpose: gradients of barycentric coordinates 1..3
    let cross = |u: [f64; 3], v: [f64; 3]| {
        [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ]
    };
    let g1 = cross(b, c).map(|v| v / det);
    let g2 = cross(c, a).map(|v| v / det);
    let g3 = cross(a, b).map(|v| v / det);
    let g0 = [
        -(g1[0] + g2[0] + g3[0]),
        -(g1[1] + g2[1] + g3[1]),
        -(g1[2] + g2[2] + g3[2]),
    ];
    let mut node = [FIXED_VERTEX; 4];
    let mut fixed = [0.0; 4];
    for v in 0..4 {
        match vtx[v] {
            Vtx::Node(i) => node[v] = i as u32,
            Vtx::Fixed(val) => fixed[v] = val,
        }
    }
    out.push(GenericTet {
        pos,
        node,
        fixed,
        grads: [g0, g1, g2, g3],
        vol: det.abs() / 6.0,
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kuhn_tets_tile_the_cube() {
        let mut out = Vec::new();
        for perm in &PERMS {
            let c = tet_corners(perm);
            let pos: [[f64; 3]; 4] = std::array::from_fn(|v| {
                [(c[v] & 1) as f64, ((c[v] >> 1) & 1) as f64, ((c[v] >> 2) & 1) as f64]
            });
            push_piece(&mut out, pos, [Vtx::Fixed(0.0); 4]);
        }
        let v: f64 = out.iter().map(|t| t.vol).sum();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn interpolation_reproduces_linear_functions() {
        let lat = Lattice::new([0.0; 3], 1.0, 8, false, None).unwrap();
        let vals: Vec<f64> = (0..lat.len())
            .map(|i| {
                let x = lat.position(i);
                1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2]
            })
            .collect();
        for x in [[0.1, 0.33, -0.7], [0.9, -0.95, 0.2], [0.0, 0.0, 0.0]] {
            let v = lat.interpolate(&vals, &x).unwrap();
            assert!((v - (1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2])).abs() < 1e-12);
        }
        assert!(lat.interpolate(&vals, &[2.0, 0.0, 0.0]).is_none());
    }

    #[test]
    fn cut_pieces_fill_exterior_volume() {
        // exterior of the unit ball inside the truncation sphere of radius 2
        let ball = Body::ball(3, 1.0).unwrap();
        for grading in [None, Some(Grading::new(0.9, 2.0).unwrap())] {
            let lat = Lattice::new([0.0; 3], 2.0, 24, true, grading).unwrap();
            let mesh = build_mesh(&ball, lat).unwrap();
            let vol = mesh.metric.iter().map(|m| m[6]).sum::<f64>()
                + mesh.generic.iter().map(|t| t.vol).sum::<f64>();
            let exact = 4.0 / 3.0 * std::f64::consts::PI * (8.0 - 1.0) / 8.0;
            assert!((vol - exact).abs() < 3e-3 * exact, "{vol} vs {exact}");
        }
    }

    #[test]
    fn grading_round_trip() {
        let g = Grading::new(0.9, 5.0).unwrap();
        assert!((g.forward(5.0) - 5.0).abs() < 1e-12);
        for s in [0.1, 1.0, g.knee, 3.0, 4.9] {
            assert!((g.inverse(g.forward(s)) - s).abs() < 1e-12);
        }
        let lat = Lattice::new([0.5, 0.0, -1.0], 5.0, 16, false, Some(g)).unwrap();
        let x = [1.2, -0.7, 0.3];
        let y = lat.map(&lat.unmap(&x));
        assert!((0..3).all(|a| (x[a] - y[a]).abs() < 1e-12));
    }

    #[test]
    fn path_metric_matches_uniform_cube() {
        let h = 0.3;
        let m = path_metric([[0.0; 3], [h, 0.0, 0.0], [h, h, 0.0], [h, h, h]]);
        let ih2 = 1.0 / (h * h);
        let want = [ih2, 0.0, 0.0, ih2, 0.0, ih2, h * h * h / 6.0];
        assert!((0..7).all(|i| (m[i] - want[i]).abs() < 1e-9 * ih2));
    }
}
