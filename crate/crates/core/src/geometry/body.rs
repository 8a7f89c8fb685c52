//! Convex and star-shaped bodies with analytic boundary geometry.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::path::PathBuf;

use super::quadrature::sphere_rule;
use super::radial::RadialFunction;
use crate::error::{CapError, Result};

/// Smallest accepted length parameter.
pub const MIN_LENGTH: f64 = 1e-9;
/// Number of random chord midpoints in the sampled convexity test.
pub const CONVEXITY_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum BodyKind {
    Ball { radius: f64 },
    Ellipsoid { semi_axes: Vec<f64> },
    Superellipsoid { semi_axes: Vec<f64>, exponent: f64 },
    /// Outer half extents `half_widths`; edges and corners rounded with `rounding`.
    RoundedBox { half_widths: Vec<f64>, rounding: f64 },
    RadialGraph { function: RadialFunction, source: Option<PathBuf> },
}

/// A compact body: a shape in its own frame, rotated and then translated to `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    dim: usize,
    center: Vec<f64>,
    /// Row-major orthonormal matrix mapping body-frame to world coordinates.
    rotation: Option<Vec<f64>>,
    kind: BodyKind,
}

/// Boundary data along one ray from the center.
#[derive(Debug, Clone)]
pub struct SurfacePoint {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
    /// Arithmetic mean of the principal curvatures.
    pub mean_curvature: f64,
    /// Distance from the center.
    pub radius: f64,
    /// Cosine between the outward normal and the ray direction.
    pub cos_angle: f64,
}

impl Body {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Self::new(dim, BodyKind::Ball { radius })
    }

    pub fn ellipsoid(semi_axes: &[f64]) -> Result<Self> {
        Self::new(
            semi_axes.len(),
            BodyKind::Ellipsoid {
                semi_axes: semi_axes.to_vec(),
            },
        )
    }

    pub fn superellipsoid(semi_axes: &[f64], exponent: f64) -> Result<Self> {
        Self::new(
            semi_axes.len(),
            BodyKind::Superellipsoid {
                semi_axes: semi_axes.to_vec(),
                exponent,
            },
        )
    }

    pub fn rounded_box(half_widths: &[f64], rounding: f64) -> Result<Self> {
        Self::new(
            half_widths.len(),
            BodyKind::RoundedBox {
                half_widths: half_widths.to_vec(),
                rounding,
            },
        )
    }

    pub fn radial_graph(function: RadialFunction) -> Result<Self> {
        Self::new(
            function.dimension(),
            BodyKind::RadialGraph {
                function,
                source: None,
            },
        )
    }

    pub fn new(dim: usize, kind: BodyKind) -> Result<Self> {
        let body = Body {
            dim,
            center: vec![0.0; dim],
            rotation: None,
            kind,
        };
        body.validate()?;
        Ok(body)
    }

    /// Moves the body so its center sits at `center`.
    pub fn with_center(mut self, center: &[f64]) -> Result<Self> {
        if center.len() != self.dim || center.iter().any(|v| !v.is_finite()) {
            return Err(CapError::InvalidParameter(format!(
                "center must have {} finite components",
                self.dim
            )));
        }
        self.center = center.to_vec();
        Ok(self)
    }

    /// Rotates a three-dimensional body about `axis` by `angle` radians.
    pub fn with_rotation(mut self, axis: [f64; 3], angle: f64) -> Result<Self> {
        if self.dim != 3 {
            return Err(CapError::Unsupported("rotations are only supported in 3-d".into()));
        }
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if norm == 0.0 {
            return Err(CapError::InvalidParameter("zero rotation axis".into()));
        }
        let (x, y, z) = (axis[0] / norm, axis[1] / norm, axis[2] / norm);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let r = vec![
            t * x * x + c,
            t * x * y - s * z,
            t * x * z + s * y,
            t * x * y + s * z,
            t * y * y + c,
            t * y * z - s * x,
            t * x * z - s * y,
            t * y * z + s * x,
            t * z * z + c,
        ];
        self.rotation = match self.rotation.take() {
            None => Some(r),
            Some(old) => {
                let mut m = vec![0.0; 9];
                for i in 0..3 {
                    for j in 0..3 {
                        m[i * 3 + j] = (0..3).map(|k| r[i * 3 + k] * old[k * 3 + j]).sum();
                    }
                }
                Some(m)
            }
        };
        Ok(self)
    }

    pub(crate) fn with_source(mut self, path: PathBuf) -> Self {
        if let BodyKind::RadialGraph { source, .. } = &mut self.kind {
            *source = Some(path);
        }
        self
    }

    /// Uniformly scaled copy (about the world origin).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(CapError::InvalidParameter("scale factor must be positive".into()));
        }
        let kind = match &self.kind {
            BodyKind::Ball { radius } => BodyKind::Ball {
                radius: radius * factor,
            },
            BodyKind::Ellipsoid { semi_axes } => BodyKind::Ellipsoid {
                semi_axes: semi_axes.iter().map(|a| a * factor).collect(),
            },
            BodyKind::Superellipsoid {
                semi_axes,
                exponent,
            } => BodyKind::Superellipsoid {
                semi_axes: semi_axes.iter().map(|a| a * factor).collect(),
                exponent: *exponent,
            },
            BodyKind::RoundedBox {
                half_widths,
                rounding,
            } => BodyKind::RoundedBox {
                half_widths: half_widths.iter().map(|a| a * factor).collect(),
                rounding: rounding * factor,
            },
            BodyKind::RadialGraph { function, .. } => BodyKind::RadialGraph {
                function: match function {
                    RadialFunction::Fourier(fs) => {
                        let mut fs = fs.clone();
                        fs.cos.iter_mut().for_each(|c| *c *= factor);
                        fs.sin.iter_mut().for_each(|c| *c *= factor);
                        RadialFunction::Fourier(fs)
                    }
                    RadialFunction::Harmonics(terms) => RadialFunction::Harmonics(
                        terms
                            .iter()
                            .map(|t| super::radial::HarmonicTerm {
                                c: t.c * factor,
                                ..t.clone()
                            })
                            .collect(),
                    ),
                },
                source: None,
            },
        };
        let mut b = Body {
            dim: self.dim,
            center: self.center.iter().map(|c| c * factor).collect(),
            rotation: self.rotation.clone(),
            kind,
        };
        b.validate()?;
        if let (BodyKind::RadialGraph { .. }, BodyKind::RadialGraph { source, .. }) =
            (&self.kind, &mut b.kind)
        {
            *source = None;
        }
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            BodyKind::Ball { .. } => "ball",
            BodyKind::Ellipsoid { .. } => "ellipsoid",
            BodyKind::Superellipsoid { .. } => "superellipsoid",
            BodyKind::RoundedBox { .. } => "roundedbox",
            BodyKind::RadialGraph { .. } => "radial",
        }
    }

    pub fn is_ball(&self) -> bool {
        matches!(self.kind, BodyKind::Ball { .. })
    }

    /// Kinds that are convex by construction.
    pub fn is_convex_kind(&self) -> bool {
        !matches!(self.kind, BodyKind::RadialGraph { .. })
    }

    /// Mean curvature is strictly positive everywhere. Superellipsoids with
    /// exponent above two have flat points on the axes and rounded boxes have
    /// flat faces, so they only satisfy `H >= 0`.
    pub fn has_positive_curvature(&self) -> bool {
        match &self.kind {
            BodyKind::Ball { .. } | BodyKind::Ellipsoid { .. } => true,
            BodyKind::Superellipsoid { exponent, .. } => *exponent == 2.0,
            _ => false,
        }
    }

    /// Invariant under reflection in each coordinate plane through the center.
    pub fn mirror_symmetric(&self) -> bool {
        self.rotation.is_none() && !matches!(self.kind, BodyKind::RadialGraph { .. })
    }

    fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(CapError::InvalidParameter(format!("dimension {} < 2", self.dim)));
        }
        let check_lengths = |v: &[f64], what: &str| -> Result<()> {
            if v.len() != self.dim {
                return Err(CapError::InvalidParameter(format!(
                    "{what} needs {} entries",
                    self.dim
                )));
            }
            for &a in v {
                if !(a >= MIN_LENGTH) || !a.is_finite() {
                    return Err(CapError::InvalidParameter(format!(
                        "{what} entry {a} below {MIN_LENGTH}"
                    )));
                }
            }
            Ok(())
        };
        match &self.kind {
            BodyKind::Ball { radius } => check_lengths(&vec![*radius; self.dim], "radius")?,
            BodyKind::Ellipsoid { semi_axes } => check_lengths(semi_axes, "semi-axes")?,
            BodyKind::Superellipsoid {
                semi_axes,
                exponent,
            } => {
                check_lengths(semi_axes, "semi-axes")?;
                if !(*exponent >= 2.0) || !exponent.is_finite() {
                    return Err(CapError::InvalidParameter(format!(
                        "superellipsoid exponent {exponent} must be >= 2"
                    )));
                }
            }
            BodyKind::RoundedBox {
                half_widths,
                rounding,
            } => {
                check_lengths(half_widths, "half-widths")?;
                if !(*rounding >= MIN_LENGTH) {
                    return Err(CapError::InvalidParameter("rounding radius must be positive".into()));
                }
                if half_widths.iter().any(|h| *h <= *rounding) {
                    return Err(CapError::InvalidParameter(
                        "half-widths must exceed the rounding radius".into(),
                    ));
                }
            }
            BodyKind::RadialGraph { function, .. } => {
                if function.dimension() != self.dim {
                    return Err(CapError::InvalidParameter("radial function dimension mismatch".into()));
                }
                let min = sphere_rule(self.dim, 24)
                    .iter()
                    .map(|q| function.eval(&q.direction))
                    .fold(f64::INFINITY, f64::min);
                if !(min > MIN_LENGTH) {
                    return Err(CapError::NotStarShaped(min));
                }
            }
        }
        if self.dim >= 4
            && !matches!(self.kind, BodyKind::Ball { .. } | BodyKind::Ellipsoid { .. })
        {
            return Err(CapError::Unsupported(format!(
                "{} bodies in dimension {}",
                self.kind_name(),
                self.dim
            )));
        }
        if self.is_convex_kind() && !self.is_ball() {
            self.sampled_convexity_check()?;
        }
        Ok(())
    }

    /// Midpoints of random boundary chords must lie inside the body.
    pub fn sampled_convexity_check(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x00c0_ffee);
        let tol = 1e-9 * self.circumradius();
        for _ in 0..CONVEXITY_SAMPLES {
            let da = random_direction(&mut rng, self.dim);
            let db = random_direction(&mut rng, self.dim);
            let (ra, rb) = (self.radial_local(&da), self.radial_local(&db));
            let mid: Vec<f64> = da
                .iter()
                .zip(&db)
                .map(|(x, y)| 0.5 * (x * ra + y * rb))
                .collect();
            if self.level_local(&mid) > tol {
                return Err(CapError::NotConvex(self.to_world(&mid)));
            }
        }
        Ok(())
    }

    /// World point to body frame.
    pub fn to_local(&self, x: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        match &self.rotation {
            None => d,
            Some(r) => (0..3)
                .map(|j| (0..3).map(|i| r[i * 3 + j] * d[i]).sum())
                .collect(),
        }
    }

    /// Body-frame point to world.
    pub fn to_world(&self, y: &[f64]) -> Vec<f64> {
        let v = self.rotate(y);
        v.iter().zip(&self.center).map(|(a, c)| a + c).collect()
    }

    fn rotate(&self, y: &[f64]) -> Vec<f64> {
        match &self.rotation {
            None => y.to_vec(),
            Some(r) => (0..3)
                .map(|i| (0..3).map(|j| r[i * 3 + j] * y[j]).sum())
                .collect(),
        }
    }

    /// Continuous function that is negative in the interior, zero on the
    /// boundary and positive outside. Scaled to behave like a distance near
    /// the boundary.
    pub fn level(&self, x: &[f64]) -> f64 {
        self.level_local(&self.to_local(x))
    }

    pub fn level_local(&self, y: &[f64]) -> f64 {
        match &self.kind {
            BodyKind::Ball { radius } => norm(y) - radius,
            BodyKind::Ellipsoid { semi_axes } => {
                let s: f64 = y.iter().zip(semi_axes).map(|(v, a)| (v / a).powi(2)).sum();
                (s.sqrt() - 1.0) * min_of(semi_axes)
            }
            BodyKind::Superellipsoid {
                semi_axes,
                exponent,
            } => {
                let s: f64 = y
                    .iter()
                    .zip(semi_axes)
                    .map(|(v, a)| (v / a).abs().powf(*exponent))
                    .sum();
                (s.powf(1.0 / exponent) - 1.0) * min_of(semi_axes)
            }
            BodyKind::RoundedBox {
                half_widths,
                rounding,
            } => rounded_box_sdf(y, half_widths, *rounding),
            BodyKind::RadialGraph { function, .. } => {
                let r = norm(y);
                if r == 0.0 {
                    let mut e = vec![0.0; self.dim];
                    e[0] = 1.0;
                    return -function.eval(&e);
                }
                let dir: Vec<f64> = y.iter().map(|v| v / r).collect();
                r - function.eval(&dir)
            }
        }
    }

    /// Distance from the center to the boundary along a body-frame unit direction.
    pub fn radial_local(&self, dir: &[f64]) -> f64 {
        match &self.kind {
            BodyKind::Ball { radius } => *radius,
            BodyKind::Ellipsoid { semi_axes } => {
                let s: f64 = dir.iter().zip(semi_axes).map(|(v, a)| (v / a).powi(2)).sum();
                1.0 / s.sqrt()
            }
            BodyKind::Superellipsoid {
                semi_axes,
                exponent,
            } => {
                let s: f64 = dir
                    .iter()
                    .zip(semi_axes)
                    .map(|(v, a)| (v / a).abs().powf(*exponent))
                    .sum();
                s.powf(-1.0 / exponent)
            }
            BodyKind::RoundedBox {
                half_widths,
                rounding,
            } => {
                let mut lo = 0.0;
                let mut hi = norm(half_widths) + rounding;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let p: Vec<f64> = dir.iter().map(|d| d * mid).collect();
                    if rounded_box_sdf(&p, half_widths, *rounding) > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if hi - lo < 1e-15 * hi {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
            BodyKind::RadialGraph { function, .. } => function.eval(dir),
        }
    }

    /// Boundary point, outward normal and mean curvature along a body-frame direction.
    pub fn surface_point(&self, dir: &[f64]) -> SurfacePoint {
        let radius = self.radial_local(dir);
        let y: Vec<f64> = dir.iter().map(|d| d * radius).collect();
        let (normal_local, h) = self.normal_and_curvature_local(&y);
        let cos_angle = dot(&normal_local, dir);
        SurfacePoint {
            point: self.to_world(&y),
            normal: self.rotate(&normal_local),
            mean_curvature: h,
            radius,
            cos_angle,
        }
    }

    /// Outward unit normal and mean curvature at a body-frame boundary point.
    pub fn normal_and_curvature_local(&self, y: &[f64]) -> (Vec<f64>, f64) {
        let n = self.dim as f64;
        match &self.kind {
            BodyKind::Ball { radius } => {
                let r = norm(y);
                (y.iter().map(|v| v / r).collect(), 1.0 / radius)
            }
            BodyKind::Ellipsoid { semi_axes } => power_surface_geometry(y, semi_axes, 2.0),
            BodyKind::Superellipsoid {
                semi_axes,
                exponent,
            } => power_surface_geometry(y, semi_axes, *exponent),
            BodyKind::RoundedBox {
                half_widths,
                rounding,
            } => {
                let tol = 1e-9 * rounding;
                let mut normal = vec![0.0; self.dim];
                let mut active = 0usize;
                for i in 0..self.dim {
                    let q = y[i].abs() - (half_widths[i] - rounding);
                    if q > tol {
                        normal[i] = q * y[i].signum();
                        active += 1;
                    }
                }
                let len = norm(&normal);
                if len == 0.0 {
                    // should not occur on the boundary; fall back to the dominant axis
                    let (i, _) = y
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (i, v.abs() / half_widths[i]))
                        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                    normal[i] = y[i].signum();
                    return (normal, 0.0);
                }
                normal.iter_mut().for_each(|v| *v /= len);
                // `active - 1` principal curvatures equal 1/rounding, the rest vanish
                let h = (active.saturating_sub(1)) as f64 / (rounding * (n - 1.0));
                (normal, h)
            }
            BodyKind::RadialGraph { function, .. } => {
                radial_geometry_fd(y, function, self.dim)
            }
        }
    }

    /// Radius of the largest ball about the center contained in the body.
    pub fn inradius(&self) -> f64 {
        match &self.kind {
            BodyKind::Ball { radius } => *radius,
            BodyKind::Ellipsoid { semi_axes } | BodyKind::Superellipsoid { semi_axes, .. } => {
                min_of(semi_axes)
            }
            BodyKind::RoundedBox { half_widths, .. } => min_of(half_widths),
            BodyKind::RadialGraph { .. } => self.sampled_radius_range().0,
        }
    }

    /// Radius of the smallest ball about the center containing the body.
    pub fn circumradius(&self) -> f64 {
        match &self.kind {
            BodyKind::Ball { radius } => *radius,
            BodyKind::Ellipsoid { semi_axes } => max_of(semi_axes),
            BodyKind::Superellipsoid { semi_axes, exponent } => {
                // Lagrange point y_i = kappa * a_i^{e/(e-2)} of |y|^2 on the surface.
                if *exponent == 2.0 {
                    max_of(semi_axes)
                } else {
                    let k = exponent / (exponent - 2.0);
                    let s: f64 = semi_axes.iter().map(|a| a.powf(2.0 * k)).sum::<f64>();
                    let r = s.powf(-1.0 / exponent) * s.sqrt();
                    r.max(max_of(semi_axes))
                }
            }
            BodyKind::RoundedBox {
                half_widths,
                rounding,
            } => {
                let core: Vec<f64> = half_widths.iter().map(|h| h - rounding).collect();
                norm(&core) + rounding
            }
            BodyKind::RadialGraph { .. } => self.sampled_radius_range().1 * (1.0 + 1e-3),
        }
    }

    fn sampled_radius_range(&self) -> (f64, f64) {
        sphere_rule(self.dim, 32)
            .iter()
            .map(|q| self.radial_local(&q.direction))
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }

    /// Compact descriptor that re-parses into the same body.
    pub fn descriptor(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(",");
        match &self.kind {
            BodyKind::Ball { radius } => {
                write!(f, "ball:r={}", fmt_num(*radius))?;
                if self.dim != 3 {
                    write!(f, ";n={}", self.dim)?;
                }
            }
            BodyKind::Ellipsoid { semi_axes } => write!(f, "ellipsoid:{}", list(semi_axes))?,
            BodyKind::Superellipsoid {
                semi_axes,
                exponent,
            } => write!(f, "superellipsoid:{};e={}", list(semi_axes), fmt_num(*exponent))?,
            BodyKind::RoundedBox {
                half_widths,
                rounding,
            } => write!(f, "roundedbox:{};r={}", list(half_widths), fmt_num(*rounding))?,
            BodyKind::RadialGraph { source, .. } => match source {
                Some(p) => write!(f, "radial:{}", p.display())?,
                None => write!(f, "radial:<inline>")?,
            },
        }
        if self.center.iter().any(|c| *c != 0.0) && !matches!(self.kind, BodyKind::RadialGraph { .. }) {
            write!(f, ";c={}", list(&self.center))?;
        }
        if let Some(r) = &self.rotation {
            // recover axis-angle
            let angle = ((r[0] + r[4] + r[8] - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
            let axis = [r[7] - r[5], r[2] - r[6], r[3] - r[1]];
            write!(
                f,
                ";rot={},{},{},{}",
                fmt_num(axis[0]),
                fmt_num(axis[1]),
                fmt_num(axis[2]),
                fmt_num(angle.to_degrees())
            )?;
        }
        Ok(())
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

/// Parses the compact descriptor grammar:
/// `ball:r=1[;n=3]`, `ellipsoid:1,1,2`, `superellipsoid:1,1,1;e=4`,
/// `roundedbox:1,1,1;r=0.2`, `radial:<path>`. Any kind but `radial` also
/// accepts `;c=x,y,z` (center) and `;rot=ax,ay,az,degrees` (3-d only).
pub fn parse_body(descriptor: &str) -> Result<Body> {
    let (kind, rest) = descriptor
        .split_once(':')
        .ok_or_else(|| CapError::Parse(format!("missing ':' in `{descriptor}`")))?;
    let kind = kind.trim().to_ascii_lowercase();
    if kind == "radial" {
        let path = PathBuf::from(rest.trim());
        let (function, center) = RadialFunction::from_file(&path)?;
        let mut body = Body::radial_graph(function)?.with_source(path);
        if let Some(c) = center {
            body = body.with_center(&c)?;
        }
        return Ok(body);
    }
    let mut parts = rest.split(';');
    let head = parts.next().unwrap_or("").trim();
    let mut opts = Vec::new();
    for p in parts {
        let p = p.trim();
        if p.is_empty() {
            continue;
        }
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CapError::Parse(format!("option `{p}` is not key=value")))?;
        opts.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
    }
    let take = |key: &str, opts: &mut Vec<(String, String)>| -> Option<String> {
        opts.iter()
            .position(|(k, _)| k == key)
            .map(|i| opts.remove(i).1)
    };
    let mut body = match kind.as_str() {
        "ball" => {
            let (k, v) = head
                .split_once('=')
                .ok_or_else(|| CapError::Parse("ball expects `r=<radius>`".into()))?;
            if k.trim() != "r" {
                return Err(CapError::Parse("ball expects `r=<radius>`".into()));
            }
            let r = parse_f64(v)?;
            let n = match take("n", &mut opts) {
                Some(s) => s
                    .parse::<usize>()
                    .map_err(|_| CapError::Parse(format!("bad dimension `{s}`")))?,
                None => 3,
            };
            Body::ball(n, r)?
        }
        "ellipsoid" => Body::ellipsoid(&parse_list(head)?)?,
        "superellipsoid" => {
            let e = take("e", &mut opts)
                .ok_or_else(|| CapError::Parse("superellipsoid needs `;e=<exponent>`".into()))?;
            Body::superellipsoid(&parse_list(head)?, parse_f64(&e)?)?
        }
        "roundedbox" => {
            let r = take("r", &mut opts)
                .ok_or_else(|| CapError::Parse("roundedbox needs `;r=<rounding>`".into()))?;
            Body::rounded_box(&parse_list(head)?, parse_f64(&r)?)?
        }
        other => return Err(CapError::Parse(format!("unknown body kind `{other}`"))),
    };
    if let Some(c) = take("c", &mut opts) {
        body = body.with_center(&parse_list(&c)?)?;
    }
    if let Some(r) = take("rot", &mut opts) {
        let v = parse_list(&r)?;
        if v.len() != 4 {
            return Err(CapError::Parse("rot expects ax,ay,az,degrees".into()));
        }
        body = body.with_rotation([v[0], v[1], v[2]], v[3].to_radians())?;
    }
    if let Some((k, _)) = opts.first() {
        return Err(CapError::Parse(format!("unknown option `{k}`")));
    }
    Ok(body)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CapError::Parse(format!("bad number `{s}`")))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_f64).collect()
}

/// Normal and mean curvature of `sum |y_i / a_i|^e = 1` from the implicit
/// gradient and (diagonal) Hessian.
fn power_surface_geometry(y: &[f64], a: &[f64], e: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    for i in 0..n {
        let t = (y[i] / a[i]).abs();
        g[i] = e * t.powf(e - 1.0) * y[i].signum() / a[i];
        h[i] = e * (e - 1.0) * t.powf(e - 2.0) / (a[i] * a[i]);
    }
    let g2: f64 = g.iter().map(|v| v * v).sum();
    let gn = g2.sqrt();
    let trace: f64 = h.iter().sum();
    let ghg: f64 = g.iter().zip(&h).map(|(gi, hi)| gi * gi * hi).sum();
    let h_sum = (g2 * trace - ghg) / (gn * g2);
    (g.iter().map(|v| v / gn).collect(), h_sum / (n as f64 - 1.0))
}

fn rounded_box_sdf(y: &[f64], half_widths: &[f64], rounding: f64) -> f64 {
    let mut outside = 0.0;
    let mut inside = f64::NEG_INFINITY;
    for (v, h) in y.iter().zip(half_widths) {
        let q = v.abs() - (h - rounding);
        outside += q.max(0.0).powi(2);
        inside = inside.max(q);
    }
    outside.sqrt() + inside.min(0.0) - rounding
}

/// Normal from a central-difference gradient of `|y| - rho(y/|y|)` and mean
/// curvature from central differences of that normal field.
fn radial_geometry_fd(y: &[f64], f: &RadialFunction, n: usize) -> (Vec<f64>, f64) {
    let scale = f.mean_radius().max(norm(y));
    let level = |p: &[f64]| {
        let r = norm(p);
        let d: Vec<f64> = p.iter().map(|v| v / r).collect();
        r - f.eval(&d)
    };
    let d1 = 1e-6 * scale;
    let unit_normal = |p: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; n];
        let mut q = p.to_vec();
        for i in 0..n {
            q[i] = p[i] + d1;
            let fp = level(&q);
            q[i] = p[i] - d1;
            let fm = level(&q);
            q[i] = p[i];
            g[i] = (fp - fm) / (2.0 * d1);
        }
        let gn = norm(&g);
        g.iter().map(|v| v / gn).collect()
    };
    let normal = unit_normal(y);
    let d2 = 1e-4 * scale;
    let mut div = 0.0;
    let mut q = y.to_vec();
    for i in 0..n {
        q[i] = y[i] + d2;
        let np = unit_normal(&q)[i];
        q[i] = y[i] - d2;
        let nm = unit_normal(&q)[i];
        q[i] = y[i];
        div += (np - nm) / (2.0 * d2);
    }
    (normal, div / (n as f64 - 1.0))
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = norm(&v);
        if r > 1e-3 && r <= 1.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}
