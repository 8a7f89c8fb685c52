//! Smooth positive functions on the unit sphere used as radial graphs.
//!
//! In the plane the radius is a truncated Fourier series in the polar angle.
//! In space it is a real spherical-harmonic expansion
//! `rho(theta, phi) = sum c_lm * S_l^|m|(cos theta) * trig_m(phi)` with
//! Schmidt semi-normalized associated Legendre functions `S_l^m`,
//! `trig_m = cos(m phi)` for `m >= 0` and `sin(|m| phi)` for `m < 0`.
//! Here `theta` is the polar angle from the +z axis.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{CapError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicTerm {
    pub l: usize,
    pub m: i64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    /// `cos[0]` is the constant term.
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSample {
    pub direction: Vec<f64>,
    pub radius: f64,
}

/// On-disk description of a radial graph (`radial:<path>` descriptors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFile {
    pub dimension: usize,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default)]
    pub harmonics: Option<Vec<HarmonicTerm>>,
    #[serde(default)]
    pub fourier: Option<FourierSeries>,
    #[serde(default)]
    pub samples: Option<Vec<RadialSample>>,
    /// Expansion degree used when fitting tabulated samples.
    #[serde(default)]
    pub degree: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RadialFunction {
    Fourier(FourierSeries),
    Harmonics(Vec<HarmonicTerm>),
}

impl RadialFunction {
    pub fn dimension(&self) -> usize {
        match self {
            RadialFunction::Fourier(_) => 2,
            RadialFunction::Harmonics(_) => 3,
        }
    }

    /// Radius along a unit direction.
    pub fn eval(&self, dir: &[f64]) -> f64 {
        match self {
            RadialFunction::Fourier(fs) => {
                let phi = dir[1].atan2(dir[0]);
                let mut r = fs.cos.first().copied().unwrap_or(0.0);
                for (k, c) in fs.cos.iter().enumerate().skip(1) {
                    r += c * (k as f64 * phi).cos();
                }
                for (k, s) in fs.sin.iter().enumerate().skip(1) {
                    r += s * (k as f64 * phi).sin();
                }
                r
            }
            RadialFunction::Harmonics(terms) => {
                let z = dir[2].clamp(-1.0, 1.0);
                let phi = dir[1].atan2(dir[0]);
                let lmax = terms.iter().map(|t| t.l).max().unwrap_or(0);
                let table = schmidt_legendre_table(lmax, z);
                terms
                    .iter()
                    .map(|t| t.c * table[t.l][t.m.unsigned_abs() as usize] * trig(t.m, phi))
                    .sum()
            }
        }
    }

    pub fn from_file(path: &Path) -> Result<(Self, Option<Vec<f64>>)> {
        let text = std::fs::read_to_string(path)?;
        let file: RadialFile = serde_json::from_str(&text)?;
        Ok((Self::from_description(&file)?, file.center.clone()))
    }

    pub fn from_description(file: &RadialFile) -> Result<Self> {
        match file.dimension {
            2 => {
                if let Some(fs) = &file.fourier {
                    if fs.cos.is_empty() {
                        return Err(CapError::Parse("fourier series needs a constant term".into()));
                    }
                    return Ok(RadialFunction::Fourier(fs.clone()));
                }
                if let Some(samples) = &file.samples {
                    return fit_fourier(samples, file.degree.unwrap_or(4));
                }
                Err(CapError::Parse("2-d radial file needs `fourier` or `samples`".into()))
            }
            3 => {
                if let Some(h) = &file.harmonics {
                    for t in h {
                        if t.m.unsigned_abs() as usize > t.l {
                            return Err(CapError::Parse(format!("|m| > l in term ({}, {})", t.l, t.m)));
                        }
                    }
                    return Ok(RadialFunction::Harmonics(h.clone()));
                }
                if let Some(samples) = &file.samples {
                    return fit_harmonics(samples, file.degree.unwrap_or(4));
                }
                Err(CapError::Parse("3-d radial file needs `harmonics` or `samples`".into()))
            }
            d => Err(CapError::Unsupported(format!("radial graphs in dimension {d}"))),
        }
    }

    /// Largest magnitude of any coefficient, used to pick finite-difference steps.
    pub fn mean_radius(&self) -> f64 {
        match self {
            RadialFunction::Fourier(fs) => fs.cos[0].abs(),
            RadialFunction::Harmonics(t) => t
                .iter()
                .find(|t| t.l == 0)
                .map(|t| t.c.abs())
                .unwrap_or(1.0),
        }
    }

    pub fn to_description(&self, center: Option<Vec<f64>>) -> RadialFile {
        match self {
            RadialFunction::Fourier(fs) => RadialFile {
                dimension: 2,
                center,
                harmonics: None,
                fourier: Some(fs.clone()),
                samples: None,
                degree: None,
            },
            RadialFunction::Harmonics(h) => RadialFile {
                dimension: 3,
                center,
                harmonics: Some(h.clone()),
                fourier: None,
                samples: None,
                degree: None,
            },
        }
    }
}

fn trig(m: i64, phi: f64) -> f64 {
    if m >= 0 {
        (m as f64 * phi).cos()
    } else {
        ((-m) as f64 * phi).sin()
    }
}

/// `table[l][m]` = Schmidt semi-normalized `P_l^m(z)` for `0 <= m <= l <= lmax`.
pub fn schmidt_legendre_table(lmax: usize, z: f64) -> Vec<Vec<f64>> {
    let s = (1.0 - z * z).max(0.0).sqrt();
    // unnormalized P_l^m without Condon–Shortley phase
    let mut p = vec![vec![0.0; lmax + 1]; lmax + 1];
    p[0][0] = 1.0;
    for m in 1..=lmax {
        p[m][m] = p[m - 1][m - 1] * (2 * m - 1) as f64 * s;
    }
    for m in 0..lmax {
        p[m + 1][m] = (2 * m + 1) as f64 * z * p[m][m];
    }
    for m in 0..=lmax {
        for l in (m + 2)..=lmax {
            p[l][m] = ((2 * l - 1) as f64 * z * p[l - 1][m] - (l + m - 1) as f64 * p[l - 2][m])
                / (l - m) as f64;
        }
    }
    for (l, row) in p.iter_mut().enumerate() {
        for (m, v) in row.iter_mut().enumerate().take(l + 1) {
            if m > 0 {
                // sqrt(2 (l-m)! / (l+m)!)
                let mut ratio = 1.0;
                for k in (l - m + 1)..=(l + m) {
                    ratio /= k as f64;
                }
                *v *= (2.0 * ratio).sqrt();
            }
        }
    }
    p
}

fn fit_fourier(samples: &[RadialSample], degree: usize) -> Result<RadialFunction> {
    let cols = 2 * degree + 1;
    if samples.len() < cols {
        return Err(CapError::Parse(format!(
            "need at least {cols} samples for degree {degree}"
        )));
    }
    let mut a = DMatrix::zeros(samples.len(), cols);
    let mut b = DVector::zeros(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let d = normalized(&s.direction, 2)?;
        let phi = d[1].atan2(d[0]);
        a[(i, 0)] = 1.0;
        for k in 1..=degree {
            a[(i, 2 * k - 1)] = (k as f64 * phi).cos();
            a[(i, 2 * k)] = (k as f64 * phi).sin();
        }
        b[i] = s.radius;
    }
    let x = least_squares(a, b)?;
    let mut cos = vec![x[0]];
    let mut sin = vec![0.0];
    for k in 1..=degree {
        cos.push(x[2 * k - 1]);
        sin.push(x[2 * k]);
    }
    Ok(RadialFunction::Fourier(FourierSeries { cos, sin }))
}

fn fit_harmonics(samples: &[RadialSample], degree: usize) -> Result<RadialFunction> {
    let index: Vec<(usize, i64)> = (0..=degree)
        .flat_map(|l| (-(l as i64)..=l as i64).map(move |m| (l, m)))
        .collect();
    if samples.len() < index.len() {
        return Err(CapError::Parse(format!(
            "need at least {} samples for degree {degree}",
            index.len()
        )));
    }
    let mut a = DMatrix::zeros(samples.len(), index.len());
    let mut b = DVector::zeros(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let d = normalized(&s.direction, 3)?;
        let table = schmidt_legendre_table(degree, d[2]);
        let phi = d[1].atan2(d[0]);
        for (j, &(l, m)) in index.iter().enumerate() {
            a[(i, j)] = table[l][m.unsigned_abs() as usize] * trig(m, phi);
        }
        b[i] = s.radius;
    }
    let x = least_squares(a, b)?;
    Ok(RadialFunction::Harmonics(
        index
            .iter()
            .zip(x.iter())
            .map(|(&(l, m), &c)| HarmonicTerm { l, m, c })
            .collect(),
    ))
}

fn least_squares(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    a.svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| CapError::Parse(format!("least-squares fit failed: {e}")))
}

fn normalized(d: &[f64], n: usize) -> Result<Vec<f64>> {
    if d.len() != n {
        return Err(CapError::Parse(format!("sample direction must have {n} components")));
    }
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(CapError::Parse("zero sample direction".into()));
    }
    Ok(d.iter().map(|v| v / norm).collect())
}
