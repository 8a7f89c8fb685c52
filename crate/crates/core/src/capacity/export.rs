//! Flat binary export of a potential with a JSON sidecar.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::solver::PotentialField;
use crate::error::Result;

/// Layout description written next to the raw values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub data_file: String,
    /// Little-endian `f64`, x index fastest.
    pub format: String,
    pub dims: [usize; 3],
    /// Lattice coordinates of node `(i, j, k)` are `origin + h (i, j, k)`.
    pub origin: [f64; 3],
    pub spacing: f64,
    pub center: [f64; 3],
    pub box_radius: f64,
    /// Only the octant `x >= center` is stored; reflect for the rest.
    pub octant: bool,
    /// Radial map from lattice to physical coordinates about `center`:
    /// `s -> inner s / knee` for `s <= knee`, else `inner exp(rate (s - knee))`.
    pub grading: Option<GradingSidecar>,
    pub p: f64,
    pub body: String,
    pub equivalent_radius: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradingSidecar {
    pub inner: f64,
    pub knee: f64,
    pub rate: f64,
}

/// Writes `<stem>.bin` and `<stem>.json`; returns the sidecar.
pub fn export_field(field: &PotentialField, stem: &Path) -> Result<FieldSidecar> {
    let bin: PathBuf = stem.with_extension("bin");
    let json: PathBuf = stem.with_extension("json");
    let mut w = BufWriter::new(fs::File::create(&bin)?);
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    let lat = &field.lattice;
    let sidecar = FieldSidecar {
        data_file: bin
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        format: "f64-le".into(),
        dims: lat.dims,
        origin: lat.origin,
        spacing: lat.h,
        center: lat.center,
        box_radius: lat.radius,
        octant: lat.octant,
        grading: lat.grading.map(|g| GradingSidecar {
            inner: g.inner,
            knee: g.knee,
            rate: g.rate,
        }),
        p: field.p,
        body: field.descriptor.clone(),
        equivalent_radius: field.equivalent_radius,
        capacity: field.capacity,
    };
    fs::write(&json, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(sidecar)
}
