use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use capgeo_core::capacity::{capacity_constant, normalized_capacity};
use capgeo_core::harness::{sandwich_lower_constant, BodyEvaluation, InequalityReport};
use capgeo_core::numfmt::{round12, sig12};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the resolved configuration as JSON.
    pub config_hash: String,
    /// UTC time of the run, RFC 3339.
    pub date: String,
    pub config: RunConfig,
}

impl Metadata {
    pub fn new(config: &RunConfig) -> Self {
        Metadata {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash(config),
            date: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            config: config.clone(),
        }
    }

    /// Comment lines heading every CSV; the date line is last.
    pub fn csv_header(&self) -> String {
        format!(
            "# tool: {}\n# version: {}\n# config_hash: {}\n# date: {}\n",
            self.tool, self.version, self.config_hash, self.date
        )
    }
}

pub fn config_hash(config: &RunConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&json))
}

/// Rounds every float in a JSON tree to 12 significant digits.
pub fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (None, None, Some(f)) => serde_json::Number::from_f64(round12(f))
                .map(Value::Number)
                .unwrap_or(Value::Null),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// `{"metadata": ..., "result": ...}` with floats rounded.
pub fn json_document<T: Serialize>(meta: &Metadata, result: &T) -> Result<String> {
    let doc = serde_json::json!({
        "metadata": serde_json::to_value(meta)?,
        "result": serde_json::to_value(result)?,
    });
    Ok(serde_json::to_string_pretty(&round_value(doc))? + "\n")
}

pub const REPORT_COLUMNS: [&str; 21] = [
    "body",
    "n",
    "p",
    "q",
    "inequality",
    "branch",
    "left",
    "right",
    "slack",
    "tolerance",
    "scale",
    "relation",
    "pass",
    "asserted",
    "capacity_source",
    "capacity_end",
    "capacity_lower",
    "capacity_best",
    "capacity_upper",
    "grid",
    "mesh_resolution",
];

fn opt(v: Option<f64>) -> String {
    v.map(sig12).unwrap_or_default()
}

fn enum_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(Value::String(s)) => s,
        _ => String::new(),
    }
}

pub fn report_row(r: &InequalityReport) -> Vec<String> {
    let cap = r.provenance.capacity.as_ref();
    vec![
        r.body.clone(),
        r.n.to_string(),
        opt(r.p),
        opt(r.q),
        r.inequality.as_str().into(),
        r.branch.clone().unwrap_or_default(),
        sig12(r.left),
        sig12(r.right),
        sig12(r.slack),
        sig12(r.tolerance),
        sig12(r.scale),
        enum_name(&r.relation),
        r.pass.to_string(),
        r.asserted.to_string(),
        cap.map(|c| enum_name(&c.source)).unwrap_or_default(),
        r.provenance
            .capacity_end
            .as_ref()
            .map(enum_name)
            .unwrap_or_default(),
        opt(cap.map(|c| c.lower)),
        opt(cap.map(|c| c.best)),
        opt(cap.map(|c| c.upper)),
        cap.and_then(|c| c.grid).map(|g| g.to_string()).unwrap_or_default(),
        r.provenance
            .mesh_resolution
            .map(|m| m.to_string())
            .unwrap_or_default(),
    ]
}

pub fn write_csv<W: Write>(w: W, header: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = w;
    w.write_all(header.as_bytes())?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(columns)?;
    for r in rows {
        csv.write_record(r)?;
    }
    csv.flush()?;
    Ok(())
}

pub const PLOT_COLUMNS: [&str; 10] = [
    "p",
    "normalized_capacity",
    "normalized_capacity_lower",
    "normalized_capacity_upper",
    "area_term",
    "ratio",
    "lower_constant",
    "upper_bound",
    "cap_over_area",
    "willmore_n",
];

/// Rows of the per-body plot file: normalized capacity, the ratio to the
/// area term and its two bounds, and `cap_p / (((p-1)/(n-p))^{1-p} area)`.
pub fn plot_rows(ev: &BodyEvaluation) -> Result<Vec<Vec<String>>> {
    let n = ev.n;
    let nf = n as f64;
    let ing = &ev.ingredients;
    let wn = ing.willmore(nf)?;
    let mut rows = Vec::new();
    for c in &ev.capacities {
        let p = c.p;
        let norm = normalized_capacity(n, p, c.best)?;
        let area_term = ing.normalized_area().powf((nf - p) / (nf - 1.0));
        rows.push(vec![
            sig12(p),
            sig12(norm),
            sig12(normalized_capacity(n, p, c.lower)?),
            sig12(normalized_capacity(n, p, c.upper)?),
            sig12(area_term),
            sig12(norm / area_term),
            sig12(sandwich_lower_constant(n, p)),
            sig12(wn.powf((p - 1.0) / (nf - 1.0))),
            sig12(c.best / (capacity_constant(n, p)? * ing.functionals.area)),
            sig12(wn),
        ]);
    }
    Ok(rows)
}

/// File-name-safe form of a body descriptor.
pub fn slug(descriptor: &str) -> String {
    let s: String = descriptor
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect();
    s.trim_matches('_').to_string()
}

pub fn emit_plot_data(dir: &Path, meta: &Metadata, evals: &[BodyEvaluation]) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    for ev in evals {
        let path = dir.join(format!("{}_plot.csv", slug(&ev.body)));
        let f = std::fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        write_csv(f, &meta.csv_header(), &PLOT_COLUMNS, &plot_rows(ev)?)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_integers() {
        let v = serde_json::json!({"a": 1, "b": 0.1 + 0.2, "c": [1.0/3.0]});
        let r = round_value(v);
        assert_eq!(r["a"], 1);
        assert_eq!(r["b"].as_f64().unwrap(), 0.3);
        assert_eq!(r["c"][0].as_f64().unwrap(), 0.333333333333);
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("ellipsoid:1,1,2"), "ellipsoid_1_1_2");
        assert_eq!(slug("roundedbox:1,1,1;r=0.3"), "roundedbox_1_1_1_r_0.3");
    }
}
