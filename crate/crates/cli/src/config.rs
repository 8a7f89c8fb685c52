use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "capgeo", version, about = "p-capacity, curvature and flow inequality checks")]
pub struct Cli {
    /// JSON file whose fields override the command-line flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Output file (standard output when absent).
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run every check on one body at the given exponents.
    Verify(RunArgs),
    /// Run the corpus (or the given bodies) over a grid of exponents.
    Sweep(RunArgs),
    /// Integrate inverse mean curvature flow and write the trace.
    Flow(FlowArgs),
    /// Solve for one p-capacity.
    Capacity(RunArgs),
    /// Print the area lower-bound constants.
    Constants,
}

#[derive(Args, Debug, Default)]
pub struct RunArgs {
    /// Body descriptor, e.g. `ball:r=1`, `ellipsoid:1,1,2`; repeatable for `sweep`.
    #[arg(long = "body")]
    pub bodies: Vec<String>,
    /// Exponent(s): `2`, `1.3,2,2.5` or `start:stop:step`.
    #[arg(long)]
    pub p: Option<String>,
    /// Exponent of the mixed Willmore branch.
    #[arg(long)]
    pub q: Option<f64>,
    /// Fine-grid cells across the truncation box.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Truncation radius.
    #[arg(long = "box-radius", visible_alias = "box")]
    pub box_radius: Option<f64>,
    /// Relative energy tolerance of the solver.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Newton iteration cap per grid level.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Skip the half-resolution solve and the extrapolation.
    #[arg(long)]
    pub no_extrapolate: bool,
    /// Polar resolution of the boundary quadrature.
    #[arg(long)]
    pub mesh_resolution: Option<usize>,
    /// Skip the single-layer potential checks.
    #[arg(long)]
    pub no_riesz: bool,
    /// Directory for per-body plot CSVs (`sweep`).
    #[arg(long)]
    pub plot_dir: Option<PathBuf>,
    /// Write the potential to `<stem>.bin` / `<stem>.json` (`capacity`).
    #[arg(long)]
    pub export_field: Option<PathBuf>,
    /// Also run the equilibrium-potential diagnostics (`capacity`).
    #[arg(long)]
    pub diagnostics: bool,
}

#[derive(Args, Debug, Default)]
pub struct FlowArgs {
    #[arg(long)]
    pub body: Option<String>,
    /// Final time.
    #[arg(long = "T", visible_alias = "t")]
    pub final_time: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Exponents of the recorded `U_p` columns.
    #[arg(long, visible_alias = "p-list")]
    pub p: Option<String>,
    /// Angular samples.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Verify,
    Sweep,
    Flow,
    Capacity,
    Constants,
}

/// Fully resolved run configuration; hashed into the output header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: Mode,
    pub bodies: Vec<String>,
    pub p: Vec<f64>,
    pub q: Option<f64>,
    pub grid: usize,
    pub box_radius: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub extrapolate: bool,
    pub mesh_resolution: usize,
    pub riesz: bool,
    pub final_time: f64,
    pub dt: f64,
    pub samples: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub plot_dir: Option<PathBuf>,
    pub export_field: Option<PathBuf>,
    pub diagnostics: bool,
}

/// Fields accepted in a `--config` file; every one is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub bodies: Option<Vec<String>>,
    pub body: Option<String>,
    pub p: Option<PValue>,
    pub q: Option<f64>,
    pub grid: Option<usize>,
    pub box_radius: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub extrapolate: Option<bool>,
    pub mesh_resolution: Option<usize>,
    pub riesz: Option<bool>,
    pub final_time: Option<f64>,
    pub dt: Option<f64>,
    pub samples: Option<usize>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub plot_dir: Option<PathBuf>,
    pub export_field: Option<PathBuf>,
    pub diagnostics: Option<bool>,
}

/// Exponents in a config file: a number, a list, or a string as on the command line.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum PValue {
    One(f64),
    Many(Vec<f64>),
    Text(String),
}

impl PValue {
    fn resolve(&self) -> Result<Vec<f64>> {
        match self {
            PValue::One(p) => Ok(vec![*p]),
            PValue::Many(v) => Ok(v.clone()),
            PValue::Text(s) => parse_exponents(s),
        }
    }
}

pub const SWEEP_EXPONENTS: [f64; 5] = [1.05, 1.3, 2.0, 2.5, 2.95];

/// `2`, `1.3,2,2.5` or `start:stop:step` (inclusive of `stop` up to rounding).
pub fn parse_exponents(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    let num = |t: &str| -> Result<f64> {
        t.trim()
            .parse::<f64>()
            .map_err(|_| anyhow!("invalid exponent `{t}`"))
    };
    let out = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            bail!("range must be start:stop:step, got `{s}`");
        }
        let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(h > 0.0) || b < a {
            bail!("range `{s}` needs start <= stop and step > 0");
        }
        let count = ((b - a) / h + 1e-9).floor() as usize;
        (0..=count)
            .map(|k| {
                // keep decimal inputs tidy: 1.3 + 0.1 k prints as 1.4, not 1.4000000000000001
                let v = a + h * k as f64;
                (v * 1e12).round() / 1e12
            })
            .collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if out.is_empty() {
        bail!("no exponents in `{s}`");
    }
    Ok(out)
}

fn load_file(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(p) => load_file(p)?,
            None => ConfigFile::default(),
        };
        let default_flow = capgeo_core::flow::FlowConfig::default();
        let solver = capgeo_core::capacity::SolverConfig::default();
        let harness = capgeo_core::harness::HarnessConfig::default();
        let empty = RunArgs::default();
        let (mode, run, flow) = match &cli.command {
            Command::Verify(a) => (Mode::Verify, a, None),
            Command::Sweep(a) => (Mode::Sweep, a, None),
            Command::Capacity(a) => (Mode::Capacity, a, None),
            Command::Flow(f) => (Mode::Flow, &empty, Some(f)),
            Command::Constants => (Mode::Constants, &empty, None),
        };
        let mut bodies = run.bodies.clone();
        if let Some(f) = flow {
            bodies.extend(f.body.clone());
        }
        if let Some(b) = &file.bodies {
            bodies = b.clone();
        }
        if let Some(b) = &file.body {
            bodies = vec![b.clone()];
        }
        let p_text = flow.and_then(|f| f.p.clone()).or_else(|| run.p.clone());
        let mut p = match p_text {
            Some(s) => parse_exponents(&s)?,
            None => match mode {
                Mode::Sweep => SWEEP_EXPONENTS.to_vec(),
                // midpoint of (1, n): 2 for surfaces, 1.5 for curves
                Mode::Flow => match bodies.first().map(|b| capgeo_core::geometry::parse_body(b)) {
                    Some(Ok(b)) if b.dim() == 2 => vec![1.5],
                    _ => default_flow.exponents.clone(),
                },
                _ => vec![2.0],
            },
        };
        if let Some(v) = &file.p {
            p = v.resolve()?;
        }
        let cfg = RunConfig {
            subcommand: mode,
            bodies,
            p,
            q: file.q.or(run.q),
            grid: file.grid.or(run.grid).unwrap_or(solver.grid),
            box_radius: file.box_radius.or(run.box_radius),
            tol: file.tol.or(run.tol).unwrap_or(solver.tol),
            max_iter: file.max_iter.or(run.max_iter).unwrap_or(solver.max_iter),
            extrapolate: file.extrapolate.unwrap_or(!run.no_extrapolate),
            mesh_resolution: file
                .mesh_resolution
                .or(run.mesh_resolution)
                .unwrap_or(harness.mesh_resolution),
            riesz: file.riesz.unwrap_or(!run.no_riesz),
            final_time: file
                .final_time
                .or(flow.and_then(|f| f.final_time))
                .unwrap_or(default_flow.final_time),
            dt: file.dt.or(flow.and_then(|f| f.dt)).unwrap_or(default_flow.dt),
            samples: file
                .samples
                .or(flow.and_then(|f| f.samples))
                .unwrap_or(default_flow.samples),
            format: file.format.or(cli.format).unwrap_or(match mode {
                Mode::Flow => Format::Csv,
                _ => Format::Json,
            }),
            out: file.out.or_else(|| cli.out.clone()),
            plot_dir: file.plot_dir.or_else(|| run.plot_dir.clone()),
            export_field: file.export_field.or_else(|| run.export_field.clone()),
            diagnostics: file.diagnostics.unwrap_or(run.diagnostics),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let needs_body = matches!(self.subcommand, Mode::Verify | Mode::Capacity | Mode::Flow);
        if needs_body && self.bodies.len() != 1 {
            bail!("exactly one --body is required (got {})", self.bodies.len());
        }
        if self.subcommand == Mode::Capacity && self.p.len() != 1 {
            bail!("capacity takes a single --p");
        }
        if matches!(self.subcommand, Mode::Verify | Mode::Sweep | Mode::Capacity) {
            let (lo, hi) = (1.0 + capgeo_core::capacity::P_MARGIN, 3.0 - capgeo_core::capacity::P_MARGIN);
            for &p in &self.p {
                if !(p >= lo - 1e-12 && p <= hi + 1e-12) {
                    bail!("p = {p} outside [{lo}, {hi}]");
                }
            }
        }
        Ok(())
    }
}
