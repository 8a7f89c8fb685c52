//! `capgeo`: command-line front end.
//!
//! Exit status: 0 success, 1 an asserted inequality failed, 2 invalid input,
//! 3 numerical failure.

mod config;
mod output;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::Context;
use capgeo_core::capacity::{
    equilibrium_diagnostics, export_field, solve_p_capacity, solve_p_capacity_with_field,
    DiagnosticsConfig, EquilibriumDiagnostics, FieldSidecar, PCapacityEstimate, SolverConfig,
};
use capgeo_core::flow::{
    area_growth_check, evolve, flow_capacity_bound, up_growth_check, FlowBound, FlowConfig,
    FlowTrace, GrowthSlack,
};
use capgeo_core::geometry::{parse_body, Body};
use capgeo_core::harness::{
    corpus, evaluate_body, polya_szego_constants, BodyEvaluation, HarnessConfig,
};
use capgeo_core::numfmt::sig12;
use capgeo_core::CapError;
use clap::Parser;
use serde::Serialize;

use config::{Cli, Format, Mode, RunConfig};
use output::{json_document, report_row, write_csv, Metadata, REPORT_COLUMNS};

/// A failure with its exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn input(e: impl Into<anyhow::Error>) -> Self {
        Failure { code: 2, error: e.into() }
    }
}

impl From<CapError> for Failure {
    fn from(e: CapError) -> Self {
        let code = match e {
            CapError::Parse(_)
            | CapError::InvalidParameter(_)
            | CapError::Unsupported(_)
            | CapError::BoxTooSmall { .. }
            | CapError::Resolution(_) => 2,
            _ => 3,
        };
        Failure { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure { code: 3, error: e }
    }
}

type Outcome = std::result::Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let cfg = match RunConfig::resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

/// Caps the worker pool at `CAPGEO_THREADS` when set.
fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("CAPGEO_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("CAPGEO_THREADS={v} is not a count"))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
    }
    Ok(())
}

/// Runs a resolved configuration; `Ok(false)` when an asserted check failed.
fn run(cfg: &RunConfig) -> Outcome {
    let meta = Metadata::new(cfg);
    match cfg.subcommand {
        Mode::Constants => constants(cfg, &meta),
        Mode::Capacity => capacity(cfg, &meta),
        Mode::Flow => flow(cfg, &meta),
        Mode::Verify | Mode::Sweep => harness(cfg, &meta),
    }
}

fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>, Failure> {
    Ok(match &cfg.out {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p)
                .with_context(|| format!("creating {}", p.display()))
                .map_err(Failure::input)?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit_json<T: Serialize>(cfg: &RunConfig, meta: &Metadata, result: &T) -> Result<(), Failure> {
    let text = json_document(meta, result)?;
    let mut w = sink(cfg)?;
    w.write_all(text.as_bytes()).context("writing output")?;
    w.flush().context("writing output")?;
    Ok(())
}

fn emit_csv(cfg: &RunConfig, meta: &Metadata, columns: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
    let mut w = sink(cfg)?;
    write_csv(&mut w, &meta.csv_header(), columns, rows)?;
    w.flush().context("writing output")?;
    Ok(())
}

fn body(desc: &str) -> Result<Body, Failure> {
    Ok(parse_body(desc)?)
}

fn solver_config(cfg: &RunConfig) -> SolverConfig {
    SolverConfig {
        grid: cfg.grid,
        box_radius: cfg.box_radius,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        extrapolate: cfg.extrapolate,
        ..SolverConfig::default()
    }
}

fn constants(cfg: &RunConfig, meta: &Metadata) -> Outcome {
    let k = polya_szego_constants();
    match cfg.format {
        Format::Json => emit_json(cfg, meta, &k)?,
        Format::Csv => {
            let rows = vec![
                vec!["conjectured".into(), sig12(k.conjectured)],
                vec!["new".into(), sig12(k.new)],
                vec!["old".into(), sig12(k.old)],
                vec!["conjectured_minus_new".into(), sig12(k.conjectured_minus_new)],
                vec!["new_minus_old".into(), sig12(k.new_minus_old)],
                vec!["ordered".into(), k.ordered.to_string()],
            ];
            emit_csv(cfg, meta, &["name", "value"], &rows)?
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct CapacityResult {
    body: String,
    estimate: PCapacityEstimate,
    diagnostics: Option<EquilibriumDiagnostics>,
    field: Option<FieldSidecar>,
}

const CAPACITY_COLUMNS: [&str; 16] = [
    "body",
    "p",
    "raw",
    "corrected",
    "coarse",
    "coarsest",
    "observed_order",
    "extrapolated",
    "lower",
    "upper",
    "best",
    "normalized",
    "spacing",
    "grid",
    "box_radius",
    "newton_iterations",
];

fn capacity(cfg: &RunConfig, meta: &Metadata) -> Outcome {
    let b = body(&cfg.bodies[0])?;
    let p = cfg.p[0];
    let mut solver = solver_config(cfg);
    let dc = DiagnosticsConfig::default();
    if cfg.diagnostics && solver.box_radius.is_none() {
        solver.box_radius = Some(dc.box_radius(&b, p));
    }
    let (estimate, diagnostics, field) = if cfg.diagnostics || cfg.export_field.is_some() {
        let (est, f) = solve_p_capacity_with_field(&b, p, &solver)?;
        let diag = if cfg.diagnostics {
            let dc = DiagnosticsConfig {
                solver: SolverConfig {
                    extrapolate: false,
                    box_radius: None,
                    ..solver.clone()
                },
                ..dc
            };
            Some(equilibrium_diagnostics(&f, &b, &dc)?)
        } else {
            None
        };
        let side = match &cfg.export_field {
            Some(stem) => Some(export_field(&f, stem)?),
            None => None,
        };
        (est, diag, side)
    } else {
        (solve_p_capacity(&b, p, &solver)?, None, None)
    };
    match cfg.format {
        Format::Json => emit_json(
            cfg,
            meta,
            &CapacityResult {
                body: b.descriptor(),
                estimate,
                diagnostics,
                field,
            },
        )?,
        Format::Csv => {
            let e = &estimate;
            let o = |v: Option<f64>| v.map(sig12).unwrap_or_default();
            let row = vec![
                b.descriptor(),
                sig12(e.p),
                sig12(e.raw),
                sig12(e.corrected),
                o(e.coarse),
                o(e.coarsest),
                o(e.observed_order),
                o(e.extrapolated),
                sig12(e.lower),
                sig12(e.upper),
                sig12(e.best()),
                sig12(e.normalized),
                sig12(e.spacing),
                e.grid.to_string(),
                sig12(e.box_radius),
                e.iterations.len().to_string(),
            ];
            emit_csv(cfg, meta, &CAPACITY_COLUMNS, &[row])?
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct FlowResult {
    trace: FlowTrace,
    /// Largest relative deviation of the area from `e^t area(0)`.
    area_growth_deviation: f64,
    growth: Vec<GrowthSlack>,
    /// Present when the trace is long enough for the tail estimate.
    bounds: Vec<FlowBound>,
}

fn flow(cfg: &RunConfig, meta: &Metadata) -> Outcome {
    let b = body(&cfg.bodies[0])?;
    let fc = FlowConfig {
        dt: cfg.dt,
        final_time: cfg.final_time,
        exponents: cfg.p.clone(),
        samples: cfg.samples,
        ..FlowConfig::default()
    };
    let trace = evolve(&b, &fc)?;
    match cfg.format {
        Format::Csv => {
            let mut w = sink(cfg)?;
            w.write_all(meta.csv_header().as_bytes()).context("writing output")?;
            trace.write_csv(&mut w)?;
            w.flush().context("writing output")?;
        }
        Format::Json => {
            let growth = if trace.dimension == 3 {
                cfg.p
                    .iter()
                    .filter(|&&p| p >= 2.0)
                    .map(|&p| up_growth_check(&trace, p))
                    .collect::<Result<Vec<_>, _>>()?
            } else {
                Vec::new()
            };
            let bounds = cfg
                .p
                .iter()
                .filter_map(|&p| flow_capacity_bound(&trace, p).ok())
                .collect();
            let result = FlowResult {
                area_growth_deviation: area_growth_check(&trace),
                trace,
                growth,
                bounds,
            };
            emit_json(cfg, meta, &result)?
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct SweepResult<'a> {
    evaluations: &'a [BodyEvaluation],
    violations: usize,
}

fn harness(cfg: &RunConfig, meta: &Metadata) -> Outcome {
    let bodies: Vec<Body> = if cfg.bodies.is_empty() {
        corpus()
    } else {
        cfg.bodies.iter().map(|d| body(d)).collect::<Result<_, _>>()?
    };
    let hc = HarnessConfig {
        solver: solver_config(cfg),
        mesh_resolution: cfg.mesh_resolution,
        riesz_enabled: cfg.riesz,
        q: cfg.q,
        ..HarnessConfig::default()
    };
    let mut evals = Vec::with_capacity(bodies.len());
    for b in &bodies {
        let ev = evaluate_body(b, &cfg.p, &hc)?;
        for r in ev.violations() {
            eprintln!(
                "violated: {} {} p={} slack={} tol={}",
                r.body,
                r.inequality,
                r.p.map(sig12).unwrap_or_default(),
                sig12(r.slack),
                sig12(r.tolerance)
            );
        }
        evals.push(ev);
    }
    let violations: usize = evals.iter().map(|e| e.violations().len()).sum();
    match cfg.format {
        Format::Json => match cfg.subcommand {
            Mode::Verify => emit_json(cfg, meta, &evals[0])?,
            _ => emit_json(
                cfg,
                meta,
                &SweepResult {
                    evaluations: &evals,
                    violations,
                },
            )?,
        },
        Format::Csv => {
            let rows: Vec<Vec<String>> = evals
                .iter()
                .flat_map(|e| e.reports.iter().map(report_row))
                .collect();
            emit_csv(cfg, meta, &REPORT_COLUMNS, &rows)?
        }
    }
    if let Some(dir) = &cfg.plot_dir {
        plot(dir, meta, &evals)?;
    }
    Ok(violations == 0)
}

fn plot(dir: &Path, meta: &Metadata, evals: &[BodyEvaluation]) -> Result<(), Failure> {
    output::emit_plot_data(dir, meta, evals)?;
    Ok(())
}
