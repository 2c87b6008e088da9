use std::io::{self, Write};

use serde::Serialize;

use super::{EnsembleStats, FitResult};
use super::{GraphInfo, InitKind, InstanceAudit, RunRecord};
use crate::dynamics::Variant;

pub const TOOL_VERSION: &str = concat!("colorsim ", env!("CARGO_PKG_VERSION"));

/// Leading `#` lines of every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub command: String,
    /// Fully resolved configuration, defaults included.
    pub config: serde_json::Value,
    pub master_seed: u64,
    pub step_unit: String,
}

impl Metadata {
    pub fn new(command: &str, config: &impl Serialize, master_seed: u64, step_unit: &str) -> Self {
        Metadata {
            command: command.to_string(),
            config: serde_json::to_value(config).expect("config serializes"),
            master_seed,
            step_unit: step_unit.to_string(),
        }
    }

    pub fn comment_lines(&self) -> Vec<String> {
        vec![
            format!("# tool: {TOOL_VERSION}"),
            format!("# command: {}", self.command),
            format!("# config: {}", self.config),
            format!("# master_seed: {}", self.master_seed),
            format!("# step_unit: {}", self.step_unit),
        ]
    }

    pub fn write_comments<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        for line in self.comment_lines() {
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::json!({
            "meta": {
                "tool": TOOL_VERSION,
                "command": self.command,
                "config": self.config,
                "master_seed": self.master_seed,
                "step_unit": self.step_unit,
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunRow {
    pub config_id: usize,
    pub family: String,
    pub n: usize,
    pub m: usize,
    pub delta: usize,
    pub k: u32,
    pub variant: String,
    pub init: String,
    pub seed: u64,
    pub steps: u64,
    pub terminated: bool,
    pub initial_phi_num: u64,
    pub final_phi_num: u64,
    pub wall_ns: u64,
}

pub fn run_row(
    config_id: usize,
    family: &str,
    graph: &GraphInfo,
    variant: Variant,
    init: &InitKind,
    record: &RunRecord,
) -> RunRow {
    RunRow {
        config_id,
        family: family.to_string(),
        n: graph.n,
        m: graph.m,
        delta: graph.max_degree,
        k: graph.k,
        variant: variant.name().to_string(),
        init: init.name().to_string(),
        seed: record.result.seed,
        steps: record.result.steps,
        terminated: record.result.terminated,
        initial_phi_num: record.result.initial_phi_num,
        final_phi_num: record.result.final_phi_num,
        wall_ns: record.wall_ns,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub config_id: usize,
    pub family: String,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub delta: Option<usize>,
    pub k: Option<u32>,
    pub variant: String,
    pub init: String,
    pub seeds: u64,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub std_dev: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub termination_fraction: Option<f64>,
    pub min: Option<u64>,
    pub max: Option<u64>,
    pub fit_model: Option<String>,
    pub fit_coefficient: Option<f64>,
    pub fit_r_squared: Option<f64>,
    pub fit_residual: Option<f64>,
    pub status: String,
}

impl AggregateRow {
    pub fn empty(
        config_id: usize,
        family: &str,
        variant: Variant,
        init: &InitKind,
        seeds: u64,
    ) -> Self {
        AggregateRow {
            config_id,
            family: family.to_string(),
            n: None,
            m: None,
            delta: None,
            k: None,
            variant: variant.name().to_string(),
            init: init.name().to_string(),
            seeds,
            mean: None,
            median: None,
            std_dev: None,
            ci_low: None,
            ci_high: None,
            termination_fraction: None,
            min: None,
            max: None,
            fit_model: None,
            fit_coefficient: None,
            fit_r_squared: None,
            fit_residual: None,
            status: "ok".into(),
        }
    }

    pub fn set_stats(&mut self, graph: &GraphInfo, stats: &EnsembleStats) {
        self.n = Some(graph.n);
        self.m = Some(graph.m);
        self.delta = Some(graph.max_degree);
        self.k = Some(graph.k);
        self.mean = Some(stats.mean);
        self.median = Some(stats.median);
        self.std_dev = Some(stats.std_dev);
        self.ci_low = Some(stats.ci_low);
        self.ci_high = Some(stats.ci_high);
        self.termination_fraction = Some(stats.termination_fraction);
        self.min = Some(stats.min);
        self.max = Some(stats.max);
    }

    pub fn set_fit(&mut self, fit: &FitResult, point: usize) {
        self.fit_model = Some(fit.model.name().to_string());
        self.fit_coefficient = Some(fit.coefficient);
        self.fit_r_squared = Some(fit.r_squared);
        self.fit_residual = Some(fit.residuals[point]);
    }
}

pub fn aggregate_csv_header() -> Vec<&'static str> {
    vec![
        "config_id",
        "family",
        "n",
        "m",
        "delta",
        "k",
        "variant",
        "init",
        "seeds",
        "mean",
        "median",
        "std_dev",
        "ci_low",
        "ci_high",
        "termination_fraction",
        "min",
        "max",
        "fit_model",
        "fit_coefficient",
        "fit_r_squared",
        "fit_residual",
        "status",
    ]
}

pub const RUN_CSV_HEADER: [&str; 14] = [
    "config_id",
    "family",
    "n",
    "m",
    "delta",
    "k",
    "variant",
    "init",
    "seed",
    "steps",
    "terminated",
    "initial_phi_num",
    "final_phi_num",
    "wall_ns",
];

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn write_csv<W: Write, T: Serialize>(
    mut w: W,
    meta: &Metadata,
    header: &[&str],
    rows: &[T],
) -> io::Result<()> {
    meta.write_comments(&mut w)?;
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header).map_err(csv_err)?;
    for row in rows {
        out.serialize(row).map_err(csv_err)?;
    }
    out.flush()
}

/// Metadata comments, header, then one row per run. The header is written
/// even when there are no rows.
pub fn write_runs_csv<W: Write>(w: W, meta: &Metadata, rows: &[RunRow]) -> io::Result<()> {
    write_csv(w, meta, &RUN_CSV_HEADER, rows)
}

pub fn write_aggregate_csv<W: Write>(
    w: W,
    meta: &Metadata,
    rows: &[AggregateRow],
) -> io::Result<()> {
    write_csv(w, meta, &aggregate_csv_header(), rows)
}

/// A `{"meta": …}` line followed by one line per report entry. Returns the
/// number of entry lines.
pub fn write_audit_jsonl<W: Write>(
    mut w: W,
    meta: &Metadata,
    instances: &[InstanceAudit],
) -> io::Result<usize> {
    writeln!(w, "{}", meta.json())?;
    let mut lines = 0;
    for inst in instances {
        for line in inst.json_lines() {
            writeln!(w, "{line}")?;
            lines += 1;
        }
    }
    w.flush()?;
    Ok(lines)
}
