//! Seeded ensembles and the experiment drivers built on them.
//!
//! Run `i` of an ensemble always uses the seed `derive_run_seed(master_seed, i)`
//! and results are collected by run index, so aggregates do not depend on the
//! number of worker threads.

mod audit_sweep;
mod output;
mod stats;
mod sweep;

pub use audit_sweep::{
    audit_instance, drift_audit_sweep, AuditFamily, AuditSweepSpec, AuditSweepSummary,
    InstanceAudit, AUDIT_MAX_N,
};
pub use output::{
    aggregate_csv_header, run_row, write_aggregate_csv, write_audit_jsonl, write_runs_csv,
    AggregateRow, Metadata, RunRow, RUN_CSV_HEADER, TOOL_VERSION,
};
pub use stats::{coupon_reference, scaling_fit, EnsembleStats, FitModel, FitPoint, FitResult};
pub use sweep::{run_sweep, FamilyGrid, OneOrMany, SweepConfig, SweepOutput};

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    derive_run_seed, rng_from_seed, run, run_observed, RunResult, RunSpec, TraceRecord, Variant,
    DEFAULT_DRAW_CAP,
};
use crate::graph::{Graph, GraphError};
use crate::state::{Color, ColoringState, StateError};

/// Environment variable read by the CLI for the worker count.
pub const WORKERS_ENV: &str = "COLORSIM_WORKERS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Complete {
        n: usize,
    },
    #[serde(alias = "cliques")]
    DisjointCliques {
        count: usize,
        size: usize,
    },
    #[serde(alias = "bipartite")]
    CompleteBipartite {
        a: usize,
        b: usize,
    },
    Cycle {
        n: usize,
    },
    #[serde(alias = "er")]
    ErdosRenyi {
        n: usize,
        p: f64,
        seed: u64,
    },
    File {
        path: PathBuf,
    },
}

impl Family {
    pub fn build(&self) -> Result<Graph, HarnessError> {
        Ok(match self {
            Family::Complete { n } => Graph::complete(*n)?,
            Family::DisjointCliques { count, size } => Graph::disjoint_cliques(*count, *size)?,
            Family::CompleteBipartite { a, b } => Graph::complete_bipartite(*a, *b)?,
            Family::Cycle { n } => Graph::cycle(*n)?,
            Family::ErdosRenyi { n, p, seed } => Graph::erdos_renyi(*n, *p, *seed)?,
            Family::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
                    path: path.clone(),
                    source,
                })?;
                Graph::from_edge_list(&text)?
            }
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Family::Complete { .. } => "complete",
            Family::DisjointCliques { .. } => "disjoint_cliques",
            Family::CompleteBipartite { .. } => "complete_bipartite",
            Family::Cycle { .. } => "cycle",
            Family::ErdosRenyi { .. } => "erdos_renyi",
            Family::File { .. } => "file",
        }
    }

    /// Compact description used in CSV `family` columns.
    pub fn label(&self) -> String {
        match self {
            Family::Complete { n } => format!("complete(n={n})"),
            Family::DisjointCliques { count, size } => {
                format!("disjoint_cliques(count={count};size={size})")
            }
            Family::CompleteBipartite { a, b } => format!("complete_bipartite(a={a};b={b})"),
            Family::Cycle { n } => format!("cycle(n={n})"),
            Family::ErdosRenyi { n, p, seed } => format!("erdos_renyi(n={n};p={p};seed={seed})"),
            Family::File { path } => format!("file({})", path.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Random,
    /// Every vertex colored 1.
    #[serde(alias = "all_ones")]
    Ones,
    Explicit(Vec<Color>),
}

impl InitKind {
    pub fn name(&self) -> &'static str {
        match self {
            InitKind::Random => "random",
            InitKind::Ones => "ones",
            InitKind::Explicit(_) => "explicit",
        }
    }
}

fn default_seeds() -> u64 {
    200
}
fn default_cap() -> u64 {
    10_000_000
}
fn default_draw_cap() -> u64 {
    DEFAULT_DRAW_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: Family,
    pub variant: Variant,
    /// Palette size; `None` means `Δ + 1`.
    #[serde(default)]
    pub k: Option<Color>,
    #[serde(default = "InitKind::default_random")]
    pub init: InitKind,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_cap")]
    pub cap: u64,
    #[serde(default = "default_draw_cap")]
    pub draw_cap: u64,
    #[serde(default)]
    pub trace: bool,
    /// Record wall-clock time per run. Off by default so output is reproducible.
    #[serde(default)]
    pub timing: bool,
    /// Worker threads; 0 lets the pool decide. Never affects results.
    #[serde(default, skip_serializing)]
    pub workers: usize,
}

impl InitKind {
    fn default_random() -> InitKind {
        InitKind::Random
    }
}

impl ExperimentConfig {
    pub fn new(family: Family, variant: Variant) -> Self {
        ExperimentConfig {
            family,
            variant,
            k: None,
            init: InitKind::Random,
            seeds: default_seeds(),
            master_seed: 0,
            cap: default_cap(),
            draw_cap: DEFAULT_DRAW_CAP,
            trace: false,
            timing: false,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds == 0 {
            return Err(HarnessError::Config("seeds must be at least 1".into()));
        }
        if self.cap == 0 {
            return Err(HarnessError::Config("cap must be at least 1".into()));
        }
        if self.k == Some(0) {
            return Err(HarnessError::Config("k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn palette(&self, graph: &Graph) -> Color {
        self.k.unwrap_or(graph.max_degree() as Color + 1)
    }

    pub fn run_spec(&self) -> RunSpec {
        RunSpec {
            variant: self.variant,
            cap: self.cap,
            draw_cap: self.draw_cap,
            trace: self.trace,
        }
    }
}

/// Builds the initial coloring for one run from its RNG stream.
pub fn initial_state<'g>(
    graph: &'g Graph,
    k: Color,
    init: &InitKind,
    rng: &mut crate::dynamics::SimRng,
) -> Result<ColoringState<'g>, StateError> {
    match init {
        InitKind::Random => ColoringState::init_random(graph, k, rng),
        InitKind::Ones => ColoringState::init_monochromatic(graph, k),
        InitKind::Explicit(colors) => ColoringState::init_fixed(graph, k, colors),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_index: u64,
    pub result: RunResult,
    pub wall_ns: u64,
    pub trace: Option<Vec<TraceRecord>>,
}

/// Run `run_index` of `config` on `graph`.
pub fn run_single(
    graph: &Graph,
    config: &ExperimentConfig,
    run_index: u64,
) -> Result<RunRecord, HarnessError> {
    let seed = derive_run_seed(config.master_seed, run_index);
    let mut rng = rng_from_seed(seed);
    let k = config.palette(graph);
    let start = config.timing.then(Instant::now);
    let mut state = initial_state(graph, k, &config.init, &mut rng)?;
    let (result, trace) = run(&mut state, &config.run_spec(), &mut rng, seed);
    let wall_ns = start.map_or(0, |t| t.elapsed().as_nanos() as u64);
    Ok(RunRecord {
        run_index,
        result,
        wall_ns,
        trace,
    })
}

fn with_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    Ok(pool.install(job))
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
}

#[derive(Debug, Clone)]
pub struct GraphInfo {
    pub n: usize,
    pub m: usize,
    pub max_degree: usize,
    pub k: Color,
}

#[derive(Debug, Clone)]
pub struct EnsembleOutput {
    pub config: ExperimentConfig,
    pub graph: GraphInfo,
    pub stats: EnsembleStats,
    pub runs: Vec<RunRecord>,
}

pub fn run_ensemble(config: &ExperimentConfig) -> Result<EnsembleOutput, HarnessError> {
    let graph = config.family.build()?;
    run_ensemble_on(&graph, config)
}

pub fn run_ensemble_on(
    graph: &Graph,
    config: &ExperimentConfig,
) -> Result<EnsembleOutput, HarnessError> {
    config.validate()?;
    let runs = with_pool(config.workers, || {
        (0..config.seeds)
            .into_par_iter()
            .map(|i| run_single(graph, config, i))
            .collect::<Result<Vec<_>, _>>()
    })??;
    let steps: Vec<u64> = runs.iter().map(|r| r.result.steps).collect();
    let terminated = runs.iter().filter(|r| r.result.terminated).count();
    Ok(EnsembleOutput {
        config: config.clone(),
        graph: GraphInfo {
            n: graph.n(),
            m: graph.m(),
            max_degree: graph.max_degree(),
            k: config.palette(graph),
        },
        stats: EnsembleStats::from_samples(&steps, terminated),
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSurvival {
    pub rounds: u64,
    pub terminated: bool,
    /// Smallest conflicted count over rounds `t ≥ 1`; `None` if no round ran.
    pub min_conflicted: Option<usize>,
    /// Some round `t ≥ 1` ended with at most `ε·n` conflicted vertices.
    pub dipped: bool,
}

#[derive(Debug, Clone)]
pub struct SurvivalStats {
    pub epsilon: f64,
    pub threshold: f64,
    pub runs: Vec<RunSurvival>,
    pub terminations: usize,
    pub dips: usize,
    pub min_conflicted: Option<usize>,
    /// Median rounds over all runs; capped runs contribute the cap.
    pub median_rounds: f64,
    pub rounds: EnsembleStats,
}

/// Tracks the conflicted count of the parallel variant round by round.
pub fn parallel_survival(
    config: &ExperimentConfig,
    epsilon: f64,
) -> Result<SurvivalStats, HarnessError> {
    if config.variant != Variant::Parallel {
        return Err(HarnessError::Config(
            "parallel_survival needs the parallel variant".into(),
        ));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(HarnessError::Config(format!(
            "epsilon {epsilon} outside [0, 1)"
        )));
    }
    config.validate()?;
    let graph = config.family.build()?;
    let threshold = epsilon * graph.n() as f64;
    let k = config.palette(&graph);
    let spec = RunSpec {
        trace: false,
        ..config.run_spec()
    };
    let runs = with_pool(config.workers, || {
        (0..config.seeds)
            .into_par_iter()
            .map(|i| {
                let seed = derive_run_seed(config.master_seed, i);
                let mut rng = rng_from_seed(seed);
                let mut state = initial_state(&graph, k, &config.init, &mut rng)?;
                let mut min_conflicted: Option<usize> = None;
                let mut dipped = false;
                let result = run_observed(&mut state, &spec, &mut rng, seed, |s, _, _| {
                    let x = s.conflicted().len();
                    min_conflicted = Some(min_conflicted.map_or(x, |m| m.min(x)));
                    if x as f64 <= threshold {
                        dipped = true;
                    }
                });
                Ok(RunSurvival {
                    rounds: result.steps,
                    terminated: result.terminated,
                    min_conflicted,
                    dipped,
                })
            })
            .collect::<Result<Vec<_>, HarnessError>>()
    })??;
    let rounds: Vec<u64> = runs.iter().map(|r| r.rounds).collect();
    let terminations = runs.iter().filter(|r| r.terminated).count();
    let stats = EnsembleStats::from_samples(&rounds, terminations);
    Ok(SurvivalStats {
        epsilon,
        threshold,
        terminations,
        dips: runs.iter().filter(|r| r.dipped).count(),
        min_conflicted: runs.iter().filter_map(|r| r.min_conflicted).min(),
        median_rounds: stats.median,
        rounds: stats,
        runs,
    })
}

#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub variant: Variant,
    pub init: String,
    pub stats: EnsembleStats,
    /// Mean steps relative to the first row.
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct ComparisonTable {
    pub family: Family,
    pub rows: Vec<ComparisonRow>,
}

/// Side-by-side ensembles of configs that differ only in variant and init.
pub fn compare_variants(configs: &[ExperimentConfig]) -> Result<ComparisonTable, HarnessError> {
    let first = configs
        .first()
        .ok_or_else(|| HarnessError::Config("nothing to compare".into()))?;
    for c in &configs[1..] {
        let same = c.family == first.family
            && c.k == first.k
            && c.seeds == first.seeds
            && c.master_seed == first.master_seed
            && c.cap == first.cap;
        if !same {
            return Err(HarnessError::Config(
                "compared configs may differ only in variant and init".into(),
            ));
        }
    }
    let graph = first.family.build()?;
    let mut rows = Vec::with_capacity(configs.len());
    for c in configs {
        let out = run_ensemble_on(&graph, c)?;
        rows.push(ComparisonRow {
            variant: c.variant,
            init: c.init.name().to_string(),
            stats: out.stats,
            ratio: 0.0,
        });
    }
    let base = rows[0].stats.mean;
    for row in &mut rows {
        row.ratio = if base > 0.0 {
            row.stats.mean / base
        } else {
            f64::NAN
        };
    }
    Ok(ComparisonTable {
        family: first.family.clone(),
        rows,
    })
}

/// Uniform versus persistent, both started from the monochromatic coloring.
/// Returns the table and `persistent mean / uniform mean`.
pub fn adversarial_contrast(
    base: &ExperimentConfig,
) -> Result<(ComparisonTable, f64), HarnessError> {
    let mut uniform = base.clone();
    uniform.variant = Variant::Uniform;
    uniform.init = InitKind::Ones;
    let mut persistent = uniform.clone();
    persistent.variant = Variant::Persistent;
    let table = compare_variants(&[uniform, persistent])?;
    let ratio = table.rows[1].ratio;
    Ok((table, ratio))
}
