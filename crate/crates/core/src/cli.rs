//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or runtime error, 2 cap exhaustion,
//! 3 audit violation.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dynamics::Variant;
use crate::harness::{
    self, compare_variants, drift_audit_sweep, run_row, run_single, run_sweep, write_aggregate_csv,
    write_audit_jsonl, write_runs_csv, AuditFamily, AuditSweepSpec, ExperimentConfig, Family,
    GraphInfo, InitKind, Metadata, SweepConfig,
};
use crate::state::Color;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CAP: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "colorsim",
    version,
    about = "Random recoloring dynamics: simulation, sweeps and exact drift audits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a graph as an edge list.
    Gen(GenArgs),
    /// Run one seeded recoloring process.
    Run(RunArgs),
    /// Run a grid of ensembles from a TOML file.
    Sweep(SweepArgs),
    /// Check the drift inequalities exactly on random states.
    Audit(AuditArgs),
    /// Compare variants and initial colorings on one graph.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    Complete,
    #[value(alias = "disjoint_cliques")]
    Cliques,
    #[value(alias = "complete_bipartite")]
    Bipartite,
    Cycle,
    #[value(alias = "erdos_renyi")]
    Er,
    File,
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyKind>,
    /// Vertex count (complete, cycle, er).
    #[arg(long)]
    pub n: Option<usize>,
    /// First side (bipartite).
    #[arg(long)]
    pub a: Option<usize>,
    /// Second side (bipartite).
    #[arg(long)]
    pub b: Option<usize>,
    /// Number of cliques.
    #[arg(long)]
    pub count: Option<usize>,
    /// Clique size.
    #[arg(long)]
    pub size: Option<usize>,
    /// Edge probability (er).
    #[arg(long)]
    pub p: Option<f64>,
    /// Edge-list file (file).
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

impl FamilyArgs {
    fn given(&self) -> bool {
        self.family.is_some()
    }

    fn family(&self, graph_seed: u64) -> Result<Family> {
        fn need<T: Copy>(v: Option<T>, flag: &str, kind: &str) -> Result<T> {
            v.ok_or_else(|| anyhow!("--family {kind} needs --{flag}"))
        }
        let kind = self.family.ok_or_else(|| anyhow!("--family is required"))?;
        Ok(match kind {
            FamilyKind::Complete => Family::Complete {
                n: need(self.n, "n", "complete")?,
            },
            FamilyKind::Cliques => Family::DisjointCliques {
                count: need(self.count, "count", "cliques")?,
                size: need(self.size, "size", "cliques")?,
            },
            FamilyKind::Bipartite => Family::CompleteBipartite {
                a: need(self.a, "a", "bipartite")?,
                b: need(self.b, "b", "bipartite")?,
            },
            FamilyKind::Cycle => Family::Cycle {
                n: need(self.n, "n", "cycle")?,
            },
            FamilyKind::Er => Family::ErdosRenyi {
                n: need(self.n, "n", "er")?,
                p: need(self.p, "p", "er")?,
                seed: graph_seed,
            },
            FamilyKind::File => Family::File {
                path: self
                    .graph
                    .clone()
                    .ok_or_else(|| anyhow!("--family file needs --graph"))?,
            },
        })
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Seed for random families.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; the edge list goes to stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Random,
    #[value(alias = "all_ones")]
    Ones,
    File,
}

/// Flags shared by `run` and `compare`. Unset flags take the defaults of
/// [`ExperimentConfig`].
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Seed for random graph families; defaults to --seed.
    #[arg(long)]
    pub graph_seed: Option<u64>,
    /// Palette size; defaults to Δ+1.
    #[arg(long)]
    pub k: Option<Color>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Step budget per run, in the variant's step unit.
    #[arg(long)]
    pub cap: Option<u64>,
    /// Per-vertex draw limit of the persistent variant.
    #[arg(long)]
    pub draw_cap: Option<u64>,
    /// Experiment file (TOML). Its values win over flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl ExperimentArgs {
    fn any_flag(&self) -> bool {
        self.family.given()
            || self.graph_seed.is_some()
            || self.k.is_some()
            || self.seed.is_some()
            || self.cap.is_some()
            || self.draw_cap.is_some()
    }

    fn base_config(
        &self,
        variant: Variant,
        init: InitKind,
        extra_flags: bool,
    ) -> Result<ExperimentConfig> {
        let mut config = if let Some(path) = &self.config {
            if self.any_flag() || extra_flags {
                eprintln!(
                    "warning: --config {} given; its values win over command-line flags",
                    path.display()
                );
            }
            let text = read_text(path)?;
            toml::from_str::<ExperimentConfig>(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        } else {
            let seed = self.seed.unwrap_or(0);
            let family = self.family.family(self.graph_seed.unwrap_or(seed))?;
            let mut c = ExperimentConfig::new(family, variant);
            c.init = init;
            c.k = self.k;
            c.master_seed = seed;
            if let Some(cap) = self.cap {
                c.cap = cap;
            }
            if let Some(d) = self.draw_cap {
                c.draw_cap = d;
            }
            c
        };
        config.workers = harness::workers_from_env().unwrap_or(0);
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<Variant>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    /// Colors for `--init file`, whitespace separated, one per vertex.
    #[arg(long)]
    pub init_file: Option<PathBuf>,
    /// Write the step trace as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Also write the result row to a CSV file.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Record wall-clock time in the result row.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for runs.csv and aggregate.csv.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub instances: Option<u64>,
    #[arg(long)]
    pub max_n: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated families: er, complete, cliques, bipartite, cycle.
    #[arg(long, value_delimiter = ',', value_parser = parse_audit_family)]
    pub families: Option<Vec<AuditFamily>>,
    /// Upper bound on the uniform steps applied before auditing a state.
    #[arg(long)]
    pub evolve_steps: Option<u64>,
    /// Audit spec file (TOML). Its values win over flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report file; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    #[arg(long, value_delimiter = ',', value_parser = parse_variant, default_value = "uniform,persistent")]
    pub variants: Vec<Variant>,
    #[arg(long, value_delimiter = ',', value_enum, default_value = "random")]
    pub inits: Vec<InitArg>,
    /// Uniform versus persistent, both from the all-ones coloring.
    #[arg(long)]
    pub adversarial: bool,
    #[arg(long)]
    pub seeds: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

fn parse_audit_family(s: &str) -> Result<AuditFamily, String> {
    s.parse()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot write {}", path.display()))
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

fn cmd_gen(args: GenArgs) -> Result<i32> {
    let family = args.family.family(args.seed)?;
    let graph = family.build()?;
    let mut text = format!(
        "# tool: {}\n# family: {}\n",
        harness::TOOL_VERSION,
        family.label()
    );
    text.push_str(&graph.render_edge_list());
    let summary = format!(
        "n={} m={} delta={}",
        graph.n(),
        graph.m(),
        graph.max_degree()
    );
    match args.out {
        Some(path) => {
            fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
            println!("{summary}");
        }
        None => {
            print!("{text}");
            eprintln!("{summary}");
        }
    }
    Ok(EXIT_OK)
}

fn read_colors(path: &Path) -> Result<Vec<Color>> {
    read_text(path)?
        .split_whitespace()
        .map(|t| {
            t.parse::<Color>()
                .with_context(|| format!("bad color {t:?} in {}", path.display()))
        })
        .collect()
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let init = match args.init {
        None | Some(InitArg::Random) => InitKind::Random,
        Some(InitArg::Ones) => InitKind::Ones,
        Some(InitArg::File) => {
            let path = args
                .init_file
                .as_ref()
                .ok_or_else(|| anyhow!("--init file needs --init-file"))?;
            InitKind::Explicit(read_colors(path)?)
        }
    };
    let extra = args.variant.is_some() || args.init.is_some();
    let mut config = args
        .exp
        .base_config(args.variant.unwrap_or(Variant::Uniform), init, extra)?;
    config.trace |= args.trace.is_some();
    config.timing |= args.timing;

    let graph = config.family.build()?;
    let record = run_single(&graph, &config, 0)?;
    let info = GraphInfo {
        n: graph.n(),
        m: graph.m(),
        max_degree: graph.max_degree(),
        k: config.palette(&graph),
    };
    let row = run_row(
        0,
        &config.family.label(),
        &info,
        config.variant,
        &config.init,
        &record,
    );
    let meta = Metadata::new(
        "run",
        &config,
        config.master_seed,
        config.variant.step_unit(),
    );

    write_runs_csv(io::stdout().lock(), &meta, std::slice::from_ref(&row))?;
    if let Some(path) = &args.out {
        write_runs_csv(create(path)?, &meta, std::slice::from_ref(&row))?;
    }
    if let (Some(path), Some(trace)) = (&args.trace, &record.trace) {
        let mut w = create(path)?;
        writeln!(w, "{}", meta.json())?;
        for rec in trace {
            writeln!(w, "{}", serde_json::to_string(rec)?)?;
        }
        w.flush()?;
    }
    Ok(if record.result.terminated {
        EXIT_OK
    } else {
        EXIT_CAP
    })
}

fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    let mut config = SweepConfig::from_toml(&read_text(&args.config)?)?;
    config.workers = harness::workers_from_env().unwrap_or(0);
    let out = run_sweep(&config)?;
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    write_runs_csv(
        create(&args.out_dir.join("runs.csv"))?,
        &out.metadata,
        &out.runs,
    )?;
    write_aggregate_csv(
        create(&args.out_dir.join("aggregate.csv"))?,
        &out.metadata,
        &out.aggregate,
    )?;
    for row in &out.aggregate {
        if row.status != "ok" {
            eprintln!("cell {} ({}): {}", row.config_id, row.family, row.status);
        }
    }
    for (variant, init, fit) in &out.fits {
        match fit {
            Ok(f) => eprintln!(
                "fit {variant}/{init}: {} coefficient={:.6} r_squared={:.6}",
                f.model, f.coefficient, f.r_squared
            ),
            Err(e) => eprintln!("fit {variant}/{init}: {e}"),
        }
    }
    println!(
        "{} cells, {} runs written to {}",
        out.aggregate.len(),
        out.runs.len(),
        args.out_dir.display()
    );
    Ok(EXIT_OK)
}

fn cmd_audit(args: AuditArgs) -> Result<i32> {
    let mut spec = if let Some(path) = &args.config {
        let flags = args.instances.is_some()
            || args.max_n.is_some()
            || args.seed.is_some()
            || args.families.is_some()
            || args.evolve_steps.is_some();
        if flags {
            eprintln!(
                "warning: --config {} given; its values win over command-line flags",
                path.display()
            );
        }
        toml::from_str::<AuditSweepSpec>(&read_text(path)?)
            .with_context(|| format!("parsing {}", path.display()))?
    } else {
        let mut s = AuditSweepSpec::default();
        if let Some(v) = args.instances {
            s.instances = v;
        }
        if let Some(v) = args.max_n {
            s.max_n = v;
        }
        if let Some(v) = args.seed {
            s.master_seed = v;
        }
        if let Some(v) = &args.families {
            s.families = v.clone();
        }
        if let Some(v) = args.evolve_steps {
            s.evolve_steps = v;
        }
        s
    };
    spec.inject_fault = args.inject_fault;
    spec.workers = harness::workers_from_env().unwrap_or(0);

    let (instances, summary) = drift_audit_sweep(&spec)?;
    let meta = Metadata::new(
        "audit",
        &spec,
        spec.master_seed,
        "exact one-step expectations",
    );
    match &args.out {
        Some(path) => write_audit_jsonl(create(path)?, &meta, &instances)?,
        None => write_audit_jsonl(io::stdout().lock(), &meta, &instances)?,
    };
    let drift = summary
        .max_drift_constant
        .map_or_else(|| "n/a".to_string(), |c| format!("{c:.3}"));
    eprintln!(
        "instances={} checks={} skipped={} violations={} max_drift_constant={drift}",
        summary.instances, summary.checks, summary.skipped, summary.violations
    );
    if summary.violations > 0 {
        for (index, digest) in &summary.violating {
            eprintln!("violation: instance {index} state_digest {digest}");
        }
        return Ok(EXIT_VIOLATION);
    }
    Ok(EXIT_OK)
}

fn cmd_compare(args: CompareArgs) -> Result<i32> {
    let (variants, inits) = if args.adversarial {
        (
            vec![Variant::Uniform, Variant::Persistent],
            vec![InitArg::Ones],
        )
    } else {
        (args.variants.clone(), args.inits.clone())
    };
    if inits.contains(&InitArg::File) {
        bail!("compare supports --inits random,ones");
    }
    let mut base = args
        .exp
        .base_config(variants[0], InitKind::Random, args.seeds.is_some())?;
    if args.exp.config.is_none() {
        if let Some(s) = args.seeds {
            base.seeds = s;
        }
    }
    let mut configs = Vec::new();
    for &variant in &variants {
        for init in &inits {
            let mut c = base.clone();
            c.variant = variant;
            c.init = match init {
                InitArg::Ones => InitKind::Ones,
                _ => InitKind::Random,
            };
            configs.push(c);
        }
    }
    let table = compare_variants(&configs)?;
    let meta = Metadata::new(
        "compare",
        &configs,
        base.master_seed,
        &step_units(&variants),
    );

    let write = |w: &mut dyn Write| -> Result<()> {
        meta.write_comments(w)?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "family",
            "variant",
            "init",
            "runs",
            "mean",
            "median",
            "std_dev",
            "ci_low",
            "ci_high",
            "termination_fraction",
            "ratio",
        ])?;
        for row in &table.rows {
            let s = &row.stats;
            out.write_record([
                table.family.label(),
                row.variant.name().to_string(),
                row.init.clone(),
                s.runs.to_string(),
                s.mean.to_string(),
                s.median.to_string(),
                s.std_dev.to_string(),
                s.ci_low.to_string(),
                s.ci_high.to_string(),
                s.termination_fraction.to_string(),
                row.ratio.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    };
    write(&mut io::stdout().lock())?;
    if let Some(path) = &args.out {
        let mut f = create(path)?;
        write(&mut f)?;
        f.flush()?;
    }
    Ok(EXIT_OK)
}

fn step_units(variants: &[Variant]) -> String {
    variants
        .iter()
        .map(|v| format!("{}={}", v.name(), v.step_unit()))
        .collect::<Vec<_>>()
        .join(";")
}
