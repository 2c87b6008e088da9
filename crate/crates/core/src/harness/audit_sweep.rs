use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{audit_state, AuditEntry, AuditOptions, AuditReport};
use crate::dynamics::{derive_run_seed, rng_from_seed, step_uniform};
use crate::graph::Graph;
use crate::state::{Color, ColoringState};

use super::{with_pool, HarnessError};

/// Largest graph the exact audit accepts.
pub const AUDIT_MAX_N: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditFamily {
    /// `G(n, p)` with `n ∈ [5, max_n]` and `p ∈ {0.1, 0.3, 0.7}`.
    #[serde(alias = "er")]
    ErdosRenyi,
    #[serde(alias = "cliques")]
    DisjointCliques,
    #[serde(alias = "bipartite")]
    CompleteBipartite,
    Cycle,
    Complete,
}

impl AuditFamily {
    pub const ALL: [AuditFamily; 5] = [
        AuditFamily::ErdosRenyi,
        AuditFamily::Complete,
        AuditFamily::DisjointCliques,
        AuditFamily::CompleteBipartite,
        AuditFamily::Cycle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AuditFamily::ErdosRenyi => "erdos_renyi",
            AuditFamily::DisjointCliques => "disjoint_cliques",
            AuditFamily::CompleteBipartite => "complete_bipartite",
            AuditFamily::Cycle => "cycle",
            AuditFamily::Complete => "complete",
        }
    }

    fn sample<R: Rng>(self, max_n: usize, rng: &mut R) -> Result<(Graph, String), HarnessError> {
        const PROBS: [f64; 3] = [0.1, 0.3, 0.7];
        Ok(match self {
            AuditFamily::ErdosRenyi => {
                let n = rng.gen_range(5.min(max_n)..=max_n);
                let p = PROBS[rng.gen_range(0..PROBS.len())];
                let seed: u64 = rng.gen();
                (
                    Graph::erdos_renyi(n, p, seed)?,
                    format!("erdos_renyi(n={n};p={p};seed={seed})"),
                )
            }
            AuditFamily::Complete => {
                let n = rng.gen_range(2.min(max_n)..=max_n.min(16));
                (Graph::complete(n)?, format!("complete(n={n})"))
            }
            AuditFamily::DisjointCliques => {
                let size = rng.gen_range(2..=(max_n / 2).clamp(2, 10));
                let count = rng.gen_range(1..=(max_n / size).max(1));
                (
                    Graph::disjoint_cliques(count, size)?,
                    format!("disjoint_cliques(count={count};size={size})"),
                )
            }
            AuditFamily::CompleteBipartite => {
                let half = (max_n / 2).clamp(1, 12);
                let a = rng.gen_range(1..=half);
                let b = rng.gen_range(1..=half);
                (
                    Graph::complete_bipartite(a, b)?,
                    format!("complete_bipartite(a={a};b={b})"),
                )
            }
            AuditFamily::Cycle => {
                let n = rng.gen_range(3.min(max_n)..=max_n);
                (Graph::cycle(n)?, format!("cycle(n={n})"))
            }
        })
    }
}

impl fmt::Display for AuditFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AuditFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "er" | "erdos_renyi" => Ok(AuditFamily::ErdosRenyi),
            "cliques" | "disjoint_cliques" => Ok(AuditFamily::DisjointCliques),
            "bipartite" | "complete_bipartite" => Ok(AuditFamily::CompleteBipartite),
            "cycle" => Ok(AuditFamily::Cycle),
            "complete" => Ok(AuditFamily::Complete),
            other => Err(format!("unknown audit family {other:?}")),
        }
    }
}

fn default_instances() -> u64 {
    1000
}
fn default_max_n() -> usize {
    50
}
fn default_families() -> Vec<AuditFamily> {
    AuditFamily::ALL.to_vec()
}
fn default_evolve() -> u64 {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSweepSpec {
    #[serde(default = "default_instances")]
    pub instances: u64,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Instance `i` uses `families[i % families.len()]`.
    #[serde(default = "default_families")]
    pub families: Vec<AuditFamily>,
    /// Each random coloring is advanced by a uniform number of steps in
    /// `0..=evolve_steps` of the uniform variant before auditing.
    #[serde(default = "default_evolve")]
    pub evolve_steps: u64,
    #[serde(default, skip_serializing)]
    pub inject_fault: bool,
    #[serde(default, skip_serializing)]
    pub workers: usize,
}

impl Default for AuditSweepSpec {
    fn default() -> Self {
        AuditSweepSpec {
            instances: default_instances(),
            max_n: default_max_n(),
            master_seed: 0,
            families: default_families(),
            evolve_steps: default_evolve(),
            inject_fault: false,
            workers: 0,
        }
    }
}

impl AuditSweepSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.families.is_empty() {
            return Err(HarnessError::Config(
                "audit needs at least one family".into(),
            ));
        }
        if !(2..=AUDIT_MAX_N).contains(&self.max_n) {
            return Err(HarnessError::Config(format!(
                "max_n must be in [2, {AUDIT_MAX_N}], got {}",
                self.max_n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct InstanceAudit {
    pub index: u64,
    pub seed: u64,
    pub family: String,
    pub n: usize,
    pub m: usize,
    pub max_degree: usize,
    pub k: Color,
    pub evolved: u64,
    pub colors: Vec<Color>,
    pub report: AuditReport,
}

impl InstanceAudit {
    pub fn violation_count(&self) -> usize {
        self.report.violations().count()
    }

    /// One JSON object per report entry, tagged with the instance.
    pub fn json_lines(&self) -> Vec<serde_json::Value> {
        self.report
            .entries
            .iter()
            .map(|e| {
                let mut v = crate::audit::entry_json(e, &self.report.state_digest);
                let obj = v.as_object_mut().expect("entry is an object");
                obj.insert("instance".into(), self.index.into());
                obj.insert("family".into(), self.family.clone().into());
                v
            })
            .collect()
    }
}

/// Regenerates and audits instance `index` of `spec`.
pub fn audit_instance(spec: &AuditSweepSpec, index: u64) -> Result<InstanceAudit, HarnessError> {
    spec.validate()?;
    let seed = derive_run_seed(spec.master_seed, index);
    let mut rng = rng_from_seed(seed);
    let family = spec.families[(index % spec.families.len() as u64) as usize];
    let (graph, label) = family.sample(spec.max_n, &mut rng)?;
    let k = graph.max_degree() as Color + 1;
    let mut state = ColoringState::init_random(&graph, k, &mut rng)?;
    let target = rng.gen_range(0..=spec.evolve_steps);
    let mut evolved = 0;
    while evolved < target && step_uniform(&mut state, &mut rng).is_ok() {
        evolved += 1;
    }
    let opts = AuditOptions {
        bipartite: family == AuditFamily::CompleteBipartite,
        inject_fault: spec.inject_fault,
    };
    let report = audit_state(&state, opts)
        .map_err(|e| HarnessError::Config(format!("instance {index}: {e}")))?;
    Ok(InstanceAudit {
        index,
        seed,
        family: label,
        n: graph.n(),
        m: graph.m(),
        max_degree: graph.max_degree(),
        k,
        evolved,
        colors: state.colors().to_vec(),
        report,
    })
}

#[derive(Debug, Clone, Default)]
pub struct AuditSweepSummary {
    pub instances: u64,
    pub checks: usize,
    pub skipped: usize,
    pub violations: usize,
    /// `(instance, state digest)` of every instance with a violation.
    pub violating: Vec<(u64, String)>,
    /// Largest observed `c` in `E[Φ(t)] = Φ(t−1)(1 − 1/(c·n))`.
    pub max_drift_constant: Option<f64>,
}

impl AuditSweepSummary {
    pub fn from_instances(instances: &[InstanceAudit]) -> Self {
        let mut s = AuditSweepSummary {
            instances: instances.len() as u64,
            ..Default::default()
        };
        for inst in instances {
            for e in &inst.report.entries {
                match e {
                    AuditEntry::Checked(_) => s.checks += 1,
                    AuditEntry::Skipped { .. } => s.skipped += 1,
                }
            }
            let v = inst.violation_count();
            if v > 0 {
                s.violations += v;
                s.violating
                    .push((inst.index, inst.report.state_digest.clone()));
            }
            if let Some(c) = inst.report.drift_constant {
                s.max_drift_constant = Some(s.max_drift_constant.map_or(c, |m: f64| m.max(c)));
            }
        }
        s
    }
}

/// Audits instances `0..spec.instances`, in index order.
pub fn drift_audit_sweep(
    spec: &AuditSweepSpec,
) -> Result<(Vec<InstanceAudit>, AuditSweepSummary), HarnessError> {
    spec.validate()?;
    let instances = with_pool(spec.workers, || {
        (0..spec.instances)
            .into_par_iter()
            .map(|i| audit_instance(spec, i))
            .collect::<Result<Vec<_>, _>>()
    })??;
    let summary = AuditSweepSummary::from_instances(&instances);
    Ok((instances, summary))
}
