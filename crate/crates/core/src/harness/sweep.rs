use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::output::{run_row, AggregateRow, Metadata, RunRow};
use super::stats::{scaling_fit, FitModel, FitPoint, FitResult};
use super::{run_ensemble_on, ExperimentConfig, Family, HarnessError, InitKind};
use crate::dynamics::{Variant, DEFAULT_DRAW_CAP};
use crate::state::Color;

/// A scalar or a list of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    Many(Vec<T>),
    One(T),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(xs) => xs.clone(),
        }
    }
}

/// One `[[families]]` table. Every parameter may be a list; the grid is the
/// cartesian product, expanded in key order. A `k` entry overrides the
/// palette size for the cells it produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyGrid {
    pub kind: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, OneOrMany<toml::Value>>,
}

impl FamilyGrid {
    pub fn expand(&self) -> Result<Vec<(Family, Option<Color>)>, HarnessError> {
        let mut combos: Vec<toml::Table> = vec![toml::Table::new()];
        for (key, values) in &self.params {
            let values = values.to_vec();
            if values.is_empty() {
                return Err(HarnessError::Config(format!(
                    "{}: empty list for {key}",
                    self.kind
                )));
            }
            combos = combos
                .into_iter()
                .flat_map(|base| {
                    values.iter().map(move |v| {
                        let mut t = base.clone();
                        t.insert(key.clone(), v.clone());
                        t
                    })
                })
                .collect();
        }
        combos
            .into_iter()
            .map(|mut t| {
                let k = match t.remove("k") {
                    None => None,
                    Some(v) => Some(
                        v.as_integer()
                            .and_then(|k| Color::try_from(k).ok())
                            .ok_or_else(|| HarnessError::Config(format!("bad k value {v}")))?,
                    ),
                };
                t.insert("kind".into(), toml::Value::String(self.kind.clone()));
                let family: Family = toml::Value::Table(t)
                    .try_into()
                    .map_err(|e: toml::de::Error| HarnessError::Config(format!("family: {e}")))?;
                Ok((family, k))
            })
            .collect()
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
fn default_variants() -> Vec<Variant> {
    vec![Variant::Uniform]
}
fn default_inits() -> Vec<InitKind> {
    vec![InitKind::Random]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default = "default_cap")]
    pub cap: u64,
    #[serde(default = "default_draw_cap")]
    pub draw_cap: u64,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default = "default_inits")]
    pub inits: Vec<InitKind>,
    /// Fit each (variant, init) group of cells against this model.
    #[serde(default)]
    pub fit: Option<FitModel>,
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub families: Vec<FamilyGrid>,
    #[serde(default, skip_serializing)]
    pub workers: usize,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Cells in output order: families (grid order), then variants, then inits.
    pub fn cells(&self) -> Result<Vec<ExperimentConfig>, HarnessError> {
        let mut out = Vec::new();
        for grid in &self.families {
            for (family, k) in grid.expand()? {
                for &variant in &self.variants {
                    for init in &self.inits {
                        out.push(ExperimentConfig {
                            family: family.clone(),
                            variant,
                            k,
                            init: init.clone(),
                            seeds: self.seeds,
                            master_seed: self.master_seed,
                            cap: self.cap,
                            draw_cap: self.draw_cap,
                            trace: false,
                            timing: self.timing,
                            workers: self.workers,
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn metadata(&self) -> Metadata {
        let units: Vec<String> = self
            .variants
            .iter()
            .map(|v| format!("{}={}", v.name(), v.step_unit()))
            .collect();
        Metadata::new("sweep", self, self.master_seed, &units.join(";"))
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub metadata: Metadata,
    pub runs: Vec<RunRow>,
    pub aggregate: Vec<AggregateRow>,
    /// One entry per (variant, init) group when a fit was requested.
    pub fits: Vec<(Variant, String, Result<FitResult, String>)>,
}

/// Runs every cell. A failing cell is recorded in its aggregate `status`
/// column and the sweep moves on.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutput, HarnessError> {
    let cells = config.cells()?;
    let mut runs = Vec::new();
    let mut aggregate = Vec::with_capacity(cells.len());
    // (variant, init) -> (aggregate row index, fit point)
    let mut groups: BTreeMap<(Variant, String), Vec<(usize, FitPoint)>> = BTreeMap::new();

    for (id, cell) in cells.iter().enumerate() {
        let label = cell.family.label();
        let mut row = AggregateRow::empty(id, &label, cell.variant, &cell.init, cell.seeds);
        let result = cell.family.build().and_then(|g| run_ensemble_on(&g, cell));
        match result {
            Ok(out) => {
                for rec in &out.runs {
                    runs.push(run_row(
                        id,
                        &label,
                        &out.graph,
                        cell.variant,
                        &cell.init,
                        rec,
                    ));
                }
                row.set_stats(&out.graph, &out.stats);
                groups
                    .entry((cell.variant, cell.init.name().to_string()))
                    .or_default()
                    .push((
                        aggregate.len(),
                        FitPoint {
                            n: out.graph.n,
                            max_degree: out.graph.max_degree,
                            mean_steps: out.stats.mean,
                        },
                    ));
            }
            Err(e) => row.status = format!("error: {e}"),
        }
        aggregate.push(row);
    }

    let mut fits = Vec::new();
    if let Some(model) = config.fit {
        for ((variant, init), members) in groups {
            let points: Vec<FitPoint> = members.iter().map(|(_, p)| *p).collect();
            match scaling_fit(&points, model) {
                Ok(fit) => {
                    for (i, (row, _)) in members.iter().enumerate() {
                        aggregate[*row].set_fit(&fit, i);
                    }
                    fits.push((variant, init, Ok(fit)));
                }
                Err(e) => {
                    for (row, _) in &members {
                        aggregate[*row].fit_model = Some(model.name().to_string());
                        aggregate[*row].status = format!("ok; fit skipped: {e}");
                    }
                    fits.push((variant, init, Err(e.to_string())));
                }
            }
        }
    }

    Ok(SweepOutput {
        metadata: config.metadata(),
        runs,
        aggregate,
        fits,
    })
}
