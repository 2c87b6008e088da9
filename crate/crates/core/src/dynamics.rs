//! The recoloring processes and the run loop.
//!
//! RNG contract: every run owns one ChaCha8 stream. Within a step the draws
//! happen in a fixed order (vertex, then color; the parallel variant draws one
//! color per frozen conflicted vertex in ascending vertex order). Initial
//! random colorings consume the same stream before the first step.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::{monochromatic_components, Color, ColoringState, StepDelta};

pub type SimRng = ChaCha8Rng;

/// Default bound on color draws for one persistent step.
pub const DEFAULT_DRAW_CAP: u64 = 1_000_000;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of run `run_index` in an ensemble: the first word of stream
/// `run_index` of the ChaCha8 generator keyed by `master_seed`.
pub fn derive_run_seed(master_seed: u64, run_index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index);
    rng.next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Uniform,
    #[serde(alias = "component")]
    ComponentView,
    Persistent,
    Parallel,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Uniform,
        Variant::ComponentView,
        Variant::Persistent,
        Variant::Parallel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Uniform => "uniform",
            Variant::ComponentView => "component",
            Variant::Persistent => "persistent",
            Variant::Parallel => "parallel",
        }
    }

    /// What one unit of `RunResult::steps` means for this variant.
    pub fn step_unit(self) -> &'static str {
        match self {
            Variant::Uniform | Variant::ComponentView => "recolorings",
            Variant::Persistent => "color_draws",
            Variant::Parallel => "rounds",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Variant::Uniform),
            "component" | "component_view" => Ok(Variant::ComponentView),
            "persistent" => Ok(Variant::Persistent),
            "parallel" => Ok(Variant::Parallel),
            other => Err(format!(
                "unknown variant {other:?} (expected uniform, component, persistent or parallel)"
            )),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StepError {
    #[error("coloring is already proper; no conflicted vertex to recolor")]
    AlreadyProper,
    #[error("vertex {vertex}: no conflict-free color after {draws} draws")]
    DrawCapExceeded { vertex: usize, draws: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    /// `(vertex, new color)` for every vertex that drew a color this step.
    pub recolored: Vec<(usize, Color)>,
    /// Units charged to the step budget: 1 for single recolorings, the number
    /// of color draws for the persistent variant, 1 round for the parallel one.
    pub cost: u64,
    pub delta: StepDelta,
}

fn add_delta(acc: &mut StepDelta, d: StepDelta) {
    acc.mono_edges += d.mono_edges;
    acc.isolated_edges += d.isolated_edges;
    acc.e_ip += d.e_ip;
    acc.phi_num += d.phi_num;
    acc.conflicted += d.conflicted;
}

/// Vertex uniform over the conflicted set, then color uniform over `1..=k`
/// (the old color included).
pub fn step_uniform<R: Rng + ?Sized>(
    state: &mut ColoringState<'_>,
    rng: &mut R,
) -> Result<StepOutcome, StepError> {
    let len = state.conflicted().len();
    if len == 0 {
        return Err(StepError::AlreadyProper);
    }
    let v = state.conflicted().get(rng.gen_range(0..len));
    let c = rng.gen_range(1..=state.k());
    let delta = state.recolor(v, c);
    Ok(StepOutcome {
        recolored: vec![(v, c)],
        cost: 1,
        delta,
    })
}

/// Component with probability `|V(C)|/|V(M)|`, vertex uniform in it, then a
/// uniform color. The component draw is a single index into the concatenated
/// vertex lists of all components.
pub fn step_component_view<R: Rng + ?Sized>(
    state: &mut ColoringState<'_>,
    rng: &mut R,
) -> Result<StepOutcome, StepError> {
    if state.is_proper() {
        return Err(StepError::AlreadyProper);
    }
    let view = monochromatic_components(state);
    let total = view.total_vertices();
    let mut pick = rng.gen_range(0..total);
    let component = view
        .components
        .iter()
        .find(|c| {
            if pick < c.size() {
                true
            } else {
                pick -= c.size();
                false
            }
        })
        .expect("index within total");
    let v = component.vertices[rng.gen_range(0..component.size())];
    let c = rng.gen_range(1..=state.k());
    let delta = state.recolor(v, c);
    Ok(StepOutcome {
        recolored: vec![(v, c)],
        cost: 1,
        delta,
    })
}

/// Picks a conflicted vertex uniformly and keeps drawing colors until one is
/// free in its neighborhood. Only the final color is applied. Fails after
/// `max_draws` unsuccessful draws, leaving the state untouched.
pub fn step_persistent<R: Rng + ?Sized>(
    state: &mut ColoringState<'_>,
    rng: &mut R,
    max_draws: u64,
) -> Result<StepOutcome, StepError> {
    let len = state.conflicted().len();
    if len == 0 {
        return Err(StepError::AlreadyProper);
    }
    let v = state.conflicted().get(rng.gen_range(0..len));
    let k = state.k();
    let mut blocked = vec![false; k as usize + 1];
    for &u in state.graph().neighbors(v) {
        blocked[state.color(u) as usize] = true;
    }
    let mut draws = 0;
    while draws < max_draws {
        let c = rng.gen_range(1..=k);
        draws += 1;
        if !blocked[c as usize] {
            let delta = state.recolor(v, c);
            return Ok(StepOutcome {
                recolored: vec![(v, c)],
                cost: draws,
                delta,
            });
        }
    }
    Err(StepError::DrawCapExceeded { vertex: v, draws })
}

/// Every currently conflicted vertex draws a fresh color; all draws happen
/// before any update is applied.
pub fn step_parallel<R: Rng + ?Sized>(
    state: &mut ColoringState<'_>,
    rng: &mut R,
) -> Result<StepOutcome, StepError> {
    if state.is_proper() {
        return Err(StepError::AlreadyProper);
    }
    let k = state.k();
    let recolored: Vec<(usize, Color)> = state
        .conflicted()
        .sorted()
        .into_iter()
        .map(|v| (v, rng.gen_range(1..=k)))
        .collect();
    let mut delta = StepDelta::default();
    for &(v, c) in &recolored {
        add_delta(&mut delta, state.recolor(v, c));
    }
    Ok(StepOutcome {
        recolored,
        cost: 1,
        delta,
    })
}

/// Exact probability that the uniform variant selects each conflicted vertex.
pub fn selection_law_uniform(state: &ColoringState<'_>) -> BTreeMap<usize, BigRational> {
    let len = state.conflicted().len();
    state
        .conflicted()
        .sorted()
        .into_iter()
        .map(|v| (v, BigRational::new(BigInt::from(1), BigInt::from(len))))
        .collect()
}

/// Exact selection probability under the component-first procedure:
/// `|V(C)|/|V(M)| · 1/|V(C)|` summed over the component holding the vertex.
pub fn selection_law_component_view(state: &ColoringState<'_>) -> BTreeMap<usize, BigRational> {
    let view = monochromatic_components(state);
    let total = BigInt::from(view.total_vertices());
    let mut law = BTreeMap::new();
    for comp in &view.components {
        let size = BigInt::from(comp.size());
        let p_comp = BigRational::new(size.clone(), total.clone());
        let p_vertex = BigRational::new(BigInt::from(1), size);
        for &v in &comp.vertices {
            *law.entry(v)
                .or_insert_with(|| BigRational::from_integer(0.into())) += &p_comp * &p_vertex;
        }
    }
    law
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSpec {
    pub variant: Variant,
    /// Budget in the variant's step unit.
    pub cap: u64,
    pub draw_cap: u64,
    pub trace: bool,
}

impl RunSpec {
    pub fn new(variant: Variant, cap: u64) -> Self {
        RunSpec {
            variant,
            cap,
            draw_cap: DEFAULT_DRAW_CAP,
            trace: false,
        }
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub variant: Variant,
    pub steps: u64,
    pub terminated: bool,
    /// A persistent step hit its draw cap before the budget ran out.
    pub stalled: bool,
    pub cap: u64,
    pub seed: u64,
    pub initial_phi_num: u64,
    pub final_phi_num: u64,
    pub phi_den: u64,
}

impl RunResult {
    pub fn initial_phi(&self) -> BigRational {
        BigRational::new(self.initial_phi_num.into(), self.phi_den.into())
    }

    pub fn final_phi(&self) -> BigRational {
        BigRational::new(self.final_phi_num.into(), self.phi_den.into())
    }
}

/// One line of a run trace. Record `t = 0` describes the initial coloring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub vertices: Vec<usize>,
    pub colors: Vec<Color>,
    pub mono_edges: u64,
    pub isolated_edges: u64,
    pub e_ip: u64,
    pub phi_num: u64,
    pub conflicted: usize,
}

impl TraceRecord {
    fn capture(t: u64, state: &ColoringState<'_>, recolored: &[(usize, Color)]) -> Self {
        TraceRecord {
            t,
            vertices: recolored.iter().map(|&(v, _)| v).collect(),
            colors: recolored.iter().map(|&(_, c)| c).collect(),
            mono_edges: state.mono_edge_count(),
            isolated_edges: state.isolated_edge_count(),
            e_ip: state.e_ip(),
            phi_num: state.phi_num(),
            conflicted: state.conflicted().len(),
        }
    }
}

/// Runs `spec.variant` until the coloring is proper or the budget is spent.
/// `observer` sees the state after every completed step together with the
/// step's outcome and the cumulative step count.
pub fn run_observed<R, F>(
    state: &mut ColoringState<'_>,
    spec: &RunSpec,
    rng: &mut R,
    seed: u64,
    mut observer: F,
) -> RunResult
where
    R: Rng + ?Sized,
    F: FnMut(&ColoringState<'_>, &StepOutcome, u64),
{
    let initial_phi_num = state.phi_num();
    let mut steps = 0u64;
    let mut stalled = false;
    while !state.is_proper() && steps < spec.cap {
        let outcome = match spec.variant {
            Variant::Uniform => step_uniform(state, rng),
            Variant::ComponentView => step_component_view(state, rng),
            Variant::Parallel => step_parallel(state, rng),
            Variant::Persistent => {
                let remaining = spec.cap - steps;
                let limit = spec.draw_cap.min(remaining);
                match step_persistent(state, rng, limit) {
                    Err(StepError::DrawCapExceeded { draws, .. }) => {
                        steps += draws;
                        stalled = limit < remaining;
                        break;
                    }
                    other => other,
                }
            }
        }
        .expect("conflicted state has a step");
        steps += outcome.cost;
        observer(state, &outcome, steps);
    }
    RunResult {
        variant: spec.variant,
        steps,
        terminated: state.is_proper(),
        stalled,
        cap: spec.cap,
        seed,
        initial_phi_num,
        final_phi_num: state.phi_num(),
        phi_den: state.phi_den(),
    }
}

/// [`run_observed`] with an optional trace. Trace records are indexed by
/// step number, so for the persistent variant `t` counts vertex selections.
pub fn run<R: Rng + ?Sized>(
    state: &mut ColoringState<'_>,
    spec: &RunSpec,
    rng: &mut R,
    seed: u64,
) -> (RunResult, Option<Vec<TraceRecord>>) {
    if !spec.trace {
        return (run_observed(state, spec, rng, seed, |_, _, _| {}), None);
    }
    let mut trace = vec![TraceRecord::capture(0, state, &[])];
    let result = run_observed(state, spec, rng, seed, |s, outcome, _| {
        let t = trace.len() as u64;
        trace.push(TraceRecord::capture(t, s, &outcome.recolored));
    });
    (result, Some(trace))
}
