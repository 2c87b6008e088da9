//! Exact one-step expectations and the drift inequalities checked against them.
//!
//! Expectations are computed by brute force: every `(vertex, color)` outcome of
//! a single recoloring is applied to a scratch copy of the state and the
//! resulting quantities are summed as integers. Division happens once, in
//! big-integer rationals, so every comparison below is exact.
//!
//! The claim checks assume the palette `{1, .., Δ+1}` and reject other `k`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::json;
use thiserror::Error;

use crate::state::{monochromatic_components, ColoringState, Component, ComponentView};

#[derive(Debug, Error, PartialEq)]
pub enum AuditError {
    #[error("component was computed for generation {component} but the state is at {state}")]
    StaleComponent { component: u64, state: u64 },
    #[error("component is not a monochromatic component of the current coloring")]
    UnknownComponent,
    #[error("coloring is proper; nothing to recolor")]
    NoConflict,
    #[error("claim requires palette size Δ+1 = {expected}, state uses {found}")]
    PaletteMismatch { expected: u64, found: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn rat(n: impl Into<BigInt>, d: impl Into<BigInt>) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn int(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

/// `"num/den"` with the denominator always present.
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Sums of post-step quantities over all `k` colors for one vertex.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OutcomeSums {
    pub mono_edges: u64,
    pub isolated_edges: u64,
    pub e_ip: u64,
    pub phi_num: u64,
    pub outcomes: u64,
}

impl OutcomeSums {
    fn add(&mut self, other: &OutcomeSums) {
        self.mono_edges += other.mono_edges;
        self.isolated_edges += other.isolated_edges;
        self.e_ip += other.e_ip;
        self.phi_num += other.phi_num;
        self.outcomes += other.outcomes;
    }
}

/// Recolors `v` with every color on a scratch copy and sums the results.
pub fn vertex_outcome_sums(state: &ColoringState<'_>, v: usize) -> OutcomeSums {
    let mut sums = OutcomeSums::default();
    for c in 1..=state.k() {
        let (m, i, e, p) = if c == state.color(v) {
            (
                state.mono_edge_count(),
                state.isolated_edge_count(),
                state.e_ip(),
                state.phi_num(),
            )
        } else {
            let mut scratch = state.clone();
            scratch.recolor(v, c);
            (
                scratch.mono_edge_count(),
                scratch.isolated_edge_count(),
                scratch.e_ip(),
                scratch.phi_num(),
            )
        };
        sums.mono_edges += m;
        sums.isolated_edges += i;
        sums.e_ip += e;
        sums.phi_num += p;
        sums.outcomes += 1;
    }
    sums
}

/// Conditional expectations of the tracked quantities after one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactExpectation {
    pub e_m: BigRational,
    pub e_i: BigRational,
    pub e_eip: BigRational,
    pub e_phi: BigRational,
    pub outcomes: u64,
}

impl ExactExpectation {
    fn from_sums(sums: &OutcomeSums, phi_den: u64) -> Self {
        let n = sums.outcomes;
        ExactExpectation {
            e_m: rat(sums.mono_edges, n),
            e_i: rat(sums.isolated_edges, n),
            e_eip: rat(sums.e_ip, n),
            e_phi: rat(sums.phi_num, n * phi_den),
            outcomes: n,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Scope<'a> {
    /// Vertex uniform over all conflicted vertices.
    WholeState,
    /// Vertex uniform over one monochromatic component.
    Component(&'a Component),
}

fn ensure_current(state: &ColoringState<'_>, comp: &Component) -> Result<(), AuditError> {
    if comp.generation != state.generation() {
        return Err(AuditError::StaleComponent {
            component: comp.generation,
            state: state.generation(),
        });
    }
    let view = monochromatic_components(state);
    if !view.components.iter().any(|c| c.vertices == comp.vertices) {
        return Err(AuditError::UnknownComponent);
    }
    Ok(())
}

pub fn exact_step_expectations(
    state: &ColoringState<'_>,
    scope: Scope<'_>,
) -> Result<ExactExpectation, AuditError> {
    let vertices = match scope {
        Scope::WholeState => {
            if state.is_proper() {
                return Err(AuditError::NoConflict);
            }
            state.conflicted().sorted()
        }
        Scope::Component(comp) => {
            ensure_current(state, comp)?;
            comp.vertices.clone()
        }
    };
    let mut sums = OutcomeSums::default();
    for v in vertices {
        sums.add(&vertex_outcome_sums(state, v));
    }
    Ok(ExactExpectation::from_sums(&sums, state.phi_den()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClaimId {
    /// `E[|M_t| | C] ≤ |M_{t-1}| − d̄(C) + 1 − 1/(Δ+1)`.
    ComponentEdges,
    /// `E[|I_t| | C] ≤ |I_{t-1}| + d̄(C) + 1`.
    IsolatedGeneral,
    /// For `C = uw`: `E[|I_t| | C] ≤ |I_{t-1}| − Δ/(Δ+1) + (|N(u)∩P| + |N(w)∩P|)/(2(Δ+1))`.
    IsolatedEdge,
    /// `|M| ≤ Φ`.
    MonoPhiLower,
    /// `Φ ≤ 2|M|`.
    MonoPhiUpper,
    /// `E[Φ(t)] ≤ Φ(t−1)(1 − 1/(1000n))`.
    Multiplicative,
    /// Complete bipartite graphs, `C = uw`: `E[|I_t| | C] ≤ |I_{t-1}| − Δ/(2(Δ+1))`.
    BipartiteIsolated,
}

impl ClaimId {
    pub fn name(self) -> &'static str {
        match self {
            ClaimId::ComponentEdges => "component_edges",
            ClaimId::IsolatedGeneral => "isolated_general",
            ClaimId::IsolatedEdge => "isolated_edge",
            ClaimId::MonoPhiLower => "mono_phi_lower",
            ClaimId::MonoPhiUpper => "mono_phi_upper",
            ClaimId::Multiplicative => "multiplicative",
            ClaimId::BipartiteIsolated => "bipartite_isolated",
        }
    }
}

impl fmt::Display for ClaimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimCheck {
    pub claim: ClaimId,
    /// Index into the component view, or `None` for whole-state claims.
    pub component: Option<usize>,
    pub lhs: BigRational,
    pub rhs: BigRational,
    pub margin: BigRational,
    pub satisfied: bool,
}

impl ClaimCheck {
    fn new(claim: ClaimId, component: Option<usize>, lhs: BigRational, rhs: BigRational) -> Self {
        let margin = &rhs - &lhs;
        let satisfied = !margin.is_negative();
        ClaimCheck {
            claim,
            component,
            lhs,
            rhs,
            margin,
            satisfied,
        }
    }

    fn flip_sign(&mut self) {
        self.margin = -self.margin.clone();
        self.satisfied = !self.margin.is_negative();
    }
}

fn require_full_palette(state: &ColoringState<'_>) -> Result<BigRational, AuditError> {
    let expected = state.max_degree() as u64 + 1;
    if state.k() as u64 != expected {
        return Err(AuditError::PaletteMismatch {
            expected,
            found: state.k() as u64,
        });
    }
    Ok(int(expected))
}

fn component_edges_check(
    state: &ColoringState<'_>,
    comp: &Component,
    index: Option<usize>,
    e: &ExactExpectation,
) -> Result<ClaimCheck, AuditError> {
    let palette = require_full_palette(state)?;
    let rhs = int(state.mono_edge_count()) - comp.average_degree() + int(1) - palette.recip();
    Ok(ClaimCheck::new(
        ClaimId::ComponentEdges,
        index,
        e.e_m.clone(),
        rhs,
    ))
}

fn isolated_checks(
    state: &ColoringState<'_>,
    comp: &Component,
    index: Option<usize>,
    e: &ExactExpectation,
) -> Result<Vec<ClaimCheck>, AuditError> {
    let palette = require_full_palette(state)?;
    let iso = int(state.isolated_edge_count());
    let mut out = vec![ClaimCheck::new(
        ClaimId::IsolatedGeneral,
        index,
        e.e_i.clone(),
        &iso + comp.average_degree() + int(1),
    )];
    if comp.is_isolated_edge() {
        let delta = int(state.max_degree() as u64);
        let (u, w) = (comp.vertices[0], comp.vertices[1]);
        let p_nbrs = state.properly_colored_neighbors(u) + state.properly_colored_neighbors(w);
        let rhs = &iso - &delta / &palette + int(p_nbrs as u64) / (int(2) * &palette);
        out.push(ClaimCheck::new(
            ClaimId::IsolatedEdge,
            index,
            e.e_i.clone(),
            rhs,
        ));
    }
    Ok(out)
}

fn bipartite_check(
    state: &ColoringState<'_>,
    index: Option<usize>,
    e: &ExactExpectation,
) -> Result<ClaimCheck, AuditError> {
    let palette = require_full_palette(state)?;
    let delta = int(state.max_degree() as u64);
    let rhs = int(state.isolated_edge_count()) - delta / (int(2) * palette);
    Ok(ClaimCheck::new(
        ClaimId::BipartiteIsolated,
        index,
        e.e_i.clone(),
        rhs,
    ))
}

fn mult_check(state: &ColoringState<'_>, e: &ExactExpectation) -> ClaimCheck {
    let phi = state.potential();
    let factor = int(1) - rat(1u64, 1000 * state.n() as u64);
    ClaimCheck::new(ClaimId::Multiplicative, None, e.e_phi.clone(), phi * factor)
}

pub fn check_claim_edges(
    state: &ColoringState<'_>,
    comp: &Component,
) -> Result<ClaimCheck, AuditError> {
    let e = exact_step_expectations(state, Scope::Component(comp))?;
    component_edges_check(state, comp, None, &e)
}

/// The general bound, plus the isolated-edge bound when `|V(C)| = 2`.
pub fn check_claim_isolated(
    state: &ColoringState<'_>,
    comp: &Component,
) -> Result<Vec<ClaimCheck>, AuditError> {
    let e = exact_step_expectations(state, Scope::Component(comp))?;
    isolated_checks(state, comp, None, &e)
}

/// Only meaningful on complete bipartite graphs with an isolated-edge `comp`.
pub fn check_claim_bipartite(
    state: &ColoringState<'_>,
    comp: &Component,
) -> Result<ClaimCheck, AuditError> {
    if !comp.is_isolated_edge() {
        return Err(AuditError::InvalidArgument(
            "bipartite bound applies to isolated edges only".into(),
        ));
    }
    let e = exact_step_expectations(state, Scope::Component(comp))?;
    bipartite_check(state, None, &e)
}

pub fn check_claim_mult(state: &ColoringState<'_>) -> Result<ClaimCheck, AuditError> {
    let e = exact_step_expectations(state, Scope::WholeState)?;
    Ok(mult_check(state, &e))
}

/// `|M| ≤ Φ ≤ 2|M|`.
pub fn check_mono_phi(state: &ColoringState<'_>) -> [ClaimCheck; 2] {
    let m = int(state.mono_edge_count());
    let phi = state.potential();
    [
        ClaimCheck::new(ClaimId::MonoPhiLower, None, m.clone(), phi.clone()),
        ClaimCheck::new(ClaimId::MonoPhiUpper, None, phi, int(2) * m),
    ]
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AuditOptions {
    /// Also check the complete-bipartite isolated-edge bound.
    pub bipartite: bool,
    /// Negates every component-edges margin. Negative control for the
    /// reporting pipeline; never set outside tests.
    pub inject_fault: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AuditEntry {
    Checked(ClaimCheck),
    Skipped {
        claim: ClaimId,
        reason: &'static str,
    },
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub state_digest: String,
    pub entries: Vec<AuditEntry>,
    /// Whole-state expectation, when the state had a conflict.
    pub whole: Option<ExactExpectation>,
    /// Smallest `c` with `E[Φ(t)] = Φ(t−1)(1 − 1/(c·n))`, when the potential decreases in expectation.
    pub drift_constant: Option<f64>,
}

impl AuditReport {
    pub fn violations(&self) -> impl Iterator<Item = &ClaimCheck> {
        self.entries.iter().filter_map(|e| match e {
            AuditEntry::Checked(c) if !c.satisfied => Some(c),
            _ => None,
        })
    }

    pub fn checks(&self) -> impl Iterator<Item = &ClaimCheck> {
        self.entries.iter().filter_map(|e| match e {
            AuditEntry::Checked(c) => Some(c),
            _ => None,
        })
    }
}

/// Runs every applicable claim on `state`. Per-vertex outcome sums are
/// computed once and shared by the whole-state and component scopes.
pub fn audit_state(
    state: &ColoringState<'_>,
    opts: AuditOptions,
) -> Result<AuditReport, AuditError> {
    require_full_palette(state)?;
    let view: ComponentView = monochromatic_components(state);
    let phi_den = state.phi_den();
    let mut entries = Vec::new();
    let mut whole_sums = OutcomeSums::default();

    for (idx, comp) in view.components.iter().enumerate() {
        let mut sums = OutcomeSums::default();
        for &v in &comp.vertices {
            sums.add(&vertex_outcome_sums(state, v));
        }
        whole_sums.add(&sums);
        let e = ExactExpectation::from_sums(&sums, phi_den);
        let mut edges = component_edges_check(state, comp, Some(idx), &e)?;
        if opts.inject_fault {
            edges.flip_sign();
        }
        entries.push(AuditEntry::Checked(edges));
        for check in isolated_checks(state, comp, Some(idx), &e)? {
            entries.push(AuditEntry::Checked(check));
        }
        if opts.bipartite && comp.is_isolated_edge() {
            entries.push(AuditEntry::Checked(bipartite_check(state, Some(idx), &e)?));
        }
    }

    for check in check_mono_phi(state) {
        entries.push(AuditEntry::Checked(check));
    }

    let (whole, drift_constant) = if state.is_proper() {
        entries.push(AuditEntry::Skipped {
            claim: ClaimId::Multiplicative,
            reason: "potential is zero",
        });
        (None, None)
    } else {
        let e = ExactExpectation::from_sums(&whole_sums, phi_den);
        entries.push(AuditEntry::Checked(mult_check(state, &e)));
        let phi = state.potential();
        let drop = &phi - &e.e_phi;
        let constant = if drop.is_positive() {
            (phi / (drop * int(state.n() as u64))).to_f64()
        } else {
            None
        };
        (Some(e), constant)
    };

    Ok(AuditReport {
        state_digest: state.digest(),
        entries,
        whole,
        drift_constant,
    })
}

/// JSON object for one report entry; rationals as `"num/den"` strings.
pub fn entry_json(entry: &AuditEntry, state_digest: &str) -> serde_json::Value {
    match entry {
        AuditEntry::Checked(c) => json!({
            "claim": c.claim.name(),
            "component": c.component,
            "lhs": format_rational(&c.lhs),
            "rhs": format_rational(&c.rhs),
            "margin": format_rational(&c.margin),
            "satisfied": c.satisfied,
            "state_digest": state_digest,
        }),
        AuditEntry::Skipped { claim, reason } => json!({
            "claim": claim.name(),
            "skipped": true,
            "reason": reason,
            "state_digest": state_digest,
        }),
    }
}

fn check_positive(name: &str, x: f64) -> Result<(), AuditError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(AuditError::InvalidArgument(format!(
            "{name} must be positive, got {x}"
        )))
    }
}

/// Additive drift: `E[T] ≤ E[X_0]/δ`.
pub fn additive_drift_bound(x0: f64, delta: f64) -> Result<f64, AuditError> {
    check_positive("delta", delta)?;
    if x0 < 0.0 {
        return Err(AuditError::InvalidArgument(format!(
            "x0 must be >= 0, got {x0}"
        )));
    }
    Ok(x0 / delta)
}

/// Multiplicative drift: `E[T] ≤ (1 + ln(s0/smin))/δ`.
pub fn multiplicative_drift_bound(s0: f64, smin: f64, delta: f64) -> Result<f64, AuditError> {
    check_positive("smin", smin)?;
    check_positive("delta", delta)?;
    if s0 < smin {
        return Err(AuditError::InvalidArgument(format!(
            "s0 = {s0} below smin = {smin}"
        )));
    }
    Ok((1.0 + (s0 / smin).ln()) / delta)
}

/// Multiplicative drift tail: `Pr[T > ⌈(r + ln(s0/smin))/δ⌉] < e^{−r}`.
/// Returns the time threshold and the probability bound.
pub fn multiplicative_tail(
    r: f64,
    s0: f64,
    smin: f64,
    delta: f64,
) -> Result<(u64, f64), AuditError> {
    if r.is_nan() || r < 0.0 {
        return Err(AuditError::InvalidArgument(format!(
            "r must be >= 0, got {r}"
        )));
    }
    check_positive("smin", smin)?;
    check_positive("delta", delta)?;
    if s0 < smin {
        return Err(AuditError::InvalidArgument(format!(
            "s0 = {s0} below smin = {smin}"
        )));
    }
    let threshold = ((r + (s0 / smin).ln()) / delta).ceil();
    Ok((threshold as u64, (-r).exp()))
}

/// Additive drift tail with step bound `c`: `Pr[T ≥ r] ≤ exp(−rδ²/(8c²))`,
/// valid for `r ≥ 2X_0/δ`.
pub fn additive_tail(r: f64, x0: f64, delta: f64, step_bound: f64) -> Result<f64, AuditError> {
    check_positive("delta", delta)?;
    check_positive("step bound", step_bound)?;
    let min_r = 2.0 * x0 / delta;
    if r.is_nan() || r < min_r {
        return Err(AuditError::InvalidArgument(format!(
            "r = {r} below the admissible threshold 2·x0/δ = {min_r}"
        )));
    }
    Ok((-r * delta * delta / (8.0 * step_bound * step_bound)).exp())
}

/// `max{ln(Δ·Φ/n), 0}` for an exact potential value.
pub fn psi_from_phi(phi: &BigRational, n: usize, max_degree: usize) -> f64 {
    if n == 0 || max_degree == 0 || phi.is_zero() {
        return 0.0;
    }
    let scaled = phi * int(max_degree as u64) / int(n as u64);
    if scaled <= int(1) {
        return 0.0;
    }
    scaled.to_f64().expect("finite ratio").ln()
}

pub fn psi_potential(state: &ColoringState<'_>) -> f64 {
    psi_from_phi(&state.potential(), state.n(), state.max_degree())
}

/// Expected-time budget assembled from the two drift phases: multiplicative
/// drift `1/(1000n)` from `nΔ` down to `n/Δ`, then additive drift `1/(Δ+1)`
/// on at most `n/Δ` monochromatic edges.
pub fn two_phase_budget(n: usize, max_degree: usize) -> Result<f64, AuditError> {
    if n == 0 || max_degree == 0 {
        return Ok(0.0);
    }
    let (n, d) = (n as f64, max_degree as f64);
    let phase1 = multiplicative_drift_bound((n * d).max(n / d), n / d, 1.0 / (1000.0 * n))?;
    let phase2 = additive_drift_bound(n / d, 1.0 / (d + 1.0))?;
    Ok(phase1 + phase2)
}
