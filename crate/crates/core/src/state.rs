//! Coloring state with incrementally maintained conflict quantities.
//!
//! Tracked per state:
//! - `M`: monochromatic edges,
//! - `I ⊆ M`: isolated edges (monochromatic components with exactly two vertices),
//! - `P`: properly colored vertices (no incident monochromatic edge, isolated vertices included),
//! - `e(V(I), P)`: edges between endpoints of isolated edges and `P`,
//! - the potential `|M| + |I|/10 + e(V(I),P)/(100Δ)`, stored as the integer
//!   numerator over the fixed denominator `100Δ`.
//!
//! A vertex `x` lies in `V(I)` exactly when it has one same-colored neighbor `y`
//! and `y` has `x` as its only same-colored neighbor. The state keeps, per vertex,
//! the number and the index sum of same-colored neighbors, which makes the
//! partner of a degree-one vertex an O(1) lookup.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::Graph;

pub type Color = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StateError {
    #[error("palette size must be at least 1")]
    EmptyPalette,
    #[error("assignment has {found} colors for {expected} vertices")]
    LengthMismatch { expected: usize, found: usize },
    #[error("vertex {vertex}: color {color} outside 1..={k}")]
    ColorOutOfRange {
        vertex: usize,
        color: Color,
        k: Color,
    },
}

/// Index-swap set over `0..n` with O(1) insert, remove and indexed access.
#[derive(Debug, Clone)]
pub struct ConflictSet {
    dense: Vec<usize>,
    pos: Vec<usize>,
}

const ABSENT: usize = usize::MAX;

impl ConflictSet {
    pub fn new(n: usize) -> Self {
        ConflictSet {
            dense: Vec::new(),
            pos: vec![ABSENT; n],
        }
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.pos[v] != ABSENT
    }

    pub fn insert(&mut self, v: usize) {
        if self.pos[v] == ABSENT {
            self.pos[v] = self.dense.len();
            self.dense.push(v);
        }
    }

    pub fn remove(&mut self, v: usize) {
        let p = self.pos[v];
        if p == ABSENT {
            return;
        }
        let last = *self.dense.last().expect("non-empty");
        self.dense.swap_remove(p);
        if last != v {
            self.pos[last] = p;
        }
        self.pos[v] = ABSENT;
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dense.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.dense.is_empty()
    }

    /// Element at dense slot `i`; slot order depends on insertion history.
    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.dense[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.dense
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut out = self.dense.clone();
        out.sort_unstable();
        out
    }
}

/// Signed change of every tracked quantity caused by one recoloring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepDelta {
    pub mono_edges: i64,
    pub isolated_edges: i64,
    pub e_ip: i64,
    pub phi_num: i64,
    pub conflicted: i64,
}

impl StepDelta {
    pub fn is_zero(&self) -> bool {
        *self == StepDelta::default()
    }
}

/// The conflict quantities of a coloring. Produced both from the incremental
/// fields ([`ColoringState::derived`]) and from scratch ([`ColoringState::recompute_all`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedSnapshot {
    /// Conflicted vertices in ascending order.
    pub conflicted: Vec<usize>,
    pub mono_edges: u64,
    pub isolated_edges: u64,
    pub e_ip: u64,
    pub phi_num: u64,
}

#[derive(Debug, Clone)]
pub struct ColoringState<'g> {
    graph: &'g Graph,
    k: Color,
    color: Vec<Color>,
    same: Vec<u32>,
    same_sum: Vec<usize>,
    conflicted: ConflictSet,
    mono_edges: u64,
    iso_vertices: u64,
    e_ip: u64,
    generation: u64,
    mark: Vec<bool>,
}

impl<'g> ColoringState<'g> {
    /// Colors every vertex independently and uniformly from `1..=k`, drawing
    /// in ascending vertex order.
    pub fn init_random<R: Rng + ?Sized>(
        graph: &'g Graph,
        k: Color,
        rng: &mut R,
    ) -> Result<Self, StateError> {
        if k == 0 {
            return Err(StateError::EmptyPalette);
        }
        let colors = (0..graph.n()).map(|_| rng.gen_range(1..=k)).collect();
        Ok(Self::build(graph, k, colors))
    }

    pub fn init_fixed(
        graph: &'g Graph,
        k: Color,
        assignment: &[Color],
    ) -> Result<Self, StateError> {
        if k == 0 {
            return Err(StateError::EmptyPalette);
        }
        if assignment.len() != graph.n() {
            return Err(StateError::LengthMismatch {
                expected: graph.n(),
                found: assignment.len(),
            });
        }
        if let Some((vertex, &color)) = assignment
            .iter()
            .enumerate()
            .find(|(_, &c)| c == 0 || c > k)
        {
            return Err(StateError::ColorOutOfRange { vertex, color, k });
        }
        Ok(Self::build(graph, k, assignment.to_vec()))
    }

    /// Every vertex gets color 1.
    pub fn init_monochromatic(graph: &'g Graph, k: Color) -> Result<Self, StateError> {
        Self::init_fixed(graph, k, &vec![1; graph.n()])
    }

    fn build(graph: &'g Graph, k: Color, color: Vec<Color>) -> Self {
        let n = graph.n();
        let mut state = ColoringState {
            graph,
            k,
            color,
            same: vec![0; n],
            same_sum: vec![0; n],
            conflicted: ConflictSet::new(n),
            mono_edges: 0,
            iso_vertices: 0,
            e_ip: 0,
            generation: 0,
            mark: vec![false; n],
        };
        for (u, v) in graph.edges() {
            if state.color[u] == state.color[v] {
                state.same[u] += 1;
                state.same[v] += 1;
                state.same_sum[u] += v;
                state.same_sum[v] += u;
                state.mono_edges += 1;
            }
        }
        for v in 0..n {
            if state.same[v] > 0 {
                state.conflicted.insert(v);
            }
            if state.in_isolated_edge(v) {
                state.iso_vertices += 1;
            }
        }
        state.e_ip = graph
            .edges()
            .filter(|&(u, v)| state.counts_toward_eip(u, v))
            .count() as u64;
        state
    }

    #[inline]
    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    #[inline]
    pub fn k(&self) -> Color {
        self.k
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    #[inline]
    pub fn max_degree(&self) -> usize {
        self.graph.max_degree()
    }

    #[inline]
    pub fn color(&self, v: usize) -> Color {
        self.color[v]
    }

    pub fn colors(&self) -> &[Color] {
        &self.color
    }

    pub fn conflicted(&self) -> &ConflictSet {
        &self.conflicted
    }

    #[inline]
    pub fn is_conflicted(&self, v: usize) -> bool {
        self.same[v] > 0
    }

    /// Number of neighbors sharing `v`'s color.
    #[inline]
    pub fn same_colored_degree(&self, v: usize) -> usize {
        self.same[v] as usize
    }

    #[inline]
    pub fn is_properly_colored(&self, v: usize) -> bool {
        self.same[v] == 0
    }

    #[inline]
    pub fn in_isolated_edge(&self, v: usize) -> bool {
        self.same[v] == 1 && self.same[self.same_sum[v]] == 1
    }

    pub fn is_proper(&self) -> bool {
        self.conflicted.is_empty()
    }

    pub fn mono_edge_count(&self) -> u64 {
        self.mono_edges
    }

    pub fn isolated_edge_count(&self) -> u64 {
        self.iso_vertices / 2
    }

    pub fn e_ip(&self) -> u64 {
        self.e_ip
    }

    /// Bumped by every recoloring that changes a color.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Numerator of the potential over [`Self::phi_den`].
    pub fn phi_num(&self) -> u64 {
        let d = self.max_degree() as u64;
        100 * d * self.mono_edges + 10 * d * self.isolated_edge_count() + self.e_ip
    }

    /// `100Δ`, or 1 for edgeless graphs where the potential is identically 0.
    pub fn phi_den(&self) -> u64 {
        (100 * self.max_degree() as u64).max(1)
    }

    pub fn potential(&self) -> BigRational {
        if self.max_degree() == 0 {
            return BigRational::zero();
        }
        BigRational::new(BigInt::from(self.phi_num()), BigInt::from(self.phi_den()))
    }

    /// `|N(v) ∩ P|`.
    pub fn properly_colored_neighbors(&self, v: usize) -> usize {
        self.graph
            .neighbors(v)
            .iter()
            .filter(|&&u| self.is_properly_colored(u))
            .count()
    }

    #[inline]
    fn counts_toward_eip(&self, x: usize, y: usize) -> bool {
        (self.in_isolated_edge(x) && self.is_properly_colored(y))
            || (self.is_properly_colored(x) && self.in_isolated_edge(y))
    }

    /// Contribution to `|V(I)|` and `e(V(I), P)` from the marked vertices and
    /// the edges touching them, each edge counted once.
    fn local_terms(&self, affected: &[usize]) -> (u64, u64) {
        let mut iso = 0;
        let mut eip = 0;
        for &x in affected {
            if self.in_isolated_edge(x) {
                iso += 1;
            }
            for &y in self.graph.neighbors(x) {
                if (!self.mark[y] || x < y) && self.counts_toward_eip(x, y) {
                    eip += 1;
                }
            }
        }
        (iso, eip)
    }

    fn mark_affected(&mut self, affected: &mut Vec<usize>, x: usize) {
        if !self.mark[x] {
            self.mark[x] = true;
            affected.push(x);
        }
    }

    /// Sets `color(v) = c` and updates every derived quantity.
    ///
    /// Only `v`, neighbors whose same-colored degree changes, and the
    /// same-colored partners of those neighbors (before or after the move) can
    /// change membership in `V(I)` or `P`, so the update touches vertices
    /// within distance two of `v`.
    pub fn recolor(&mut self, v: usize, c: Color) -> StepDelta {
        assert!(c >= 1 && c <= self.k, "color {c} outside 1..={}", self.k);
        let old = self.color[v];
        if old == c {
            return StepDelta::default();
        }
        let graph = self.graph;
        let before_mono = self.mono_edges as i64;
        let before_iso = self.isolated_edge_count() as i64;
        let before_eip = self.e_ip as i64;
        let before_phi = self.phi_num() as i64;
        let before_conf = self.conflicted.len() as i64;

        let mut affected = Vec::with_capacity(8);
        self.mark_affected(&mut affected, v);
        for &u in graph.neighbors(v) {
            let cu = self.color[u];
            if cu != old && cu != c {
                continue;
            }
            self.mark_affected(&mut affected, u);
            if self.same[u] == 1 {
                let partner = self.same_sum[u];
                self.mark_affected(&mut affected, partner);
            }
            // Lone remaining partner once v leaves u's color class.
            if cu == old && self.same[u] == 2 {
                let partner = self.same_sum[u] - v;
                self.mark_affected(&mut affected, partner);
            }
        }

        let (iso_before, eip_before) = self.local_terms(&affected);

        self.color[v] = c;
        let mut same_v = 0;
        let mut sum_v = 0;
        for &u in graph.neighbors(v) {
            let cu = self.color[u];
            if cu == old {
                self.same[u] -= 1;
                self.same_sum[u] -= v;
                self.mono_edges -= 1;
                if self.same[u] == 0 {
                    self.conflicted.remove(u);
                }
            } else if cu == c {
                self.same[u] += 1;
                self.same_sum[u] += v;
                self.mono_edges += 1;
                same_v += 1;
                sum_v += u;
                self.conflicted.insert(u);
            }
        }
        self.same[v] = same_v;
        self.same_sum[v] = sum_v;
        if same_v > 0 {
            self.conflicted.insert(v);
        } else {
            self.conflicted.remove(v);
        }

        let (iso_after, eip_after) = self.local_terms(&affected);
        self.iso_vertices = self.iso_vertices - iso_before + iso_after;
        self.e_ip = self.e_ip - eip_before + eip_after;
        for &x in &affected {
            self.mark[x] = false;
        }
        self.generation += 1;

        StepDelta {
            mono_edges: self.mono_edges as i64 - before_mono,
            isolated_edges: self.isolated_edge_count() as i64 - before_iso,
            e_ip: self.e_ip as i64 - before_eip,
            phi_num: self.phi_num() as i64 - before_phi,
            conflicted: self.conflicted.len() as i64 - before_conf,
        }
    }

    /// The incrementally maintained quantities.
    pub fn derived(&self) -> DerivedSnapshot {
        DerivedSnapshot {
            conflicted: self.conflicted.sorted(),
            mono_edges: self.mono_edges,
            isolated_edges: self.isolated_edge_count(),
            e_ip: self.e_ip,
            phi_num: self.phi_num(),
        }
    }

    /// Recomputes every quantity from the coloring alone: isolated edges via
    /// an explicit component search, `e(V(I), P)` via a scan over all edges.
    pub fn recompute_all(&self) -> DerivedSnapshot {
        let g = self.graph;
        let n = g.n();
        let mut conflicted = vec![false; n];
        let mut mono_edges = 0u64;
        for (u, v) in g.edges() {
            if self.color[u] == self.color[v] {
                mono_edges += 1;
                conflicted[u] = true;
                conflicted[v] = true;
            }
        }
        let view = monochromatic_components(self);
        let mut in_iso = vec![false; n];
        let mut isolated_edges = 0u64;
        for comp in view.components.iter().filter(|c| c.is_isolated_edge()) {
            isolated_edges += 1;
            for &x in &comp.vertices {
                in_iso[x] = true;
            }
        }
        let e_ip = g
            .edges()
            .filter(|&(u, v)| (in_iso[u] && !conflicted[v]) || (!conflicted[u] && in_iso[v]))
            .count() as u64;
        let d = g.max_degree() as u64;
        DerivedSnapshot {
            conflicted: (0..n).filter(|&v| conflicted[v]).collect(),
            mono_edges,
            isolated_edges,
            e_ip,
            phi_num: 100 * d * mono_edges + 10 * d * isolated_edges + e_ip,
        }
    }

    /// SHA-256 over `(n, k, edges, colors)`, hex encoded.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n() as u64).to_le_bytes());
        hasher.update(self.k.to_le_bytes());
        for (u, v) in self.graph.edges() {
            hasher.update((u as u64).to_le_bytes());
            hasher.update((v as u64).to_le_bytes());
        }
        for &c in &self.color {
            hasher.update(c.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

/// A connected component of the monochromatic subgraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Ascending vertex indices.
    pub vertices: Vec<usize>,
    pub edges: usize,
    pub color: Color,
    /// Generation of the state the component was computed from.
    pub generation: u64,
}

impl Component {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_isolated_edge(&self) -> bool {
        self.vertices.len() == 2
    }

    /// `2·edges/|V(C)|`.
    pub fn average_degree(&self) -> BigRational {
        BigRational::new(
            BigInt::from(2 * self.edges),
            BigInt::from(self.vertices.len()),
        )
    }
}

#[derive(Debug, Clone)]
pub struct ComponentView {
    pub generation: u64,
    pub components: Vec<Component>,
}

impl ComponentView {
    pub fn total_vertices(&self) -> usize {
        self.components.iter().map(Component::size).sum()
    }
}

/// Components of `(V(M), M)`, ordered by smallest vertex.
pub fn monochromatic_components(state: &ColoringState<'_>) -> ComponentView {
    let g = state.graph();
    let mut seen = vec![false; g.n()];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for start in state.conflicted().sorted() {
        if seen[start] {
            continue;
        }
        let color = state.color(start);
        seen[start] = true;
        stack.push(start);
        let mut vertices = Vec::new();
        let mut degree_sum = 0;
        while let Some(x) = stack.pop() {
            vertices.push(x);
            for &y in g.neighbors(x) {
                if state.color(y) == color {
                    degree_sum += 1;
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        vertices.sort_unstable();
        components.push(Component {
            vertices,
            edges: degree_sum / 2,
            color,
            generation: state.generation(),
        });
    }
    ComponentView {
        generation: state.generation(),
        components,
    }
}
