//! Simple undirected graphs over dense `0..n` vertex indices.
//!
//! Every constructor normalizes its input into sorted, deduplicated adjacency
//! lists, so two graphs with the same edge set compare equal regardless of how
//! they were built.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Comment directive understood by [`Graph::from_edge_list`] that fixes the
/// vertex count, so trailing isolated vertices survive a render/parse cycle.
pub const VERTICES_DIRECTIVE: &str = "# vertices:";

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("line {line}: cannot parse {token:?} as a vertex index")]
    BadToken { line: usize, token: String },
    #[error("line {line}: expected two vertex indices, found {found}")]
    BadArity { line: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
    max_degree: usize,
}

impl Graph {
    /// Builds a graph on `n` vertices from an edge iterator. Duplicate edges
    /// (in either orientation) collapse; self-loops must be filtered by the caller.
    pub fn from_edges<I>(n: usize, edges: I) -> Graph
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            debug_assert!(u != v, "self-loop {u}");
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let degree_sum: usize = adjacency.iter().map(Vec::len).sum();
        let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        Graph {
            adjacency,
            edge_count: degree_sum / 2,
            max_degree,
        }
    }

    pub fn empty(n: usize) -> Graph {
        Graph::from_edges(n, std::iter::empty())
    }

    pub fn complete(n: usize) -> Result<Graph, GraphError> {
        if n == 0 {
            return Err(GraphError::InvalidSize(
                "complete graph needs n >= 1".into(),
            ));
        }
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Ok(Graph::from_edges(n, edges))
    }

    /// `count` vertex-disjoint copies of `K_size`; clique `i` occupies
    /// vertices `i*size .. (i+1)*size`.
    pub fn disjoint_cliques(count: usize, size: usize) -> Result<Graph, GraphError> {
        if count == 0 || size == 0 {
            return Err(GraphError::InvalidSize(format!(
                "disjoint cliques need count, size >= 1 (got {count}, {size})"
            )));
        }
        let edges = (0..count).flat_map(move |c| {
            let base = c * size;
            (0..size).flat_map(move |u| (u + 1..size).map(move |v| (base + u, base + v)))
        });
        Ok(Graph::from_edges(count * size, edges))
    }

    /// `K_{a,b}` with parts `0..a` and `a..a+b`.
    pub fn complete_bipartite(a: usize, b: usize) -> Result<Graph, GraphError> {
        if a == 0 || b == 0 {
            return Err(GraphError::InvalidSize(format!(
                "complete bipartite needs both parts >= 1 (got {a}, {b})"
            )));
        }
        let edges = (0..a).flat_map(move |u| (a..a + b).map(move |v| (u, v)));
        Ok(Graph::from_edges(a + b, edges))
    }

    pub fn cycle(n: usize) -> Result<Graph, GraphError> {
        if n < 3 {
            return Err(GraphError::InvalidSize(format!(
                "cycle needs n >= 3 (got {n})"
            )));
        }
        Ok(Graph::from_edges(n, (0..n).map(|u| (u, (u + 1) % n))))
    }

    /// G(n, p). Pairs are visited in lexicographic order with one Bernoulli
    /// draw each from a ChaCha8 stream seeded with `seed`.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(GraphError::InvalidProbability(p));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        Ok(Graph::from_edges(n, edges))
    }

    /// Parses whitespace-separated `u v` lines. Blank lines and `#` comments
    /// are skipped, except for the [`VERTICES_DIRECTIVE`] comment which sets a
    /// lower bound on the vertex count.
    pub fn from_edge_list(text: &str) -> Result<Graph, GraphError> {
        let mut edges = Vec::new();
        let mut n = 0usize;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix(VERTICES_DIRECTIVE) {
                let token = rest.trim();
                let count = token.parse::<usize>().map_err(|_| GraphError::BadToken {
                    line: line_no,
                    token: token.to_string(),
                })?;
                n = n.max(count);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 2 {
                return Err(GraphError::BadArity {
                    line: line_no,
                    found: tokens.len(),
                });
            }
            let parse = |t: &str| {
                t.parse::<usize>().map_err(|_| GraphError::BadToken {
                    line: line_no,
                    token: t.to_string(),
                })
            };
            let u = parse(tokens[0])?;
            let v = parse(tokens[1])?;
            if u == v {
                return Err(GraphError::SelfLoop {
                    line: line_no,
                    vertex: u,
                });
            }
            n = n.max(u + 1).max(v + 1);
            edges.push((u, v));
        }
        Ok(Graph::from_edges(n, edges))
    }

    /// Edge-list rendering accepted by [`Graph::from_edge_list`]: a vertex
    /// count directive, then one `u v` line per edge with `u < v`.
    pub fn render_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", VERTICES_DIRECTIVE, self.n());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }
}
