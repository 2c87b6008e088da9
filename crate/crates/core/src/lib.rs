//! Simulation and exact auditing of decentralized (Δ+1)-coloring dynamics.
//!
//! - [`graph`]: graph families and the edge-list format.
//! - [`state`]: colorings with incrementally tracked conflict quantities and potential.
//! - [`dynamics`]: the uniform, component-view, persistent and parallel processes.
//! - [`audit`]: exact one-step expectations, drift inequalities and bound calculators.
//! - [`harness`]: seeded ensembles, statistics, scaling fits and experiment drivers.
//! - [`cli`]: the `colorsim` command-line front end.

pub mod audit;
pub mod cli;
pub mod dynamics;
pub mod graph;
pub mod harness;
pub mod state;

pub use dynamics::{RunResult, RunSpec, Variant};
pub use graph::Graph;
pub use state::{Color, ColoringState};
