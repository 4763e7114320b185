//! Graver-basis moves for toric ideals of graphs and Metropolis-Hastings
//! sampling over fibers of graphs with a fixed degree sequence.
//!
//! The crate is organised around the pieces of an exact conditional test of
//! the beta model:
//!
//! - [`graph_model`]: underlying graphs, edge vectors, moves and capacities.
//! - [`walks`]: even closed walks, their moves, and the primitivity test.
//! - [`graver_gen`]: random Graver elements built from weighted trees.
//! - [`fiber_mcmc`]: the fiber random walk and p-value estimation.
//! - [`statistics`]: beta-model MLE, Pearson chi-square, clustering, triangles.
//! - [`oracles`]: brute-force ground truth for small instances.
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod error;
pub mod fiber_mcmc;
pub mod graph_model;
pub mod graver_gen;
pub mod oracles;
pub mod statistics;
pub mod walks;

pub use error::{Error, Result};
pub use graph_model::{Capacities, DegreeSequence, Edge, EdgeVector, Graph, Move};
pub use walks::ClosedWalk;
