//! Pfaffian engine for planar Ising graphs with fixed boundary spins.

pub mod fkt;
pub mod graph;
pub mod linalg;
pub mod nested;

pub use fkt::{fixed_lattice_log_z, fixed_spin_graph, lattice_links, BoundaryUpdater, FktEngine, UpdateRoute};
pub use graph::{ExpandedGraph, SpinGraph};
pub use linalg::{log_det, log_pfaffian};
