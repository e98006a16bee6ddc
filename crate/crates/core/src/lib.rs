//! Lattice spin models and the engines that compute mutual information
//! between regions of them.
//!
//! * [`model`], [`logweight`], [`entropy`], [`brute`]: shared types and
//!   enumeration oracles.
//! * [`tensornet`]: boundary-state contraction for semi-infinite strips.
//! * [`fermigauss`]: Gaussian fermionic circuit for fixed-boundary Ising
//!   partition functions.
//! * [`pfaffian`]: Pfaffian evaluation on decorated planar graphs.
//! * [`sampler`]: Metropolis sampling over boundary configurations.
//! * [`clusters`]: Swendsen-Wang cluster statistics.

pub mod brute;
pub mod clusters;
pub mod entropy;
pub mod error;
pub mod fermigauss;
pub mod logweight;
pub mod model;
pub mod pfaffian;
pub mod sampler;
pub mod tensornet;

pub use error::{Error, Result};
pub use logweight::LogWeight;
pub use model::{Bipartition, BoundaryConfig, Columns, Couplings, LatticeModelSpec, ModelKind, VerticalBc};
