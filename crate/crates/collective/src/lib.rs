//! Collective (fully connected) spin-1/2 models that commute with the total
//! spin.
//!
//! * [`multiplicity`], [`blocks`], [`thermal`], [`ground`]: block
//!   decomposition, thermal observables and the zero-temperature state.
//! * [`meanfield`]: thermodynamic-limit phase boundaries.
//! * [`classical`]: the field-free limit via binomial sums and asymptotics.
//! * [`cg`], [`cgmi`]: recoupling coefficients and subsystem entropies.
//! * [`dense`]: full Hilbert-space oracle for small systems.

pub mod blocks;
pub mod cg;
pub mod cgmi;
pub mod classical;
pub mod dense;
pub mod ground;
pub mod meanfield;
pub mod model;
pub mod multiplicity;
pub mod scaling;
pub mod thermal;

pub use cgmi::{mutual_information, BipartitionSpec, CollectiveMi};
pub use model::{CollectiveModelSpec, Family};
pub use thermal::{partition_and_observables, ThermalObservables};
