//! Tensor-network contraction of semi-infinite strips.

pub mod cache;
pub mod dense;
pub mod factor;
pub mod mps;
pub mod strip;

pub use factor::{factorize_bond, factorize_pair, BondFactorization};
pub use mps::{Mpo, Mps};
pub use strip::{
    dominant_boundary, dominant_boundary_from, heat_capacity, mi_strip_exact, mi_strip_scan, partial_partition,
    weight_and_logterm, BoundaryState, PowerOptions, StripMi, TransferOperator,
};
