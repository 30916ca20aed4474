//! Computational toolkit for the lattice Widom-Rowlinson model.
//!
//! Spins take values in {-1, 0, +1}; opposite signs on neighbouring sites are
//! either forbidden (hard-core) or penalised by an energy `beta` per bond
//! (soft-core). The crate evaluates Dobrushin uniqueness entries, the Peierls
//! certificate, transition times of the independent spin-flip dynamics and the
//! cluster representation of the time-evolved hard-core model, and samples
//! equilibrium states with a heat-bath chain.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod dobrushin;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod model;
pub mod output;
pub mod peierls;
pub mod sampler;
mod union_find;

pub use error::{Error, Result};
pub use lattice::{BondSet, LatticeBox, Site};
pub use model::{AprioriMeasure, Coupling, ModelParams, Spin, SpinConfiguration, Variant};
