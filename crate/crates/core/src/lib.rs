//! Phase-space density evolution of two-level particles driven by coherent
//! laser pulses, computed exactly from the density matrix and approximately
//! from an ensemble of semiclassical test particles.

pub mod error;
pub mod harness;
pub mod lattice;
pub mod linalg;
pub mod metrics;
pub mod phase_space;
pub mod quantum;
pub mod semiclassical;

pub use error::{Error, Result};
