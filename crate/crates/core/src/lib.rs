//! Density matrix downfolding at desk scale.
//!
//! Exact diagonalization of small Hubbard and Heisenberg lattices, the
//! downfolding regression and its verdict loop, error propagation to fitted
//! couplings, simulation of the low-energy projector with amplitude
//! amplification, and logical and physical fault-tolerant cost models.

// `!(x > 0.0)` is the NaN-rejecting form used throughout argument checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dmd;
pub mod eigen;
pub mod error;
pub mod lattice;
pub mod logical;
pub mod physical;
pub mod projector;
pub mod propagation;
pub mod sparse;

// Lets the shared suites in `tests/common` name this crate by its path.
#[cfg(test)]
extern crate self as dmd_core;
#[cfg(test)]
#[allow(dead_code)]
#[path = "../tests/common/props.rs"]
mod props;
#[cfg(test)]
mod property_tests;

pub use eigen::{diagonalize, diagonalize_lowest, SpectralDecomposition};
pub use error::{Error, Result};
pub use lattice::{
    build_descriptor, build_heisenberg, build_hubbard, expectation, product_state, DescriptorKind, FockBasis,
    LatticeSpec, ManyBodyOperator, Sector, Wavefunction,
};
pub use dmd::{discover, fit_linear, fit_samples, DescriptorPool, DiscoverConfig, RegressionFit, SampleRecord, VerdictCase};
pub use logical::{HubbardPreset, LogicalBudget, Method};
pub use physical::{physical_estimate, HardwareModel, Layout, PhysicalBudget};
pub use projector::{build_sign_poly, spectral_projector, ProjectorWindow, SignPolynomial};
pub use propagation::{run_truncation_sweep, truncate_b_bits, ErrorBudget};
