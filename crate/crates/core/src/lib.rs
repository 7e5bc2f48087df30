//! Controllability Gramians of infinite lattice networks.
//!
//! Entries come from spectral integrals over the lattice function
//! `phi(k) = sum psi(n) exp(-i n.k)`; the one-dimensional nearest-neighbor
//! chain adds closed forms. A truncated finite lattice serves as an
//! independent check.

pub mod error;
pub mod lattice;
pub mod metrics;
pub mod nn1d;
pub mod oracle;
pub mod placement;
pub mod quadrature;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use lattice::{build_lattice_spec, is_stable, lattice_function, LatticeSpec, NodeIndex, SpectralPoint, StabilityReport};
pub use metrics::OutputGramian;
pub use nn1d::NN1DParams;
pub use quadrature::{QuadratureConfig, Scheme};
pub use spectral::{gramian_entry_ss, gramian_entry_t, output_gramian, DriverSet, GramianMode, SpectralGramian, TargetSet};
