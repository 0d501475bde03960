//! Non-unitary Floquet transverse-field Ising chains with complex couplings.
//!
//! The drive `U_F = exp(i J Σ X_j X_{j+1}) exp(i h Σ Z_j)` is free-fermion
//! after a Jordan–Wigner map, so most of the crate works with 2L×2L Majorana
//! matrices. [`oracle`] keeps a dense spin simulator for cross-checks at small L.

pub mod cft;
pub mod config;
pub mod continuous;
pub mod entanglement;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{
    BoundaryCondition, InitialState, LatticeSpec, ModelParams, PhaseLabel, QuenchConfig, SubsystemSpec, TeePartition,
    Units,
};
