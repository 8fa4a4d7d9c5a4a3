//! Single-excitation physics of `N` disordered two-level emitters sharing one
//! lossless cavity mode.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] – 1D chains and cubic lattices, neighbours and displacements.
//! * [`model`] – parameters, disorder sampling and the `(N+1)×(N+1)` Hamiltonian.
//! * [`spectral`] – dense and arrowhead eigensolvers, photon weights, dark states.
//! * [`localization`] – IPR, infinite-time probabilities, eigenstate profiles.
//! * [`levelstats`] – spacing statistics and dark-state deviations.
//! * [`perturbation`] – closed-form perturbative predictions.
//! * [`dynamics`] – unitary propagation, mean squared displacement, `Q(t)`.
//! * [`transport`] – boundary-driven Lindblad dynamics and currents.
//! * [`ensemble`] – deterministic parallel disorder averaging.

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod lattice;
pub mod levelstats;
pub mod localization;
pub mod model;
pub mod perturbation;
pub mod spectral;
pub mod transport;

pub mod numeric;
pub mod ode;

pub use error::{Error, Result};
pub use lattice::{Boundary, LatticeSpec};
pub use model::{DisorderRealization, HamiltonianMatrix, ModelParams};
pub use spectral::SpectralDecomposition;
