//! Pseudospectral simulation of the pseudo-relativistic Hartree equation
//! `i d_t psi = (<grad> + w * |psi|^2) psi`.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod initial;
pub mod observables;
pub mod potentials;
pub mod scattering;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{GridSpec, Representation, SpectralField};
