//! Bloch spectra of three-dimensional periodic elastic crystals with a high-contrast
//! inclusion: plane-wave Galerkin assembly, structural spectra, high-contrast limits,
//! first-order perturbation coefficients and convergence radii.

pub mod assembly;
pub mod crystal;
pub mod dispersion;
pub mod eigen;
pub mod enrichment;
pub mod error;
pub mod fd;
pub mod fourier;
pub mod limit;
pub mod model;
pub mod quad;
pub mod series;
pub mod structural;
pub mod sweep;

pub use error::{Error, Result};
