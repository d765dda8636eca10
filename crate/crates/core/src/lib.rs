//! Scattering delays of Gaussian wave packets by zero-range, rectangular and
//! radial potentials, with weak-value and Larmor-clock analyses.

pub mod amplitudes;
pub mod error;
pub mod larmor;
pub mod observables;
pub mod propagator;
pub mod wavepackets;
pub mod weakvalues;

pub use error::{Error, Result};
