//! Two-channel diatomic wavepacket dynamics under chirped laser pulses whose
//! (intensity, wavelength) path encircles an exceptional point, together
//! with the non-Hermitian Floquet analysis that predicts adiabatic flips.
//!
//! All internal quantities are in atomic units; see [`units`].

pub mod bound_states;
pub mod config;
pub mod error;
pub mod floquet;
pub mod grid;
pub mod linalg;
pub mod observables;
pub mod potentials;
pub mod propagator;
pub mod pulse;
pub mod runner;
pub mod units;

pub use error::{Error, Result};
