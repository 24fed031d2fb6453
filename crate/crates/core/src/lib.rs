//! Bloch band structure of one-dimensional periodic potentials with finitely
//! many Fourier harmonics, and the probability that a Bloch wave packet's
//! momentum is positive.
//!
//! All kernels work in dimensionless units (`q = 1`, energies in
//! `ħ²q²/(2μ)`, times in `2μ/(ħq²)`); see [`potential`].

pub mod bands;
pub mod central_eq;
pub mod error;
pub mod oracle;
pub mod positivity;
pub mod potential;
mod quad;
pub mod wavepacket;

pub use error::{Error, Result};
pub use bands::{compute_bands, BandTable, BrillouinGrid};
pub use potential::{FourierPotential, Units};
pub use wavepacket::QuasiMomentumAmplitude;
