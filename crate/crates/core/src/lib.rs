//! Simulation and analysis toolkit for cavity-enhanced single rare-earth-ion
//! photoluminescence experiments.
//!
//! The crate is split along the physics of the experiment:
//!
//! - [`physics`]: static device and ensemble physics (mode volume, Purcell
//!   factor, inhomogeneous line, accessible ion counting, ensemble sampling).
//! - [`emitter`]: per-ion dynamics (enhanced lifetime, Fourier limit, Stark
//!   shift, spectral diffusion).
//! - [`detection`]: pulsed-excitation Monte-Carlo engine and the single-ion
//!   experiments built on it (decay, spectrum, HBT, Stark scan).
//! - [`spectroscopy`]: ensemble hole burning and photon echoes.
//! - [`fitting`]: damped Gauss-Newton least squares and the model zoo.
//!
//! Internal units are SI throughout (Hz, s, m³) except optical geometry,
//! which uses µm and µm³.

pub mod detection;
pub mod emitter;
mod error;
pub mod fitting;
pub mod physics;
pub mod quad;
pub mod rng;
pub mod spectroscopy;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
