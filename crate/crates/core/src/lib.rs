//! Observers for the compressible Navier-Stokes equations.
//!
//! * [`spectral`]: closed-form mode analysis and feedback kernel design.
//! * [`solver`]: periodic 1D finite-volume solver (nonlinear and linearized).
//! * [`observer`]: truth/observer pairs with Fourier-space feedback.
//! * [`analysis`]: decay rates, periods and amplitudes from error series.
//! * [`experiment`]: configurable scenarios and CSV output.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod fourier;
pub mod observer;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
