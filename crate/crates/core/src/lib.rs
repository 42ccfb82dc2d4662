//! Identification of single-coordinate nonlinear oscillators from free
//! responses: damping from the energy balance at zero-displacement instants,
//! stiffness from the reconstructed Lagrangian, plus a sparse-regression
//! baseline, simulation, preprocessing and spectral diagnostics.

pub mod basis;
pub mod csvio;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod lstsq;
pub mod modelfile;
pub mod phase1;
pub mod phase2;
pub mod pipeline;
pub mod preprocess;
pub mod response;
pub mod score;
pub mod signal;
pub mod sindy;

pub use error::{Error, ErrorClass, Result};
