//! Time evolution of a particle leaking out of a square well closed by a
//! hard wall on one side and a delta-function barrier on the other.
//!
//! All quantities are dimensionless (see [`model`]).

pub mod asymptotics;
mod contour;
pub mod observables;
pub mod error;
pub mod model;
pub mod quad;
pub mod resonances;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{make_config, Definition, Method, ModelConfig, SurvivalPoint};
