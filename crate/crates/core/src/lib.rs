pub mod cli;
pub mod coupled_solver;
pub mod error;
pub mod estimators;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod verify;

pub use error::{Error, Result};
