pub mod cli;
pub mod density;
pub mod error;
pub mod geometry;
pub mod oracles;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod stereology;

pub use error::{Error, Result};
