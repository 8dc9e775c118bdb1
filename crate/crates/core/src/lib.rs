pub mod correction;
pub mod data;
pub mod debias;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod nn;
pub mod privacy;
pub mod rng;

pub use error::{Error, Result};
