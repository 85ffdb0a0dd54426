pub mod bias;
pub mod cohort;
pub mod embedding;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod gan;
pub mod lstm;
pub mod metrics;
pub mod nn;
pub mod optim;
pub mod pipeline;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
