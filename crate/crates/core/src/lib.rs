pub mod allocator;
pub mod baselines;
pub mod comparator;
pub mod error;
pub mod exp3int;
pub mod expgrad;
pub mod harness;
pub mod output;
pub mod rng;
pub mod rounding;
pub mod simulator;
pub mod types;
pub mod zbpl;

pub use error::{Error, Result};
