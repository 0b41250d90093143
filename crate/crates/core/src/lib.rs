pub mod engine;
pub mod error;
pub mod exact;
pub mod gof;
pub mod harness;
pub mod kappa;
pub mod ldp;
pub mod limits;
pub mod numeric;
pub mod pcf;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod strategy;

pub use error::{Error, Result};
