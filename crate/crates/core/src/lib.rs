pub mod error;
pub mod exec;
pub mod graph;
pub mod greta;
pub mod harness;
pub mod nodeflow;
pub mod timing;

pub use error::{Error, Result};
