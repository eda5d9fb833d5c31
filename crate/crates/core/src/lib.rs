pub mod covertime;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod geometry;
pub mod ingest;
pub mod process;
pub mod transport;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
