//! Config ingestion, result CSVs and run manifests.

mod audit;
mod config;
mod export;
mod manifest;

pub use audit::*;
pub use config::*;
pub use export::*;
pub use manifest::*;
