//! Configuration, verification suite and random-welding pipeline behind the
//! `confweld` binary.

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod stats;
pub mod suite;

pub use config::{Command, RunConfig};
pub use error::CliError;
pub use manifest::{CheckRecord, Measurement, RunManifest};
pub use pipeline::{pipeline_zipper, write_dataset, PipelineReport};
pub use suite::verify_suite;
