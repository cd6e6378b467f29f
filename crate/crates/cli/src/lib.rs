//! Experiment harness for the dgms solver: configuration, studies and their outputs.

pub mod app;
pub mod config;
pub mod error;
pub mod output;
pub mod study;
pub mod verify;

pub use config::StudyConfig;
pub use error::CliError;
