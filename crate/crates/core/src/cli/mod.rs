//! Experiment harness behind the `uccrl` binary.

pub mod config;
pub mod harness;
pub mod summary;

pub use harness::{main_with_args, ExitCode};
