//! Distributed cell-transmission traffic simulator: file formats,
//! transports, run orchestration and the `otmd` command line.

pub mod cli;
pub mod format;
pub mod runner;
pub mod transport;
