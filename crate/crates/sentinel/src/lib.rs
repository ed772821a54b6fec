//! File formats, solver processes, configuration and the command-line front
//! end for the `tree-sentinel-core` verifier.

pub mod bench;
pub mod cli;
pub mod config;
pub mod format;
pub mod report;
pub mod solver;
