//! Experiment runner for the `ura-core` simulator: scenario files, on-disk
//! formats, run manifests and the `ura` command line.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod figures;
pub mod formats;
pub mod manifest;
pub mod validate;
