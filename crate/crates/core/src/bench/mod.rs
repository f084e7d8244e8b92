//! Experiment runners behind the `ebm-bench` binary.

pub mod cli;
pub mod config;
pub mod data;
pub mod eval;
pub mod experiments;
pub mod heatmap;
