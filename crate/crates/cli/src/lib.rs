//! Experiment runner behind the `qelab` binary.

pub mod commands;
pub mod config;
