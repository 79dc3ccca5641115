//! Experiment runner for modular-robot evolution: configuration, CSV
//! artifacts, analysis tables and figures.

pub mod analyze;
pub mod artifacts;
pub mod config;
pub mod oracle;
pub mod render;
