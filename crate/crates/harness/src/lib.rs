//! Experiment runner: test-function families, the full decomposition
//! pipeline per `(f, α)`, endpoint ratios and CSV reports.

pub mod families;
pub mod level_split;
pub mod pipeline;
pub mod ratios;
pub mod report;
pub mod spec;
