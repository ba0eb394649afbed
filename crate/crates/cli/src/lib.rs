//! Command-line driver, snapshot persistence, stats export and SVG rendering
//! for the point-line closure engine.

pub mod cli;
pub mod config;
pub mod render;
pub mod run;
pub mod snapshot;
pub mod stats;
