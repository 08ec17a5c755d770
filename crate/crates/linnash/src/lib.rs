//! Experiment harness on top of `linnash-core`: configs, parallel runs,
//! CSV/JSON/SVG output and numerical validation.

pub use linnash_core as core;

pub mod config;
pub mod instance;
pub mod output;
pub mod runner;
pub mod scatter;
pub mod svg;
pub mod validate;
