//! Command-line front end: config parsing, bundled examples, sweep harness,
//! CSV trace emission, and structured run reports.

pub mod accept;
pub mod config;
pub mod fixtures;
pub mod report;
pub mod runner;
pub mod sweep;
