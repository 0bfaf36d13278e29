//! Manifest-driven front end to `cdch-core`.

pub mod manifest;
pub mod report;
pub mod run;
