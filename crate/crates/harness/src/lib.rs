//! Scenario runner, output files and pinned checks for `nls-virial`.

pub mod config;
pub mod output;
pub mod run;
pub mod suites;
