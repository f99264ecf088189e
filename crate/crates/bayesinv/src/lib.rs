//! Experiment runner for `bayesinv-core`: configuration files, CSV/PGM/JSON
//! artifacts, subprocess restorators and the `list` / `run` / `check`
//! commands.

pub mod checks;
pub mod config;
pub mod external;
pub mod formats;
pub mod runner;
