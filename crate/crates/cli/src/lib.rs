//! Scenario files, commands and bundled expectations behind the `invlab` binary.

pub mod bundled;
pub mod commands;
pub mod config;
pub mod record;
