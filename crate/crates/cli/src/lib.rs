//! Subcommand implementations for the `emosuggest` binary.

pub mod commands;
pub mod demo;
