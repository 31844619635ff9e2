//! Pipeline stages and subcommands of the `roadgrowth` tool.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod pipeline;
