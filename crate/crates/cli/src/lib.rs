//! File formats and subcommands behind the `jointspec` binary.

pub mod commands;
pub mod io;
