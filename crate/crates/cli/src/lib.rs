//! Library surface of the CLI: command implementations, shared plumbing,
//! and the report schema validator. The `fmp` binary is a thin dispatcher
//! over [`commands`].

pub mod commands;
pub mod common;
pub mod schema;
