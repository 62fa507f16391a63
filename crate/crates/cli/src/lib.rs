//! Driver for the `fltv` command-line tool.

pub mod checkpoint;
pub mod commands;

pub use commands::{
    cmd_coeffs, cmd_identity, cmd_oracle, cmd_verify, cmd_wieferich, Outcome, RunConfig,
};
