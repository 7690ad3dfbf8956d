//! Experiment runner plumbing behind the `yardsale` binary: manifest
//! resolution, experiment dispatch, and table emission.

pub mod experiment;
pub mod manifest;
pub mod output;

/// Process exit codes.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const RUNTIME: i32 = 3;
    pub const UNCONVERGED: i32 = 4;
}
