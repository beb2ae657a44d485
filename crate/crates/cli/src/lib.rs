//! Command-line tool, file formats and threaded execution for `simex-core`.

pub mod builtins;
pub mod cli;
pub mod correct;
pub mod error;
pub mod harness;
pub mod io;
pub mod parallel;
