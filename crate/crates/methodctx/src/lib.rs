//! File formats, checkpoints and the `methodctx` command line over
//! [`methodctx_core`].

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
pub mod corpus_io;
pub mod error;

pub use cli::run;
pub use error::CliError;
