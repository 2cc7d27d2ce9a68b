//! Method-name consistency checking and name suggestion from four naming
//! contexts (internal, interaction, sibling, enclosing).
//!
//! The crate is `no_std` with `alloc`; file formats, IO and the command line
//! live in the `methodctx` crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod callgraph;
pub mod context;
pub mod corpus;
pub mod embedding;
pub mod eval;
pub mod java;
pub mod linalg;
pub mod model;
pub mod subtoken;
pub mod synthetic;
pub mod tasks;

pub use callgraph::CallGraph;
pub use context::{ContextBundle, ContextKind, Mode, TokenSeq};
pub use corpus::{ClassRecord, Corpus, MethodRecord};
pub use subtoken::{recompose, split_identifier, SubToken};
