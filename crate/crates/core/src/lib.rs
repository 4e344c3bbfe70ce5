//! Word-closure output-relation checker for metamorphic testing of machine
//! translation.

pub mod align;
pub mod cli;
pub mod closure;
pub mod comparator;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod similarity;
pub mod synth;
pub mod treebank;

pub use error::{Error, Result};
