//! File formats, training, evaluation and the command line around
//! [`textscene_core`].

pub use textscene_core as core;

pub mod checkpoint;
pub mod cli;
pub mod corpus_io;
pub mod error;
pub mod eval;
pub mod render_io;
pub mod train;

pub use error::{Error, Result};
