//! File formats, corpus preprocessing and parallel drivers around
//! [`bayesteach_core`].
//!
//! The core crate is `no_std` and single-threaded. This crate adds the
//! pieces that need an operating system: reading raw corpora, the JSON and
//! CSV formats the command-line tool reads and writes, and rayon fan-out that
//! reproduces serial results exactly.

pub mod corpus;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod parallel;

pub use error::{Error, Result};
