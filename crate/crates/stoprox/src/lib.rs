//! Files, configuration and the restoration pipeline around `stoprox-core`.
//!
//! - [`pgm`] and [`spf1`]: 8-bit PGM and lossless `f64` images.
//! - [`manifest`]: persisted observation streams.
//! - [`config`]: the flat `key=value` run configuration.
//! - [`pipeline`]: `simulate`, `restore` and `validate`.
//! - [`bench`]: benchmark problems with known answers.

pub mod bench;
pub mod config;
mod error;
pub mod manifest;
pub mod pgm;
pub mod pipeline;
pub mod spf1;
pub mod trace_csv;

pub use error::{Error, Result};
pub use stoprox_core as core;
