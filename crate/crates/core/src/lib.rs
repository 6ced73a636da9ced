//! Stochastic proximal splitting.
//!
//! This crate carries the numerical side of `stoprox`: parametric step and
//! relaxation schedules with their convergence-condition validators, proximity
//! operators, linear operators (discrete gradient and Fourier-diagonal
//! convolutions), a seeded stochastic blur observation model, gradient oracles
//! and the two solvers:
//!
//! - [`solvers::fb_step`] / [`solvers::fb_solve`]: relaxed stochastic
//!   forward-backward iteration with inexact gradients and inexact proximity
//!   operators.
//! - [`solvers::pd_step`] / [`solvers::pd_solve`]: relaxed stochastic
//!   primal-dual splitting for `f + sum_k g_k(L_k x) + h`.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and the
//! restoration pipeline live in the `stoprox` crate.
#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod degradation;
pub mod diagnostics;
mod error;
pub mod fft;
pub mod image;
pub mod linops;
pub mod oracles;
pub mod prox;
pub mod schedules;
pub mod solvers;
pub mod vector;

pub use error::{Error, Result};
pub use image::Image;
