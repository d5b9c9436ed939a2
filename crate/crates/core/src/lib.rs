//! Pseudo-spectral simulation of the one-dimensional mass-critical
//! stochastic nonlinear Schrödinger equation
//!
//! ```text
//! i∂_t u + Δu = ±|u|⁴u + u∘Ẇ,   x ∈ ℝ (periodised),
//! ```
//!
//! with conservative (Stratonovich) multiplicative noise, together with its
//! truncated subcritical approximations and the measurement drivers that go
//! with them.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod noise;
pub mod norms;
pub mod pathsim;
pub mod serde_util;
pub mod validation;

pub use error::{Result, SnlsError};
