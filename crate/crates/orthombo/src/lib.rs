//! Diffusion-generated motion of orthogonal matrix-valued fields on flat tori
//! and closed surfaces.
//!
//! A field assigns an `n × n` orthogonal matrix (n ≤ 3) to every sample point.
//! One iteration diffuses every matrix entry for time τ and projects each
//! point back onto O(n); interfaces between the SO(n) and SO⁻(n) regions then
//! move approximately by mean curvature. The volume-constrained variant keeps
//! the measure of the SO(n) region fixed.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod cpm_surface;
pub mod error;
mod fft;
pub mod field;
pub mod matgeom;
pub mod mbo;
pub mod nufft;
pub mod scalar;
pub mod scenarios;
pub mod snapshot;
pub mod torus_heat;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = matgeom::SmallMatrix<f64>;
pub type Matrix32 = matgeom::SmallMatrix<f32>;
pub type Field = field::MatrixField<f64>;
pub type Field32 = field::MatrixField<f32>;
pub type Grid = field::GridSpec<f64>;
pub type Grid32 = field::GridSpec<f32>;
