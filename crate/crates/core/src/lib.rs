//! Conformal Ricci flow on the plane, `g(t) = e^{2u} |dx|²`, evolved as the
//! logarithmic fast-diffusion equation `∂t u = e^{-2u} Δu` on a uniform grid.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`]: grids, fields, boundary handling and finite-difference stencils;
//! - [`conformal`]: curvature and the derived quantities of a conformal metric;
//! - [`exact`]: closed-form solutions and preset initial data;
//! - [`flow`]: time stepping with stability control and observers;
//! - [`analysis`]: diagnostic series and the checks run on them;
//! - [`geometry`]: geodesic distance, level-set lengths, aperture;
//! - [`cli`]: config files, run directories and the command implementations.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod conformal;
pub mod error;
pub mod exact;
mod fit;
pub mod flow;
pub mod geometry;
pub mod grid;

pub use error::{Error, Result};
