//! Smoothing-spline preprocessing for sampled functional data.
//!
//! Curves observed on a shared grid of `[0, 1]` are mapped to smoothing
//! splines in the Sobolev space `H^m` (`m` = 1 or 2). The `H^m` inner product
//! between two fitted splines is a quadratic form `u^T M v` on the sampled
//! vectors, and the Cholesky factor `R` of `M` turns that metric into the
//! Euclidean one: feeding `R x` to any distance- or inner-product-based learner
//! makes it work on the `m`-th derivatives of the smoothed curves, without
//! discarding information.
//!
//! Layout:
//! - [`grid`], [`data`]: sampling grids, datasets, CSV ingestion, noise and
//!   synthetic generators.
//! - [`rkhs`]: closed-form reproducing kernels and the polynomial null space.
//! - [`spline`]: the spline operator system, fits, the `M` metric, its
//!   Cholesky transform and leave-one-out selection of the smoothing level.
//! - [`learners`]: kernel ridge regression, Nadaraya–Watson, k-NN,
//!   finite-difference derivatives and grid-search tuning.
//! - [`harness`]: repeated random splits, preprocessing variants, paired
//!   Student tests and method ranking.

pub mod data;
pub mod error;
pub mod grid;
pub mod harness;
pub mod learners;
pub mod rkhs;
pub mod rng;
pub mod spline;
pub mod stats;

#[cfg(test)]
mod testutil;

pub use data::{FunctionalDataset, SampledFunction, Task};
pub use error::{Error, Result};
pub use grid::{MeshStats, SamplingGrid};
pub use rkhs::{Order, PolyBasis};
pub use spline::{SplineFit, SplineSystem};
