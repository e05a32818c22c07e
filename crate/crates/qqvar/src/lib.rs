//! Decomposition of estimated Value-at-Risk error under multivariate
//! Student-t returns.
//!
//! When both the portfolio direction ŵ and the quantile are estimated, the
//! error q̂_α(ŵ) − q_α(w0) mixes three effects. This crate computes the exact
//! additive split into a directional term (population quantile movement from
//! the direction change), an empirical term (cdf fluctuation at the fixed
//! direction over the local density), and the higher-order remainder — plus
//! the machinery needed to study it:
//!
//! - [`dist`]: multivariate-t sampling and exact projected-t pdf/cdf/quantile,
//! - [`empirical`]: weight-indexed empirical cdfs, quantiles, and
//!   symmetric-difference counts over half-spaces,
//! - [`decomposition`]: the D1/D2/D3 split, tangent-space construction, and
//!   first-order checks,
//! - [`bounds`]: symmetric-difference bound evaluation and verification,
//! - [`monte_carlo`]: the seeded, thread-invariant replication harness and
//!   table emission,
//! - [`inference`]: asymptotic confidence intervals for projected quantiles,
//! - [`cli`]: the `qqvar` binary's commands.
//!
//! Start with the runnable examples: `cargo run --release --example decompose`
//! walks through a single decomposition end to end.

// validation uses `!(x > 0.0)` so NaN fails closed
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod decomposition;
pub mod dist;
pub mod empirical;
pub mod error;
pub mod inference;
mod linalg;
pub mod monte_carlo;
pub mod report;
pub mod seeding;
pub mod special;

pub use decomposition::{QQDecomposition, TangentBasis};
pub use dist::{MvtModel, ProjectedT, ReturnSample};
pub use empirical::{HalfSpace, PartitionCounts, ProjectedSample};
pub use error::{Error, Result};
pub use inference::{DensityMethod, QuantileCI};
pub use monte_carlo::{McCellSummary, RateFit, SimConfig};
