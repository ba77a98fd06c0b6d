//! Social learning with AI aggregators on weighted networks.
//!
//! Agents hold beliefs about an unknown state and repeatedly average their
//! neighbors' beliefs through a row-stochastic trust matrix. An aggregator
//! can be layered on top: it trains on a weighted average of current
//! beliefs and feeds its (exponentially smoothed) output back into the
//! population. This crate provides:
//!
//! - [`linalg`]: stochastic-matrix primitives, from validation and
//!   primitivity tests through stationary distributions to the fundamental
//!   matrix and the rank-structured stationary-distribution update;
//! - [`dynamics`]: brute-force simulators for all three architectures
//!   (none, global, local) plus a seeded two-island network sampler,
//!   the oracles the closed forms are tested against;
//! - [`consensus`]: the closed-form consensus with a global aggregator,
//!   computed by two independent routes that must agree;
//! - [`two_island`]: all closed forms on the expected two-island
//!   environment, analytic derivatives of the learning gap, and the
//!   homophily regime classifier;
//! - [`robust`]: admissible training-weight intervals, the robust
//!   improvement set over a homophily range, and the updating-speed
//!   threshold separating empty from positive-measure robust sets;
//! - [`local`]: topic-local aggregators, their gap vector, and the
//!   comparisons against no aggregation and against a shared global
//!   design.
//!
//! All operations are pure functions of their inputs; values are immutable
//! after construction and safe to share across threads.

// index-based loops mirror the matrix math and stay
#![allow(clippy::needless_range_loop)]

pub mod consensus;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod local;
pub mod robust;
pub mod two_island;

pub use error::{Error, Result};
pub use linalg::{FundamentalMatrix, Matrix, RowStochasticMatrix, StationaryDistribution};
