//! Optimal exercise boundaries for American options written on an asset
//! modelled as a Brownian bridge pinned at the strike.
//!
//! * [`bridge`]: the process model, its transition moments and exact path sampling.
//! * [`boundary`]: the free-boundary integral equation solver, closed form,
//!   put/call reflection, volatility rescaling and the value function.
//! * [`inference`]: volatility MLE and delta-method confidence curves.
//! * [`simulation`]: stopping rules and the Monte Carlo payoff study.
//! * [`market_data`]: strike-normalised real paths, pinning diagnostics and
//!   profit aggregation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod bridge;
pub mod error;
pub mod grid;
pub mod inference;
pub mod market_data;
pub mod normal;
pub mod path;
pub mod simulation;
pub mod spline;

pub use boundary::{Boundary, Side, SolverConfig};
pub use bridge::BridgeSpec;
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use path::PricePath;
