//! Performance engine for multi-layer aerial (UAV) networks.
//!
//! Two independent routes to the successful transmission probability (STP)
//! of a ground receiver served by stacked Poisson layers of UAVs:
//!
//! * [`analysis`] evaluates the stochastic-geometry expressions (nearest
//!   distance laws, association probabilities, interference Laplace
//!   transforms, conditional and total STP, optimal-density bound) by
//!   nested adaptive quadrature.
//! * [`montecarlo`] samples finite-window PPP snapshots, applies the
//!   strongest-average-power association rule and counts SINR successes.
//!
//! [`sweep`] drives either engine over parameter grids. Data-parallel loops
//! (Monte Carlo trials, grid points) run on rayon when the `parallel`
//! feature is enabled and fall back to a sequential loop otherwise.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod exec;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod sweep;

pub use error::{Error, Result};
pub use exec::Exec;
pub use model::{ChannelParams, Environment, LayerSpec, LinkClass, NetworkSpec};
