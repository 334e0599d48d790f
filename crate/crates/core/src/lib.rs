//! Dirichlet-process clutter rejection for single-target tracking.
//!
//! Each scan of position measurements is partitioned by a collapsed Gibbs
//! sampler under a joint Dirichlet-process prior (one process for clutter,
//! one for the target conditioned on the clutter parameters). Only the
//! cluster attributed to the target is passed to the Bayes filter.
//!
//! The crate also carries the pieces needed to benchmark the method:
//! a cluttered-scan simulator, nearest-neighbour and PDA baselines, a plain
//! all-measurement filter, and a Monte Carlo harness that writes per-step
//! MSE reports.
//!
//! Module map:
//! - [`dp`]: stick-breaking, DP posterior, CRP predictive rule and sampling
//! - [`measurement_model`]: the joint clutter/target prior and its forward draws
//! - [`clustering`]: per-scan Gibbs partitioning, target/clutter labelling, likelihood ratio
//! - [`tracker`]: Gaussian and particle beliefs, the clutter-aware step and the naive step
//! - [`baselines`]: NN and PDA filters
//! - [`simulator`]: ground truth and scan generation, replay format
//! - [`harness`]: configuration, Monte Carlo runs, CSV/JSON reports

pub mod baselines;
pub mod clustering;
pub mod dp;
pub mod error;
pub mod harness;
pub mod measurement_model;
pub mod simulator;
pub mod tracker;
pub mod types;

pub use error::{Error, Result};
pub use types::{Gaussian2, Origin, Point, Rect, State, StateCov};
