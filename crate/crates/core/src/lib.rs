#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Bounds on the sum capacity and capacity region of the two-user Gaussian
//! interference channel.
//!
//! [`gic_core`] holds the channel model and a jointly Gaussian entropy engine,
//! [`upper_bounds`] and [`lower_bounds`] the sum-rate bounds, [`param_search`]
//! the minimization over genie parameters, [`rate_region`] the region outer
//! bounds, [`analysis`] gaps and high-SNR behaviour, and [`lemma_lab`] numeric
//! checks of the underlying entropy inequalities. [`verify`] runs the
//! acceptance suite shared by the test target and the CLI.

pub mod analysis;
pub mod error;
pub mod gic_core;
pub mod lemma_lab;
pub mod lower_bounds;
pub mod param_search;
pub mod rate_region;
pub mod upper_bounds;
pub mod verify;

pub use error::{GicError, Result};
pub use gic_core::{BoundId, BoundResult, ChannelParams, DerivedNoise, GenieParams, SignalKind};
