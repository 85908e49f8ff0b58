//! Simulation and optimization of a refracting-surface-assisted mmWave
//! downlink to passengers on a high-speed train.
//!
//! A cell transit is split into frames; in each served frame one cluster of
//! passengers shares a NOMA downlink relayed through a phase-controlled surface
//! on the carriage window. Per frame, [`optimizer::alternating_optimize`] picks
//! the transmit beamformer and discrete surface phases; [`power`] then shares
//! the power budget across windows of frames. [`baselines`] holds the reference
//! schemes and [`harness`] the Monte-Carlo sweeps behind the CLI.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod channel;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod optimizer;
pub mod power;
pub mod rate;
pub mod scenario;

pub use error::{Error, Result};
