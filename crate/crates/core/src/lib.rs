//! Semiclassical simulation of conditional correlation transfer between two
//! pairs of twin beams.
//!
//! Two independent twin-beam pairs `(s1, i1)` and `(s2, i2)` are modelled as
//! zero-mean Gaussian photocurrent fluctuations in shot-noise units. Keeping
//! only the events where the two signal photocurrents agree within a window
//! `ΔI` leaves the two idler beams with an intensity difference below the
//! shot-noise limit. The crate provides
//!
//! * [`model`]: the four-channel covariance model and a direct sampler,
//! * [`dsp`]: a wideband synthesizer and the mixer / low-pass / decimator
//!   demodulation chain,
//! * [`selection`]: the post-selection rule and conditional statistics,
//! * [`stats`]: dB-normalized variances, histograms and bootstrap intervals,
//! * [`oracle`]: closed-form predictions used as ground truth.
//!
//! The crate is `no_std` (with `alloc`) when built without the `std` feature.
//! The `parallel` feature runs chunked sampling and bootstrap resampling on
//! rayon; results do not depend on the number of worker threads.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is how validation rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dsp;
mod error;
mod exec;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod selection;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use model::{
    build_covariance, sample_batch, squeezing_db_of, Channel, FourChannelCovariance, MeasurementSetting, PairIndex,
    PairVariances, SampleBatch, TwinPairParams,
};
pub use oracle::{fock_transfer, predict_transfer, truncated_gaussian_variance, JointFockDistribution};
pub use selection::{conditional_statistics, select, SelectionConfig, SelectionResult};
pub use stats::{bootstrap_ci, histogram, variance_db, BootstrapConfig, Histogram, TransferReport};

/// Shot-noise variance of the difference of two shot-noise-limited beams.
pub const SHOT_DIFFERENCE: f64 = 2.0;

/// Standard deviation δ of the difference photocurrent of two coherent beams.
pub const DELTA: f64 = core::f64::consts::SQRT_2;
