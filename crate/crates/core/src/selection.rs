//! Post-selection on the signal photocurrents.
//!
//! An event is kept when the two trigger channels agree within the window,
//! `|t₁ − t₂| ≤ ΔI·δ`, where `ΔI` is the half-width of the window in units of
//! δ. The statistic of interest is the noise of the target difference over the
//! kept events.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{Channel, SampleBatch};
use crate::stats::{bootstrap_ci, variance_db, BootstrapConfig, ConfigEcho, TransferReport};
use crate::{DELTA, SHOT_DIFFERENCE};

pub const DEFAULT_MIN_KEPT: usize = 100;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SelectionConfig {
    /// Half-width of the acceptance window, as a fraction of δ.
    pub bandwidth_delta: f64,
    pub trigger_channels: (Channel, Channel),
    pub target_channels: (Channel, Channel),
    /// Fewest kept events for which statistics are reported.
    pub min_kept: usize,
    pub bootstrap: BootstrapConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            bandwidth_delta: 0.03,
            trigger_channels: (Channel::S1, Channel::S2),
            target_channels: (Channel::I1, Channel::I2),
            min_kept: DEFAULT_MIN_KEPT,
            bootstrap: BootstrapConfig::default(),
        }
    }
}

impl SelectionConfig {
    pub fn with_bandwidth(bandwidth_delta: f64) -> Self {
        SelectionConfig { bandwidth_delta, ..Default::default() }
    }

    /// Accepts everything: the unconditional statistics.
    pub fn unconditional(&self) -> Self {
        SelectionConfig { bandwidth_delta: f64::INFINITY, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_delta > 0.0) {
            return Err(Error::invalid("bandwidth_delta", "must be positive"));
        }
        let (t1, t2) = self.trigger_channels;
        let (g1, g2) = self.target_channels;
        if t1 == t2 || g1 == g2 {
            return Err(Error::invalid("channels", "a channel pair must name two different channels"));
        }
        if [t1, t2].iter().any(|c| *c == g1 || *c == g2) {
            return Err(Error::invalid("channels", "trigger and target channels must be disjoint"));
        }
        if self.min_kept < 2 {
            return Err(Error::invalid("min_kept", "must be at least 2"));
        }
        self.bootstrap.validate()
    }

    /// Window half-width in model units.
    pub fn half_width(&self) -> f64 {
        self.bandwidth_delta * DELTA
    }
}

/// Indices of the kept events.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub kept_indices: Vec<usize>,
    pub total: usize,
}

impl SelectionResult {
    pub fn all(total: usize) -> Self {
        SelectionResult { kept_indices: (0..total).collect(), total }
    }

    pub fn kept_count(&self) -> usize {
        self.kept_indices.len()
    }

    pub fn preparation_probability(&self) -> f64 {
        self.kept_count() as f64 / self.total as f64
    }
}

/// Keeps index `k` iff `|t₁[k] − t₂[k]| ≤ ΔI·δ`.
///
/// Returns [`Error::EmptySelection`] when nothing passes.
pub fn select(batch: &SampleBatch, cfg: &SelectionConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::invalid("batch", "no samples"));
    }
    let window = cfg.half_width();
    let (a, b) = cfg.trigger_channels;
    let kept_indices: Vec<usize> = batch
        .channel(a)
        .iter()
        .zip(batch.channel(b))
        .enumerate()
        .filter(|(_, (x, y))| libm::fabs(*x - *y) <= window)
        .map(|(k, _)| k)
        .collect();
    if kept_indices.is_empty() {
        return Err(Error::EmptySelection { total: batch.len() });
    }
    Ok(SelectionResult { kept_indices, total: batch.len() })
}

/// Target differences `g₁ − g₂` at the kept indices.
pub fn kept_target_differences(batch: &SampleBatch, result: &SelectionResult, cfg: &SelectionConfig) -> Vec<f64> {
    let (a, b) = cfg.target_channels;
    let (xa, xb) = (batch.channel(a), batch.channel(b));
    result.kept_indices.iter().map(|&k| xa[k] - xb[k]).collect()
}

/// Target-difference noise over the kept events, in dB below shot noise,
/// with its bootstrap interval.
pub fn conditional_statistics(
    batch: &SampleBatch,
    result: &SelectionResult,
    cfg: &SelectionConfig,
) -> Result<TransferReport> {
    cfg.validate()?;
    let kept = result.kept_count();
    if kept < cfg.min_kept {
        return Err(Error::InsufficientStatistics { kept, required: cfg.min_kept });
    }
    let diffs = kept_target_differences(batch, result, cfg);
    let squeezing_db = variance_db(&diffs, SHOT_DIFFERENCE)?;
    let (ci_low_db, ci_high_db) = bootstrap_ci(&diffs, SHOT_DIFFERENCE, &cfg.bootstrap)?;
    Ok(TransferReport {
        squeezing_db,
        ci_low_db,
        ci_high_db,
        kept_count: kept,
        total: result.total,
        preparation_probability: result.preparation_probability(),
        config_echo: ConfigEcho { selection: cfg.clone(), model: None },
    })
}

/// Statistics over all events, the unconditioned counterpart.
pub fn unconditional_statistics(batch: &SampleBatch, cfg: &SelectionConfig) -> Result<TransferReport> {
    conditional_statistics(batch, &SelectionResult::all(batch.len()), &cfg.unconditional())
}
