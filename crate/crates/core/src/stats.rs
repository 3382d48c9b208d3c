//! Shot-normalized variance estimates, histograms and bootstrap intervals.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::model::{MeasurementSetting, TwinPairParams};
use crate::rng::substream;
use crate::selection::SelectionConfig;
use crate::special::{db_below, normal_quantile};
use crate::DELTA;

/// Unbiased (n − 1) sample variance.
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::Estimation("variance needs at least two values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(ss / (n - 1.0))
}

/// `−10·log₁₀(var/shot_reference)`: dB below the shot reference.
pub fn variance_db(values: &[f64], shot_reference: f64) -> Result<f64> {
    if !(shot_reference > 0.0 && shot_reference.is_finite()) {
        return Err(Error::Estimation("shot reference must be positive"));
    }
    Ok(db_below(sample_variance(values)?, shot_reference))
}

/// Histogram with bins centered on integer multiples of the bin width.
///
/// Widths and edges are in units of δ.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }

    /// Fraction of the total in each bin.
    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        let total = self.total as f64;
        self.counts.iter().map(move |&c| c as f64 / total)
    }

    /// Standard deviation of the binned distribution, in δ units.
    pub fn std_dev(&self) -> f64 {
        let total = self.total as f64;
        let mean: f64 = self.centers().zip(&self.counts).map(|(x, &c)| x * c as f64).sum::<f64>() / total;
        let var: f64 =
            self.centers().zip(&self.counts).map(|(x, &c)| (x - mean) * (x - mean) * c as f64).sum::<f64>() / total;
        libm::sqrt(var)
    }
}

/// Bins `values` (model units) with width `bin_width_delta·δ`; the central
/// bin is `[−w/2, w/2)`.
pub fn histogram(values: &[f64], bin_width_delta: f64) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::Estimation("histogram of empty input"));
    }
    if !(bin_width_delta > 0.0 && bin_width_delta < 1.0) {
        return Err(Error::Estimation("bin width must lie in (0, 1)·δ"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Estimation("histogram of non-finite value"));
    }
    let bin_of = |v: f64| libm::floor(v / DELTA / bin_width_delta + 0.5) as i64;
    let (lo, hi) = values.iter().fold((i64::MAX, i64::MIN), |(lo, hi), &v| {
        let b = bin_of(v);
        (lo.min(b), hi.max(b))
    });
    // symmetric range around zero
    let half = lo.unsigned_abs().max(hi.unsigned_abs()) as i64;
    let bins = (2 * half + 1) as usize;
    let mut counts = alloc::vec![0u64; bins];
    for &v in values {
        counts[(bin_of(v) + half) as usize] += 1;
    }
    let bin_edges = (0..=bins).map(|k| ((k as i64 - half) as f64 - 0.5) * bin_width_delta).collect();
    Ok(Histogram { bin_width: bin_width_delta, bin_edges, counts, total: values.len() as u64 })
}

/// Percentile-bootstrap settings.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct BootstrapConfig {
    pub resamples: usize,
    /// Two-sided coverage, 0.68 for ±1σ-style quoting.
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { resamples: 1000, level: 0.68, seed: 0 }
    }
}

pub const MIN_BOOTSTRAP_VALUES: usize = 30;
pub const MIN_RESAMPLES: usize = 200;

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resamples < MIN_RESAMPLES {
            return Err(Error::invalid("resamples", alloc::format!("{} < {MIN_RESAMPLES}", self.resamples)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::invalid("level", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Percentile bootstrap interval of [`variance_db`] at `cfg.level`.
///
/// Resample `r` draws from random substream `r`. The interval is widened if
/// needed so that it contains the full-sample estimate.
pub fn bootstrap_ci(values: &[f64], shot_reference: f64, cfg: &BootstrapConfig) -> Result<(f64, f64)> {
    if values.len() < MIN_BOOTSTRAP_VALUES {
        return Err(Error::Estimation("bootstrap needs at least 30 values"));
    }
    cfg.validate()?;
    let point = variance_db(values, shot_reference)?;
    let n = values.len();
    let shift = values.iter().sum::<f64>() / n as f64;
    let mut stats = map_indexed(cfg.resamples, |r| {
        let mut rng = substream(cfg.seed, r as u64);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v = values[rng.random_range(0..n)] - shift;
            s1 += v;
            s2 += v * v;
        }
        let nf = n as f64;
        let var = (s2 - s1 * s1 / nf) / (nf - 1.0);
        db_below(var, shot_reference)
    });
    stats.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - cfg.level);
    let low = percentile(&stats, tail);
    let high = percentile(&stats, 1.0 - tail);
    Ok((low.min(point), high.max(point)))
}

/// Linear-interpolated percentile of sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = libm::floor(pos) as usize;
    let frac = pos - i as f64;
    if i + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    }
}

/// Model parameters a report was produced with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelEcho {
    pub pair1: TwinPairParams,
    pub pair2: TwinPairParams,
    pub setting: MeasurementSetting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigEcho {
    pub selection: SelectionConfig,
    pub model: Option<ModelEcho>,
}

/// Statistics of the target-difference noise over a set of kept events.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    /// dB below shot noise; negative means excess noise.
    pub squeezing_db: f64,
    pub ci_low_db: f64,
    pub ci_high_db: f64,
    pub kept_count: usize,
    pub total: usize,
    pub preparation_probability: f64,
    pub config_echo: ConfigEcho,
}

impl TransferReport {
    pub fn with_model(mut self, model: ModelEcho) -> Self {
        self.config_echo.model = Some(model);
        self
    }

    /// Half-width of the interval rescaled to one standard error.
    pub fn standard_error_db(&self) -> f64 {
        let level = self.config_echo.selection.bootstrap.level;
        let z = normal_quantile(0.5 + 0.5 * level);
        0.5 * (self.ci_high_db - self.ci_low_db) / z
    }
}
