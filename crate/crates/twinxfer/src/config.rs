//! Scenario configuration, read from TOML.
//!
//! Every table rejects unknown keys. Missing keys take their defaults, so an
//! empty file describes the reference scenario.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use twinxfer_core::dsp::SignalChainConfig;
use twinxfer_core::{MeasurementSetting, SelectionConfig, TwinPairParams};

use crate::error::{CliError, Result};

pub const DEFAULT_POINTS: usize = 300_000;

/// How samples are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Direct draws from the four-channel covariance.
    #[default]
    Direct,
    /// Wideband synthesis followed by the demodulation chain.
    Chain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    SqueezingDb,
    Efficiency,
    RotationDeg,
    BandwidthDelta,
    ExcessSumDb,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::SqueezingDb => "squeezing_db",
            SweepParameter::Efficiency => "efficiency",
            SweepParameter::RotationDeg => "rotation_deg",
            SweepParameter::BandwidthDelta => "bandwidth_delta",
            SweepParameter::ExcessSumDb => "excess_sum_db",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// One swept axis. Pair parameters are applied to both pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(CliError::Config("sweep.steps must be at least 1".into()));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(CliError::Config(format!("sweep range [{}, {}] is not a finite interval", self.min, self.max)));
        }
        if self.scale == Scale::Log && !(self.min > 0.0) {
            return Err(CliError::Config("sweep.min must be positive on a log scale".into()));
        }
        Ok(())
    }

    /// Axis values from `min` to `max` inclusive.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                let t = k as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * t,
                    Scale::Log => self.min * (self.max / self.min).powf(t),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Points written to each scatter file; 0 writes every event.
    pub scatter_points: usize,
    /// Histogram bin width in units of δ.
    pub histogram_bin_width: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { scatter_points: 20_000, histogram_bin_width: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub pair1: TwinPairParams,
    pub pair2: TwinPairParams,
    pub setting: MeasurementSetting,
    pub selection: SelectionConfig,
    /// Events per acquisition. Overrides `signal_chain.record_points`.
    pub n_points: usize,
    pub seed: u64,
    pub engine: Engine,
    pub signal_chain: SignalChainConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    pub report: ReportConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            pair1: TwinPairParams::default(),
            pair2: TwinPairParams::default(),
            setting: MeasurementSetting::default(),
            selection: SelectionConfig::default(),
            n_points: DEFAULT_POINTS,
            seed: 0,
            engine: Engine::default(),
            signal_chain: SignalChainConfig::default(),
            sweep: None,
            report: ReportConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("a validated config is representable in TOML")
    }

    /// Signal-chain settings with the record length taken from `n_points`.
    pub fn chain(&self) -> SignalChainConfig {
        SignalChainConfig { record_points: self.n_points, ..self.signal_chain.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.pair1.validate()?;
        self.pair2.validate()?;
        self.selection.validate()?;
        if self.n_points == 0 {
            return Err(CliError::Config("n_points must be positive".into()));
        }
        // TOML integers are signed 64-bit
        if i64::try_from(self.seed).is_err() || i64::try_from(self.selection.bootstrap.seed).is_err() {
            return Err(CliError::Config(format!("seeds must not exceed {}", i64::MAX)));
        }
        if self.engine == Engine::Chain {
            self.chain().validate()?;
        }
        if let Some(sweep) = &self.sweep {
            sweep.validate()?;
        }
        let w = self.report.histogram_bin_width;
        if !(w > 0.0 && w < 1.0) {
            return Err(CliError::Config(format!("report.histogram_bin_width {w} not in (0, 1)")));
        }
        Ok(())
    }

    /// Copy with one sweep parameter set to `value`.
    pub fn with_axis(&self, parameter: SweepParameter, value: f64) -> Self {
        let mut cfg = self.clone();
        for pair in [&mut cfg.pair1, &mut cfg.pair2] {
            match parameter {
                SweepParameter::SqueezingDb => pair.squeezing_db = value,
                SweepParameter::Efficiency => pair.efficiency = value,
                SweepParameter::RotationDeg => pair.rotation_deg = value,
                SweepParameter::ExcessSumDb => pair.excess_sum_db = value,
                SweepParameter::BandwidthDelta => {}
            }
        }
        if parameter == SweepParameter::BandwidthDelta {
            cfg.selection.bandwidth_delta = value;
        }
        cfg
    }
}
