//! Single runs and parameter sweeps.

use rayon::prelude::*;
use twinxfer_core::dsp::{demodulate, synthesize};
use twinxfer_core::oracle::{predict_transfer_in, TransferPrediction};
use twinxfer_core::rng::derive_seed;
use twinxfer_core::selection::unconditional_statistics;
use twinxfer_core::stats::ModelEcho;
use twinxfer_core::{
    build_covariance, conditional_statistics, sample_batch, select, Channel, FourChannelCovariance, SampleBatch,
    SelectionResult, TransferReport,
};

use crate::config::{Engine, ScenarioConfig};
use crate::error::{CliError, Result};

pub fn covariance(cfg: &ScenarioConfig) -> Result<FourChannelCovariance> {
    Ok(build_covariance(&cfg.pair1, &cfg.pair2, cfg.setting)?)
}

/// Draws `cfg.n_points` events with the configured engine.
pub fn generate(cfg: &ScenarioConfig, seed: u64) -> Result<SampleBatch> {
    let cov = covariance(cfg)?;
    let batch = match cfg.engine {
        Engine::Direct => sample_batch(&cov, cfg.n_points, seed)?,
        Engine::Chain => {
            let chain = cfg.chain();
            demodulate(&synthesize(&cov, &chain, seed)?, &chain)?
        }
    };
    Ok(batch)
}

/// Whether the closed-form prediction describes the configured channels:
/// triggers on one beam of each pair, targets on the other beam of each.
pub fn oracle_applies(cfg: &ScenarioConfig) -> bool {
    // matrix order is (s1, i1, s2, i2)
    let pair_of = |c: Channel| c.index() / 2;
    let (t1, t2) = cfg.selection.trigger_channels;
    let (g1, g2) = cfg.selection.target_channels;
    pair_of(t1) != pair_of(t2) && pair_of(g1) != pair_of(g2)
}

pub fn oracle(cfg: &ScenarioConfig, bandwidth_delta: f64) -> Result<Option<TransferPrediction>> {
    if !oracle_applies(cfg) {
        return Ok(None);
    }
    Ok(Some(predict_transfer_in(&cfg.pair1, &cfg.pair2, cfg.setting, bandwidth_delta)?))
}

fn model_echo(cfg: &ScenarioConfig) -> ModelEcho {
    ModelEcho { pair1: cfg.pair1, pair2: cfg.pair2, setting: cfg.setting }
}

/// A conditioned and an unconditioned acquisition from the same events.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub batch: SampleBatch,
    pub selection: SelectionResult,
    pub conditioned: TransferReport,
    pub unconditioned: TransferReport,
    pub oracle_conditioned: Option<TransferPrediction>,
    pub oracle_unconditioned: Option<TransferPrediction>,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let batch = generate(cfg, cfg.seed)?;
    let selection = select(&batch, &cfg.selection)?;
    let conditioned = conditional_statistics(&batch, &selection, &cfg.selection)?.with_model(model_echo(cfg));
    let unconditioned = unconditional_statistics(&batch, &cfg.selection)?.with_model(model_echo(cfg));
    Ok(RunOutcome {
        oracle_conditioned: oracle(cfg, cfg.selection.bandwidth_delta)?,
        oracle_unconditioned: oracle(cfg, f64::INFINITY)?,
        batch,
        selection,
        conditioned,
        unconditioned,
    })
}

/// One sweep point. Monte Carlo fields are NaN when `error` is set; the
/// kept count and probability survive an insufficient-statistics error.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub transferred_db: f64,
    pub ci_low_db: f64,
    pub ci_high_db: f64,
    pub kept_count: usize,
    pub preparation_probability: f64,
    pub oracle_transferred_db: f64,
    pub oracle_probability: f64,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(axis_value: f64, error: String) -> Self {
        SweepRow {
            axis_value,
            transferred_db: f64::NAN,
            ci_low_db: f64::NAN,
            ci_high_db: f64::NAN,
            kept_count: 0,
            preparation_probability: f64::NAN,
            oracle_transferred_db: f64::NAN,
            oracle_probability: f64::NAN,
            error: Some(error),
        }
    }
}

fn sweep_row(cfg: &ScenarioConfig, axis_value: f64, seed: u64) -> SweepRow {
    let mut row = SweepRow::failed(axis_value, String::new());
    if let Err(e) = cfg.validate() {
        row.error = Some(e.to_string());
        return row;
    }
    if let Ok(Some(p)) = oracle(cfg, cfg.selection.bandwidth_delta) {
        row.oracle_transferred_db = p.transferred_db;
        row.oracle_probability = p.selection_probability;
    }
    let batch = match generate(cfg, seed) {
        Ok(b) => b,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let selection = match select(&batch, &cfg.selection) {
        Ok(s) => s,
        Err(e) => {
            row.preparation_probability = 0.0;
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.kept_count = selection.kept_count();
    row.preparation_probability = selection.preparation_probability();
    match conditional_statistics(&batch, &selection, &cfg.selection) {
        Ok(r) => {
            row.transferred_db = r.squeezing_db;
            row.ci_low_db = r.ci_low_db;
            row.ci_high_db = r.ci_high_db;
            row.error = None;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs every point of `cfg.sweep`. Row `k` draws from seed
/// `derive_seed(cfg.seed, k)`; rows run in parallel.
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<Vec<SweepRow>> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("no [sweep] table in the config".into()))?;
    spec.validate()?;
    let rows = spec
        .values()
        .into_par_iter()
        .enumerate()
        .map(|(k, v)| sweep_row(&cfg.with_axis(spec.parameter, v), v, derive_seed(cfg.seed, k as u64)))
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Scale, SweepParameter, SweepSpec};
    use twinxfer_core::MeasurementSetting;

    #[test]
    fn oracle_applicability() {
        let mut cfg = ScenarioConfig::default();
        assert!(oracle_applies(&cfg));
        cfg.selection.trigger_channels = (Channel::I2, Channel::S1);
        cfg.selection.target_channels = (Channel::I1, Channel::S2);
        assert!(oracle_applies(&cfg));
        cfg.selection.trigger_channels = (Channel::S1, Channel::I1);
        cfg.selection.target_channels = (Channel::S2, Channel::I2);
        assert!(!oracle_applies(&cfg));
        assert!(oracle(&cfg, 0.03).unwrap().is_none());
    }

    #[test]
    fn too_few_points_is_insufficient_statistics() {
        let cfg = ScenarioConfig { n_points: 10, ..Default::default() };
        assert_eq!(run_scenario(&cfg).unwrap_err().exit_code(), 3);
        let cfg = ScenarioConfig { n_points: 20_000, ..Default::default() };
        assert_eq!(run_scenario(&cfg).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn coherent_run_reads_shot_noise() {
        let cfg =
            ScenarioConfig { setting: MeasurementSetting::CoherentState, n_points: 200_000, ..Default::default() };
        let out = run_scenario(&cfg).unwrap();
        assert!(out.unconditioned.squeezing_db.abs() < 0.1);
        assert!(out.oracle_conditioned.unwrap().transferred_db.abs() < 1e-12);
        assert_eq!(out.unconditioned.kept_count, 200_000);
    }

    #[test]
    fn failed_rows_do_not_abort_the_sweep() {
        let cfg = ScenarioConfig {
            n_points: 5000,
            sweep: Some(SweepSpec {
                parameter: SweepParameter::BandwidthDelta,
                min: 0.001,
                max: 1.0,
                steps: 4,
                scale: Scale::Log,
            }),
            ..Default::default()
        };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].error.is_some() && rows[0].transferred_db.is_nan());
        assert!(rows[0].oracle_probability > 0.0);
        let last = rows.last().unwrap();
        assert!(last.error.is_none(), "{:?}", last.error);
        assert!(last.kept_count > 100);
    }

    #[test]
    fn invalid_axis_values_become_row_errors() {
        let cfg = ScenarioConfig {
            n_points: 5000,
            sweep: Some(SweepSpec {
                parameter: SweepParameter::Efficiency,
                min: 0.0,
                max: 1.0,
                steps: 2,
                scale: Scale::Linear,
            }),
            ..Default::default()
        };
        let rows = run_sweep(&cfg).unwrap();
        assert!(rows[0].error.as_deref().unwrap().contains("efficiency"));
    }

    #[test]
    fn sweep_without_axis_is_a_config_error() {
        assert_eq!(run_sweep(&ScenarioConfig::default()).unwrap_err().exit_code(), 2);
    }
}
