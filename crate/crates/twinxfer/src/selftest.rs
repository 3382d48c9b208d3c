//! Quick Monte Carlo versus closed-form checks.

use twinxfer_core::oracle::predict_transfer;
use twinxfer_core::{fock_transfer, JointFockDistribution, MeasurementSetting, TwinPairParams};

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::scenario::run_scenario;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn mc_against_oracle(name: &'static str, cfg: &ScenarioConfig) -> Result<Vec<Check>> {
    let out = run_scenario(cfg)?;
    let mut checks = Vec::new();
    for (label, report, oracle) in [
        ("conditioned", &out.conditioned, out.oracle_conditioned),
        ("unconditioned", &out.unconditioned, out.oracle_unconditioned),
    ] {
        let oracle = oracle.expect("default channels have an oracle");
        let se = report.standard_error_db();
        let gap = report.squeezing_db - oracle.transferred_db;
        checks.push(check(
            name,
            gap.abs() <= 3.0 * se,
            format!("{label}: mc {:.3} dB, oracle {:.3} dB, se {:.3}", report.squeezing_db, oracle.transferred_db, se),
        ));
    }
    // binomial error of the kept fraction
    let p = out.oracle_conditioned.unwrap().selection_probability;
    let n = out.conditioned.total as f64;
    let sigma = (p * (1.0 - p) / n).sqrt();
    let q = out.conditioned.preparation_probability;
    checks.push(check(name, (q - p).abs() <= 3.0 * sigma, format!("probability: mc {q:.5}, oracle {p:.5}")));
    Ok(checks)
}

pub fn run(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let base = ScenarioConfig { seed, ..Default::default() };
    checks.extend(mc_against_oracle("twin beams at 0 degrees", &base)?);
    let coherent = ScenarioConfig { setting: MeasurementSetting::CoherentState, ..base.clone() };
    checks.extend(mc_against_oracle("coherent state", &coherent)?);

    let strong = TwinPairParams { excess_sum_db: 40.0, ..TwinPairParams::with_squeezing(7.0) };
    let law = predict_transfer(&strong, &strong, 0.01)?;
    let loss = 7.0 - law.transferred_db;
    checks.push(check("3 dB law", (loss - 3.01).abs() < 0.05, format!("7 dB in, {:.3} dB out", law.transferred_db)));

    let p1 = JointFockDistribution::diagonal(&[0.4, 0.3, 0.2, 0.1])?;
    let p2 = JointFockDistribution::diagonal(&[0.1, 0.2, 0.3, 0.4])?;
    let out = fock_transfer(&p1, &p2)?;
    let expected = [0.04, 0.06, 0.06, 0.04].map(|w| w / 0.2);
    let exact =
        out.distribution.is_diagonal() && (0..4).all(|n| (out.distribution.get(n, n) - expected[n]).abs() < 1e-15);
    checks.push(check("Fock collapse", exact, format!("acceptance {}", out.acceptance_probability)));
    Ok(checks)
}
