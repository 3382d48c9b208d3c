//! Command-line interface.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Engine, ScenarioConfig};
use crate::error::{CliError, Result};
use crate::{fock_io, output, scenario, selftest};

#[derive(Debug, Parser)]
#[command(name = "twinxfer", version, about = "Conditional correlation transfer between two twin-beam pairs")]
pub struct Cli {
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One conditioned and one unconditioned acquisition.
    Run(ScenarioArgs),
    /// One run per point of the config's [sweep] axis.
    Sweep(ScenarioArgs),
    /// Ideal transfer between two joint photon-number distributions.
    Fock {
        pair1: PathBuf,
        pair2: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Monte Carlo against the closed-form predictions.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// TOML scenario file; defaults apply without one.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides n_points.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, value_enum)]
    pub engine: Option<Engine>,
}

impl ScenarioArgs {
    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(points) = self.points {
            cfg.n_points = points;
        }
        if let Some(engine) = self.engine {
            cfg.engine = engine;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Run(args) => {
            let cfg = args.scenario()?;
            let out = scenario::run_scenario(&cfg)?;
            for (label, r) in [("conditioned", &out.conditioned), ("unconditioned", &out.unconditioned)] {
                println!(
                    "{label}: {:.3} dB [{:.3}, {:.3}], kept {} of {}",
                    r.squeezing_db, r.ci_low_db, r.ci_high_db, r.kept_count, r.total
                );
            }
            if let Some(p) = out.oracle_conditioned {
                println!("oracle: {:.3} dB, probability {:.4e}", p.transferred_db, p.selection_probability);
            }
            for path in output::write_run(&args.out, &cfg, &out)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Sweep(args) => {
            let cfg = args.scenario()?;
            let rows = scenario::run_sweep(&cfg)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            let path = output::write_sweep(&args.out, &cfg, &rows)?;
            println!("wrote {} ({} rows, {failed} failed)", path.display(), rows.len());
        }
        Command::Fock { pair1, pair2, out } => {
            let (p1, p2) = (fock_io::read(pair1)?, fock_io::read(pair2)?);
            let result = twinxfer_core::fock_transfer(&p1, &p2)?;
            println!("acceptance probability {}", result.acceptance_probability);
            let path = output::write_fock(out, &[pair1.as_path(), pair2.as_path()], &result)?;
            println!("wrote {}", path.display());
        }
        Command::Selftest { seed } => {
            let checks = selftest::run(*seed)?;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().any(|c| !c.passed) {
                return Err(CliError::SelftestFailed);
            }
        }
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("threads: {e}")))?;
            pool.install(|| dispatch(&cli.command))
        }
        None => dispatch(&cli.command),
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
