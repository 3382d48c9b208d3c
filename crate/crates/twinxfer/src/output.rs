//! CSV emitters. Every file opens with a `#` comment block holding the
//! program version and the full config, followed by a header row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use twinxfer_core::oracle::{FockTransfer, TransferPrediction};
use twinxfer_core::{histogram, TransferReport};

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};
use crate::scenario::{RunOutcome, SweepRow};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest round-trip decimal; NaN for missing values.
fn num(v: f64) -> String {
    format!("{v}")
}

pub fn comment_block(cfg: &ScenarioConfig) -> String {
    let mut out = format!("# twinxfer {VERSION}\n");
    for line in cfg.to_toml().lines() {
        out.push_str(if line.is_empty() { "#" } else { "# " });
        out.push_str(line);
        out.push('\n');
    }
    out
}

struct Table {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl Table {
    fn create(path: PathBuf, comment: &str, header: &[&str]) -> Result<Self> {
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut buf = BufWriter::new(file);
        buf.write_all(comment.as_bytes()).map_err(|e| CliError::io(&path, e))?;
        let mut writer = csv::Writer::from_writer(buf);
        writer.write_record(header).map_err(|e| Self::wrap(&path, e))?;
        Ok(Table { path, writer })
    }

    fn wrap(path: &Path, e: csv::Error) -> CliError {
        match CliError::from(e) {
            CliError::Io { source, .. } => CliError::io(path, source),
            CliError::Format { message, .. } => CliError::Format { path: path.to_owned(), message },
            other => other,
        }
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| Self::wrap(&self.path, e))
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

const REPORT_HEADER: [&str; 9] = [
    "selection",
    "transferred_db",
    "ci_low_db",
    "ci_high_db",
    "kept_count",
    "total",
    "preparation_probability",
    "oracle_transferred_db",
    "oracle_probability",
];

fn report_row(label: &str, r: &TransferReport, oracle: Option<TransferPrediction>) -> Vec<String> {
    let (odb, op) = oracle.map_or((f64::NAN, f64::NAN), |p| (p.transferred_db, p.selection_probability));
    vec![
        label.to_owned(),
        num(r.squeezing_db),
        num(r.ci_low_db),
        num(r.ci_high_db),
        r.kept_count.to_string(),
        r.total.to_string(),
        num(r.preparation_probability),
        num(odb),
        num(op),
    ]
}

/// Every `ceil(len/limit)`-th index, at most `limit` of them.
pub fn stride_subsample(indices: &[usize], limit: usize) -> Vec<usize> {
    if limit == 0 || indices.len() <= limit {
        return indices.to_vec();
    }
    let stride = indices.len().div_ceil(limit);
    indices.iter().step_by(stride).copied().collect()
}

/// Writes `report.csv`, the two scatter files and the two histogram files;
/// returns their paths.
pub fn write_run(dir: &Path, cfg: &ScenarioConfig, out: &RunOutcome) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let comment = comment_block(cfg);
    let mut written = Vec::new();

    let path = dir.join("report.csv");
    let mut t = Table::create(path.clone(), &comment, &REPORT_HEADER)?;
    t.row(report_row("conditioned", &out.conditioned, out.oracle_conditioned))?;
    t.row(report_row("unconditioned", &out.unconditioned, out.oracle_unconditioned))?;
    t.finish()?;
    written.push(path);

    let (a, b) = cfg.selection.target_channels;
    let (xa, xb) = (out.batch.channel(a), out.batch.channel(b));
    let all: Vec<usize> = (0..out.batch.len()).collect();
    for (label, indices) in [("conditioned", &out.selection.kept_indices), ("unconditioned", &all)] {
        let path = dir.join(format!("scatter_{label}.csv"));
        let mut t = Table::create(path.clone(), &comment, &["event", a.name(), b.name()])?;
        for k in stride_subsample(indices, cfg.report.scatter_points) {
            t.row([k.to_string(), num(xa[k]), num(xb[k])])?;
        }
        t.finish()?;
        written.push(path);

        let diffs: Vec<f64> = indices.iter().map(|&k| xa[k] - xb[k]).collect();
        let h = histogram(&diffs, cfg.report.histogram_bin_width)?;
        let path = dir.join(format!("histogram_{label}.csv"));
        let mut t =
            Table::create(path.clone(), &comment, &["bin_low_delta", "bin_high_delta", "count", "probability"])?;
        for ((edges, count), p) in h.bin_edges.windows(2).zip(&h.counts).zip(h.probabilities()) {
            t.row([num(edges[0]), num(edges[1]), count.to_string(), num(p)])?;
        }
        t.finish()?;
        written.push(path);
    }
    Ok(written)
}

pub const SWEEP_HEADER: [&str; 9] = [
    "axis_value",
    "mc_transferred_db",
    "ci_low_db",
    "ci_high_db",
    "kept_count",
    "preparation_probability",
    "oracle_transferred_db",
    "oracle_probability",
    "error",
];

pub fn write_sweep(dir: &Path, cfg: &ScenarioConfig, rows: &[SweepRow]) -> Result<PathBuf> {
    create_dir(dir)?;
    let path = dir.join("sweep.csv");
    let mut t = Table::create(path.clone(), &comment_block(cfg), &SWEEP_HEADER)?;
    for r in rows {
        t.row([
            num(r.axis_value),
            num(r.transferred_db),
            num(r.ci_low_db),
            num(r.ci_high_db),
            r.kept_count.to_string(),
            num(r.preparation_probability),
            num(r.oracle_transferred_db),
            num(r.oracle_probability),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    t.finish()?;
    Ok(path)
}

pub fn write_fock(dir: &Path, inputs: &[&Path], result: &FockTransfer) -> Result<PathBuf> {
    create_dir(dir)?;
    let path = dir.join("fock_transfer.csv");
    let mut comment = format!("# twinxfer {VERSION}\n");
    for p in inputs {
        comment.push_str(&format!("# input {}\n", p.display()));
    }
    comment.push_str(&format!("# acceptance_probability {}\n", num(result.acceptance_probability)));
    let mut t = Table::create(path.clone(), &comment, &["n_idler1", "n_idler2", "probability"])?;
    let d = &result.distribution;
    for a in 0..d.dim() {
        for b in 0..d.dim() {
            t.row([a.to_string(), b.to_string(), num(d.get(a, b))])?;
        }
    }
    t.finish()?;
    Ok(path)
}
