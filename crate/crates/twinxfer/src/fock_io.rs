//! Joint photon-number distribution files.
//!
//! CSV with header `n_signal,n_idler,probability`; lines starting with `#`
//! are comments. Pairs that are not listed have probability zero. The table
//! must sum to 1 within 1e-9.

use std::path::Path;

use serde::Deserialize;
use twinxfer_core::JointFockDistribution;

use crate::error::{CliError, Result};

#[derive(Debug, Deserialize)]
struct Entry {
    n_signal: usize,
    n_idler: usize,
    probability: f64,
}

/// Largest photon number accepted in a file.
pub const MAX_PHOTON_NUMBER: usize = 4096;

pub fn parse(text: &str, origin: &Path) -> Result<JointFockDistribution> {
    let bad = |message: String| CliError::Format { path: origin.to_owned(), message };
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut entries = Vec::new();
    for (line, record) in reader.deserialize::<Entry>().enumerate() {
        let e = record.map_err(|e| bad(format!("record {}: {e}", line + 1)))?;
        if e.n_signal > MAX_PHOTON_NUMBER || e.n_idler > MAX_PHOTON_NUMBER {
            return Err(bad(format!("record {}: photon number above {MAX_PHOTON_NUMBER}", line + 1)));
        }
        entries.push(e);
    }
    let dim = entries.iter().map(|e| e.n_signal.max(e.n_idler) + 1).max().ok_or_else(|| bad("no entries".into()))?;
    let mut probs = vec![f64::NAN; dim * dim];
    for e in &entries {
        let slot = &mut probs[e.n_signal * dim + e.n_idler];
        if !slot.is_nan() {
            return Err(bad(format!("({}, {}) listed twice", e.n_signal, e.n_idler)));
        }
        *slot = e.probability;
    }
    for p in probs.iter_mut().filter(|p| p.is_nan()) {
        *p = 0.0;
    }
    Ok(JointFockDistribution::new(dim, probs)?)
}

pub fn read(path: &Path) -> Result<JointFockDistribution> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, path)
}
