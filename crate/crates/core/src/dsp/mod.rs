//! Wideband synthesis and the demodulation chain.

mod chain;
pub mod filter;

pub use chain::{demodulate, synthesize, PairSource, SignalChainConfig, WidebandRecord, WARMUP_POINTS};

use core::f64::consts::PI;

/// Averaged Hann-windowed periodogram of `signal` at frequency `f`,
/// normalized so unit-variance white noise reads 1.
///
/// Evaluated per segment with the Goertzel recurrence; segments do not
/// overlap. Returns `None` if the signal is shorter than one segment.
pub fn psd_at(signal: &[f64], sample_rate: f64, f: f64, segment_len: usize) -> Option<f64> {
    let segments = signal.len() / segment_len;
    if segments == 0 || segment_len < 2 {
        return None;
    }
    let window: alloc::vec::Vec<f64> = (0..segment_len)
        .map(|n| {
            let s = libm::sin(PI * n as f64 / (segment_len - 1) as f64);
            s * s
        })
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let omega = 2.0 * PI * f / sample_rate;
    let coeff = 2.0 * libm::cos(omega);
    let mut acc = 0.0;
    for seg in signal.chunks_exact(segment_len).take(segments) {
        let (mut s1, mut s2) = (0.0, 0.0);
        for (x, w) in seg.iter().zip(&window) {
            let s0 = x * w + coeff * s1 - s2;
            s2 = s1;
            s1 = s0;
        }
        acc += s1 * s1 + s2 * s2 - coeff * s1 * s2;
    }
    Some(acc / segments as f64 / window_power)
}

/// Lag-`k` sample autocorrelation.
pub fn autocorrelation(values: &[f64], lag: usize) -> f64 {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let cov: f64 = values.windows(lag + 1).map(|w| (w[0] - mean) * (w[lag] - mean)).sum();
    cov / var
}
