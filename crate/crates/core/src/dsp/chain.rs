//! Wideband photocurrent synthesis and lock-in style demodulation.
//!
//! Each pair is built from its intensity sum `x = s + i` and difference
//! `y = s − i`, independent processes with one-sided PSDs (relative to unit
//! white noise)
//!
//! ```text
//! S_x(f) = 2 + (V₊' − 2)·L(f)        S_y(f) = 2·[1 − (1 − V₋'/2)·L(f)]
//! ```
//!
//! where `L` is the cavity Lorentzian. The primed depths are scaled so that
//! `S_x(Ω) = V₊` and `S_y(Ω) = V₋` for the configured covariance. A mode above
//! shot noise gets independent Lorentzian noise added; a mode below shot
//! noise is produced by the shelving filter `√2·(1 − g·LP)` acting on its own
//! white noise, whose power response is `2·[1 − (2g − g²)·L]`.
//!
//! Demodulation multiplies by `√2·cos(2πΩt + φ)`, low-passes at the baseband
//! cutoff with an even-order Butterworth filter, decimates, drops the filter
//! warm-up and applies the gain that maps unit white input to unit variance.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use rand_distr::{Distribution, StandardNormal};

use super::filter::{ButterworthLowpass, OnePoleLowpass};
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::model::{FourChannelCovariance, PairIndex, PairVariances, SampleBatch};
use crate::rng::{substream, StreamRng};
use crate::SHOT_DIFFERENCE;

/// Output samples discarded while the post-mixer filter settles.
pub const WARMUP_POINTS: usize = 128;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SignalChainConfig {
    /// Analysis frequency Ω of the electrical local oscillator.
    pub lo_frequency_hz: f64,
    pub synth_rate_hz: f64,
    /// Front-end low-pass; modelled as ideal, it only bounds the synthesis band.
    pub antialias_cutoff_hz: f64,
    pub post_mixer_cutoff_hz: f64,
    pub output_rate_hz: f64,
    pub record_points: usize,
    /// Half-width of the Lorentzian correlation spectrum.
    pub cavity_bandwidth_hz: f64,
    pub mixer_phase_rad: f64,
    /// Butterworth order of the post-mixer filter.
    pub filter_order: usize,
}

impl Default for SignalChainConfig {
    fn default() -> Self {
        SignalChainConfig {
            lo_frequency_hz: 3.5e6,
            synth_rate_hz: 5e7,
            antialias_cutoff_hz: 2.14e7,
            post_mixer_cutoff_hz: 1e5,
            output_rate_hz: 2e5,
            record_points: 300_000,
            cavity_bandwidth_hz: 1e7,
            mixer_phase_rad: 0.0,
            filter_order: 8,
        }
    }
}

impl SignalChainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lo_frequency_hz", self.lo_frequency_hz),
            ("synth_rate_hz", self.synth_rate_hz),
            ("antialias_cutoff_hz", self.antialias_cutoff_hz),
            ("post_mixer_cutoff_hz", self.post_mixer_cutoff_hz),
            ("output_rate_hz", self.output_rate_hz),
            ("cavity_bandwidth_hz", self.cavity_bandwidth_hz),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(field, "must be positive and finite"));
            }
        }
        if !self.mixer_phase_rad.is_finite() {
            return Err(Error::invalid("mixer_phase_rad", "must be finite"));
        }
        if self.output_rate_hz < 2.0 * self.post_mixer_cutoff_hz {
            return Err(Error::invalid("output_rate_hz", "must be at least twice the post-mixer cutoff"));
        }
        if self.synth_rate_hz <= 2.0 * (self.lo_frequency_hz + self.post_mixer_cutoff_hz) {
            return Err(Error::invalid("synth_rate_hz", "must exceed 2·(Ω + post-mixer cutoff)"));
        }
        if self.antialias_cutoff_hz >= 0.5 * self.synth_rate_hz {
            return Err(Error::invalid("antialias_cutoff_hz", "must lie below the synthesis Nyquist frequency"));
        }
        if self.lo_frequency_hz + self.post_mixer_cutoff_hz > self.antialias_cutoff_hz {
            return Err(Error::invalid("antialias_cutoff_hz", "front end must pass the analysis band"));
        }
        if self.cavity_bandwidth_hz >= 0.5 * self.synth_rate_hz {
            return Err(Error::invalid("cavity_bandwidth_hz", "must lie below the synthesis Nyquist frequency"));
        }
        let ratio = self.synth_rate_hz / self.output_rate_hz;
        if libm::fabs(ratio - libm::round(ratio)) > 1e-9 * ratio || ratio < 1.0 {
            return Err(Error::invalid("output_rate_hz", "must divide the synthesis rate by an integer"));
        }
        if self.record_points == 0 {
            return Err(Error::invalid("record_points", "must be at least 1"));
        }
        if self.filter_order < 4 || !self.filter_order.is_multiple_of(2) {
            return Err(Error::invalid("filter_order", "must be even and at least 4"));
        }
        Ok(())
    }

    /// Synthesis samples per output sample.
    pub fn decimation(&self) -> usize {
        libm::round(self.synth_rate_hz / self.output_rate_hz) as usize
    }

    /// Wideband samples consumed by [`demodulate`].
    pub fn required_len(&self) -> usize {
        (self.record_points + WARMUP_POINTS) * self.decimation()
    }

    pub fn post_mixer_filter(&self) -> ButterworthLowpass {
        ButterworthLowpass::new(self.filter_order, self.post_mixer_cutoff_hz, self.synth_rate_hz)
    }

    fn cavity_filter(&self) -> OnePoleLowpass {
        OnePoleLowpass::new(self.cavity_bandwidth_hz, self.synth_rate_hz)
    }

    /// Realized correlation shape `L(f)`, 1 at DC.
    pub fn lorentzian(&self, f: f64) -> f64 {
        self.cavity_filter().power_response(f / self.synth_rate_hz)
    }
}

/// How one mode (sum or difference) departs from white shot noise.
#[derive(Debug, Clone, Copy, PartialEq)]
enum ModeShape {
    /// `√2·w + gain·LP(e)` with independent `e`.
    Excess { gain: f64 },
    /// `√2·(w − g·LP(w))`.
    Reduction { g: f64 },
}

impl ModeShape {
    fn for_variance(target: f64, cfg: &SignalChainConfig, field: &'static str) -> Result<Self> {
        let l = cfg.lorentzian(cfg.lo_frequency_hz);
        if target >= SHOT_DIFFERENCE {
            return Ok(ModeShape::Excess { gain: libm::sqrt((target - SHOT_DIFFERENCE) / l) });
        }
        let depth = (1.0 - target / SHOT_DIFFERENCE) / l;
        if depth > 1.0 {
            return Err(Error::invalid(
                field,
                alloc::format!("noise reduction at Ω needs Lorentzian depth {depth:.3} > 1 for this cavity bandwidth"),
            ));
        }
        Ok(ModeShape::Reduction { g: 1.0 - libm::sqrt(1.0 - depth) })
    }

    /// PSD relative to unit white noise at `f`.
    fn psd(&self, l: f64) -> f64 {
        match *self {
            ModeShape::Excess { gain } => SHOT_DIFFERENCE + gain * gain * l,
            ModeShape::Reduction { g } => SHOT_DIFFERENCE * (1.0 - (2.0 * g - g * g) * l),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PairShape {
    sum: ModeShape,
    difference: ModeShape,
}

/// A deterministic four-channel wideband photocurrent record.
///
/// Samples are generated on demand: a default-length record at 50 MHz is
/// far too large to hold in memory. Any prefix can be reproduced exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct WidebandRecord {
    cfg: SignalChainConfig,
    shapes: [PairShape; 2],
    seed: u64,
    len: usize,
}

/// Samples `(s, i)` of one pair in time order.
pub struct PairSource {
    sum: ModeGenerator,
    difference: ModeGenerator,
    remaining: usize,
}

struct ModeGenerator {
    shape: ModeShape,
    white: StreamRng,
    extra: StreamRng,
    lowpass: OnePoleLowpass,
}

impl ModeGenerator {
    #[inline]
    fn next(&mut self) -> f64 {
        let w: f64 = StandardNormal.sample(&mut self.white);
        match self.shape {
            ModeShape::Excess { gain } => {
                let e: f64 = StandardNormal.sample(&mut self.extra);
                SQRT_2 * w + gain * self.lowpass.process(e)
            }
            ModeShape::Reduction { g } => SQRT_2 * (w - g * self.lowpass.process(w)),
        }
    }
}

impl Iterator for PairSource {
    type Item = (f64, f64);

    #[inline]
    fn next(&mut self) -> Option<(f64, f64)> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let x = self.sum.next();
        let y = self.difference.next();
        Some((0.5 * (x + y), 0.5 * (x - y)))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl WidebandRecord {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn config(&self) -> &SignalChainConfig {
        &self.cfg
    }

    /// The same record cut (or extended) to `len` samples.
    pub fn with_len(&self, len: usize) -> Self {
        WidebandRecord { len, ..self.clone() }
    }

    pub fn pair_source(&self, pair: PairIndex) -> PairSource {
        let p = match pair {
            PairIndex::First => 0u64,
            PairIndex::Second => 1u64,
        };
        let shape = self.shapes[p as usize];
        let mode = |m: u64, shape: ModeShape| ModeGenerator {
            shape,
            white: substream(self.seed, 4 * p + 2 * m),
            extra: substream(self.seed, 4 * p + 2 * m + 1),
            lowpass: self.cfg.cavity_filter(),
        };
        PairSource { sum: mode(0, shape.sum), difference: mode(1, shape.difference), remaining: self.len }
    }

    /// All four channels `(s1, i1, s2, i2)` in memory.
    pub fn materialize(&self) -> [Vec<f64>; 4] {
        let mut out: [Vec<f64>; 4] = core::array::from_fn(|_| Vec::with_capacity(self.len));
        for (pair, offset) in [(PairIndex::First, 0), (PairIndex::Second, 2)] {
            for (s, i) in self.pair_source(pair) {
                out[offset].push(s);
                out[offset + 1].push(i);
            }
        }
        out
    }

    /// Model PSD of the intra-pair difference `s − i` at `f`.
    pub fn difference_psd(&self, pair: PairIndex, f: f64) -> f64 {
        self.shape(pair).difference.psd(self.cfg.lorentzian(f))
    }

    /// Model PSD of the intra-pair sum `s + i` at `f`.
    pub fn sum_psd(&self, pair: PairIndex, f: f64) -> f64 {
        self.shape(pair).sum.psd(self.cfg.lorentzian(f))
    }

    fn shape(&self, pair: PairIndex) -> &PairShape {
        match pair {
            PairIndex::First => &self.shapes[0],
            PairIndex::Second => &self.shapes[1],
        }
    }
}

/// Builds the wideband record whose spectrum at Ω reproduces `cov`.
pub fn synthesize(cov: &FourChannelCovariance, cfg: &SignalChainConfig, seed: u64) -> Result<WidebandRecord> {
    cfg.validate()?;
    let shape = |v: PairVariances| -> Result<PairShape> {
        Ok(PairShape {
            sum: ModeShape::for_variance(v.sum, cfg, "sum variance")?,
            difference: ModeShape::for_variance(v.difference, cfg, "difference variance")?,
        })
    };
    let shapes = [shape(cov.pair_variances(PairIndex::First))?, shape(cov.pair_variances(PairIndex::Second))?];
    Ok(WidebandRecord { cfg: cfg.clone(), shapes, seed, len: cfg.required_len() })
}

/// `√2·cos(2π·ratio·n + phase)` by phasor rotation, re-anchored periodically.
struct LocalOscillator {
    step: (f64, f64),
    phasor: (f64, f64),
    ratio: f64,
    phase: f64,
    n: u64,
}

const REANCHOR: u64 = 4096;

impl LocalOscillator {
    fn new(ratio: f64, phase: f64) -> Self {
        let w = 2.0 * PI * ratio;
        let mut lo = LocalOscillator { step: (libm::cos(w), libm::sin(w)), phasor: (1.0, 0.0), ratio, phase, n: 0 };
        lo.anchor();
        lo
    }

    fn anchor(&mut self) {
        let cycles = self.n as f64 * self.ratio;
        let theta = 2.0 * PI * (cycles - libm::floor(cycles)) + self.phase;
        self.phasor = (libm::cos(theta), libm::sin(theta));
    }

    #[inline]
    fn next(&mut self) -> f64 {
        let out = SQRT_2 * self.phasor.0;
        self.n += 1;
        if self.n.is_multiple_of(REANCHOR) {
            self.anchor();
        } else {
            let (c, s) = self.phasor;
            self.phasor = (c * self.step.0 - s * self.step.1, c * self.step.1 + s * self.step.0);
        }
        out
    }
}

/// Mixes, filters and decimates every channel into `record_points` samples.
pub fn demodulate(rec: &WidebandRecord, cfg: &SignalChainConfig) -> Result<SampleBatch> {
    cfg.validate()?;
    if cfg.synth_rate_hz != rec.cfg.synth_rate_hz || cfg.cavity_bandwidth_hz != rec.cfg.cavity_bandwidth_hz {
        return Err(Error::invalid("synth_rate_hz", "record was synthesized with a different chain"));
    }
    let needed = cfg.required_len();
    if rec.len() < needed {
        return Err(Error::Length { needed, available: rec.len() });
    }
    let decimation = cfg.decimation();
    let filter = cfg.post_mixer_filter();
    let settle = (100.0 * cfg.synth_rate_hz / cfg.post_mixer_cutoff_hz) as usize;
    let gain = 1.0 / libm::sqrt(filter.impulse_energy(settle));
    let ratio = cfg.lo_frequency_hz / cfg.synth_rate_hz;

    let pairs = map_indexed(2, |p| {
        let pair = if p == 0 { PairIndex::First } else { PairIndex::Second };
        let mut lo = LocalOscillator::new(ratio, cfg.mixer_phase_rad);
        let (mut fs, mut fi) = (filter.clone(), filter.clone());
        let mut out_s = Vec::with_capacity(cfg.record_points);
        let mut out_i = Vec::with_capacity(cfg.record_points);
        let mut phase = 0;
        let mut produced = 0;
        for (s, i) in rec.pair_source(pair).take(needed) {
            let m = lo.next();
            let ys = fs.process(s * m);
            let yi = fi.process(i * m);
            phase += 1;
            if phase == decimation {
                phase = 0;
                if produced >= WARMUP_POINTS {
                    out_s.push(gain * ys);
                    out_i.push(gain * yi);
                }
                produced += 1;
            }
        }
        (out_s, out_i)
    });
    let mut it = pairs.into_iter();
    let (s1, i1) = it.next().unwrap_or_default();
    let (s2, i2) = it.next().unwrap_or_default();
    SampleBatch::from_channels([s1, i1, s2, i2], rec.seed)
}
