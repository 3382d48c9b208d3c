//! Gaussian photocurrent-noise model of two independent twin-beam pairs.
//!
//! Units: each beam's shot-noise variance is 1, so the difference of two
//! shot-noise-limited beams has variance [`SHOT_DIFFERENCE`] = 2. A pair is
//! described by the variances of its intensity difference (`V₋`, below 2 for
//! twin beams) and intensity sum (`V₊`, far above 2 for beams pumped above
//! threshold). The two modes are uncorrelated and the beams have equal power,
//! which fixes the 2×2 block of the pair:
//!
//! ```text
//! Var(s) = Var(i) = (V₊ + V₋) / 4,    Cov(s, i) = (V₊ − V₋) / 4
//! ```

use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::rng::substream;
use crate::special::db_below;
use crate::SHOT_DIFFERENCE;

/// Rows generated per random substream in [`sample_batch`].
pub const SAMPLE_CHUNK: usize = 1 << 14;

/// Detector channel, in matrix order `(s1, i1, s2, i2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Channel {
    S1,
    I1,
    S2,
    I2,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::S1, Channel::I1, Channel::S2, Channel::I2];

    pub fn index(self) -> usize {
        match self {
            Channel::S1 => 0,
            Channel::I1 => 1,
            Channel::S2 => 2,
            Channel::I2 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::S1 => "s1",
            Channel::I1 => "i1",
            Channel::S2 => "s2",
            Channel::I2 => "i2",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s1" => Ok(Channel::S1),
            "i1" => Ok(Channel::I1),
            "s2" => Ok(Channel::S2),
            "i2" => Ok(Channel::I2),
            other => Err(Error::UnknownChannel(other.to_string())),
        }
    }
}

/// Which of the two twin-beam pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairIndex {
    First,
    Second,
}

impl PairIndex {
    pub fn channels(self) -> (Channel, Channel) {
        match self {
            PairIndex::First => (Channel::S1, Channel::I1),
            PairIndex::Second => (Channel::S2, Channel::I2),
        }
    }
}

/// Optical configuration of the detection stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MeasurementSetting {
    /// Signal and idler separated on the polarizing beam splitter.
    #[default]
    #[cfg_attr(feature = "serde", serde(rename = "twin_beams_0deg"))]
    TwinBeams0deg,
    /// Half-wave plate at 45°: the difference channel reads shot noise.
    #[cfg_attr(feature = "serde", serde(rename = "twin_beams_45deg"))]
    TwinBeams45deg,
    /// Coherent beams of equal power.
    CoherentState,
}

/// Source and detection parameters of one twin-beam pair.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TwinPairParams {
    /// Intensity-difference noise reduction below shot noise, in dB.
    pub squeezing_db: f64,
    /// Intensity-sum excess noise above shot noise, in dB.
    pub excess_sum_db: f64,
    /// Detection efficiency η.
    pub efficiency: f64,
    /// Half-wave-plate angle θ in degrees.
    pub rotation_deg: f64,
}

impl Default for TwinPairParams {
    fn default() -> Self {
        TwinPairParams { squeezing_db: 7.0, excess_sum_db: 20.0, efficiency: 1.0, rotation_deg: 0.0 }
    }
}

fn check_range(field: &'static str, value: f64, lo: f64, hi: f64, open_low: bool) -> Result<()> {
    let ok = if open_low { value > lo && value <= hi } else { value >= lo && value <= hi };
    if ok {
        Ok(())
    } else {
        let bracket = if open_low { "(" } else { "[" };
        Err(Error::invalid(field, alloc::format!("{value} not in {bracket}{lo}, {hi}]")))
    }
}

impl TwinPairParams {
    pub fn new(squeezing_db: f64, excess_sum_db: f64, efficiency: f64, rotation_deg: f64) -> Result<Self> {
        let p = TwinPairParams { squeezing_db, excess_sum_db, efficiency, rotation_deg };
        p.validate()?;
        Ok(p)
    }

    /// Default pair with the given squeezing.
    pub fn with_squeezing(squeezing_db: f64) -> Self {
        TwinPairParams { squeezing_db, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        check_range("squeezing_db", self.squeezing_db, 0.0, 20.0, false)?;
        check_range("excess_sum_db", self.excess_sum_db, 0.0, 60.0, false)?;
        check_range("efficiency", self.efficiency, 0.0, 1.0, true)?;
        check_range("rotation_deg", self.rotation_deg, 0.0, 45.0, false)
    }

    /// Effective `(V₋, V₊)` seen by the detectors in the given setting.
    pub fn effective_variances(&self, setting: MeasurementSetting) -> Result<PairVariances> {
        self.validate()?;
        if setting == MeasurementSetting::CoherentState {
            return Ok(PairVariances::SHOT_NOISE);
        }
        let theta_deg = match setting {
            MeasurementSetting::TwinBeams45deg => 45.0,
            _ => self.rotation_deg,
        };
        let base = PairVariances {
            difference: SHOT_DIFFERENCE * libm::pow(10.0, -self.squeezing_db / 10.0),
            sum: SHOT_DIFFERENCE * libm::pow(10.0, self.excess_sum_db / 10.0),
        };
        Ok(base.rotated(theta_deg).attenuated(self.efficiency))
    }
}

/// Variances of the intra-pair intensity difference and sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairVariances {
    /// `V₋ = Var(s − i)`.
    pub difference: f64,
    /// `V₊ = Var(s + i)`.
    pub sum: f64,
}

impl PairVariances {
    pub const SHOT_NOISE: PairVariances = PairVariances { difference: SHOT_DIFFERENCE, sum: SHOT_DIFFERENCE };

    /// Half-wave-plate rotation: mixes the difference toward shot noise,
    /// `V₋ ← cos²(2θ)·V₋ + sin²(2θ)·2`. The sum is unchanged.
    pub fn rotated(self, theta_deg: f64) -> Self {
        let two_theta = 2.0 * theta_deg.to_radians();
        // cos(90°) is not exactly zero in floating point
        let (sin2, cos2) = if theta_deg == 45.0 {
            (1.0, 0.0)
        } else {
            let c = libm::cos(two_theta);
            let s = libm::sin(two_theta);
            (s * s, c * c)
        };
        PairVariances { difference: cos2 * self.difference + sin2 * SHOT_DIFFERENCE, sum: self.sum }
    }

    /// Beam-splitter loss with transmission `eta`: `V ← ηV + (1 − η)·2`.
    pub fn attenuated(self, eta: f64) -> Self {
        PairVariances { difference: apply_loss(self.difference, eta), sum: apply_loss(self.sum, eta) }
    }

    /// Per-beam variance `(V₊ + V₋)/4`.
    pub fn beam_variance(&self) -> f64 {
        (self.sum + self.difference) / 4.0
    }

    /// Signal-idler covariance `(V₊ − V₋)/4`.
    pub fn cross_covariance(&self) -> f64 {
        (self.sum - self.difference) / 4.0
    }

    pub fn squeezing_db(&self) -> f64 {
        db_below(self.difference, SHOT_DIFFERENCE)
    }
}

/// Vacuum admixture through a beam splitter of transmission `eta`.
pub fn apply_loss(variance: f64, eta: f64) -> f64 {
    eta * variance + (1.0 - eta) * SHOT_DIFFERENCE
}

/// Second moments of `(s1, i1, s2, i2)` in shot-noise units.
///
/// Always symmetric, positive semi-definite, block-diagonal across pairs, and
/// with equal beam variances inside each pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FourChannelCovariance {
    matrix: [[f64; 4]; 4],
}

impl FourChannelCovariance {
    pub fn from_pairs(first: PairVariances, second: PairVariances) -> Result<Self> {
        for (pair, field) in [(first, "pair1"), (second, "pair2")] {
            if !(pair.difference.is_finite() && pair.sum.is_finite()) || pair.difference < 0.0 || pair.sum < 0.0 {
                return Err(Error::invalid(field, "mode variances must be finite and non-negative"));
            }
        }
        let mut m = [[0.0; 4]; 4];
        for (offset, pair) in [(0, first), (2, second)] {
            m[offset][offset] = pair.beam_variance();
            m[offset + 1][offset + 1] = pair.beam_variance();
            m[offset][offset + 1] = pair.cross_covariance();
            m[offset + 1][offset] = pair.cross_covariance();
        }
        Ok(FourChannelCovariance { matrix: m })
    }

    /// Validates an explicit matrix against the structural invariants.
    #[allow(clippy::needless_range_loop)]
    pub fn from_matrix(matrix: [[f64; 4]; 4]) -> Result<Self> {
        if matrix.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Covariance("non-finite entry"));
        }
        let scale = (0..4).map(|k| matrix[k][k].abs()).fold(1.0, f64::max);
        let tol = 1e-12 * scale;
        for r in 0..4 {
            for c in 0..4 {
                if (matrix[r][c] - matrix[c][r]).abs() > tol {
                    return Err(Error::Covariance("matrix is not symmetric"));
                }
                if r / 2 != c / 2 && matrix[r][c] != 0.0 {
                    return Err(Error::Covariance("pairs must be uncorrelated"));
                }
            }
        }
        for k in [0, 2] {
            if (matrix[k][k] - matrix[k + 1][k + 1]).abs() > tol {
                return Err(Error::Covariance("signal and idler variances differ within a pair"));
            }
        }
        cholesky(&matrix)?;
        Ok(FourChannelCovariance { matrix })
    }

    pub fn matrix(&self) -> &[[f64; 4]; 4] {
        &self.matrix
    }

    pub fn get(&self, a: Channel, b: Channel) -> f64 {
        self.matrix[a.index()][b.index()]
    }

    /// Variance of the linear combination `Σ wₖ·chₖ`.
    pub fn combination_variance(&self, weights: &[f64; 4]) -> f64 {
        let mut acc = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                acc += weights[r] * self.matrix[r][c] * weights[c];
            }
        }
        acc
    }

    pub fn pair_variances(&self, pair: PairIndex) -> PairVariances {
        let (s, i) = pair.channels();
        let (vs, vi, c) = (self.get(s, s), self.get(i, i), self.get(s, i));
        PairVariances { difference: vs + vi - 2.0 * c, sum: vs + vi + 2.0 * c }
    }

    /// Lower-triangular `L` with `L·Lᵀ = Σ`.
    pub fn cholesky(&self) -> Result<[[f64; 4]; 4]> {
        cholesky(&self.matrix)
    }
}

/// Cholesky factorization that tolerates singular (semi-definite) matrices.
fn cholesky(a: &[[f64; 4]; 4]) -> Result<[[f64; 4]; 4]> {
    let scale = (0..4).map(|k| a[k][k].abs()).fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    let mut l = [[0.0; 4]; 4];
    for j in 0..4 {
        let d = a[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if d < -tol {
            return Err(Error::NotPositiveSemiDefinite);
        }
        if d <= tol {
            for i in j + 1..4 {
                let v = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if v.abs() > 1e-9 * scale {
                    return Err(Error::NotPositiveSemiDefinite);
                }
            }
            continue;
        }
        let root = libm::sqrt(d);
        l[j][j] = root;
        for i in j + 1..4 {
            let v = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            l[i][j] = v / root;
        }
    }
    Ok(l)
}

/// Builds the four-channel covariance of two pairs in a measurement setting.
pub fn build_covariance(
    pair1: &TwinPairParams,
    pair2: &TwinPairParams,
    setting: MeasurementSetting,
) -> Result<FourChannelCovariance> {
    FourChannelCovariance::from_pairs(pair1.effective_variances(setting)?, pair2.effective_variances(setting)?)
}

/// Intra-pair difference squeezing, `−10·log₁₀(V₋/2)`.
pub fn squeezing_db_of(cov: &FourChannelCovariance, pair: PairIndex) -> f64 {
    cov.pair_variances(pair).squeezing_db()
}

/// Columnar photocurrent fluctuation samples, one column per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    channels: [Vec<f64>; 4],
    seed: u64,
}

impl SampleBatch {
    pub fn from_channels(channels: [Vec<f64>; 4], seed: u64) -> Result<Self> {
        let n = channels[0].len();
        if channels.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("channels", "columns differ in length"));
        }
        if channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("channels", "non-finite sample"));
        }
        Ok(SampleBatch { channels, seed })
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn channel(&self, ch: Channel) -> &[f64] {
        &self.channels[ch.index()]
    }

    pub fn channels(&self) -> &[Vec<f64>; 4] {
        &self.channels
    }

    /// `a[k] − b[k]` for every row.
    pub fn difference(&self, a: Channel, b: Channel) -> Vec<f64> {
        self.channel(a).iter().zip(self.channel(b)).map(|(x, y)| x - y).collect()
    }

    /// Unbiased sample covariance matrix of the four channels.
    pub fn sample_covariance(&self) -> [[f64; 4]; 4] {
        let n = self.len() as f64;
        let means: [f64; 4] = core::array::from_fn(|k| self.channels[k].iter().sum::<f64>() / n);
        let mut out = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in r..4 {
                let s: f64 =
                    self.channels[r].iter().zip(&self.channels[c]).map(|(x, y)| (x - means[r]) * (y - means[c])).sum();
                out[r][c] = s / (n - 1.0);
                out[c][r] = out[r][c];
            }
        }
        out
    }
}

/// Draws `n` independent rows from `N(0, cov)`.
///
/// Rows are produced in chunks of [`SAMPLE_CHUNK`]; chunk `k` uses random
/// substream `k`, so the batch depends only on `(cov, n, seed)`.
pub fn sample_batch(cov: &FourChannelCovariance, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::invalid("n", "sample count must be at least 1"));
    }
    let l = cov.cholesky()?;
    let chunks = n.div_ceil(SAMPLE_CHUNK);
    let parts = map_indexed(chunks, |k| {
        let rows = SAMPLE_CHUNK.min(n - k * SAMPLE_CHUNK);
        let mut rng = substream(seed, k as u64);
        let mut cols: [Vec<f64>; 4] = core::array::from_fn(|_| Vec::with_capacity(rows));
        for _ in 0..rows {
            let z: [f64; 4] = core::array::from_fn(|_| StandardNormal.sample(&mut rng));
            for (r, col) in cols.iter_mut().enumerate() {
                col.push((0..=r).map(|c| l[r][c] * z[c]).sum());
            }
        }
        cols
    });
    let mut channels: [Vec<f64>; 4] = core::array::from_fn(|_| Vec::with_capacity(n));
    for part in parts {
        for (dst, src) in channels.iter_mut().zip(part) {
            dst.extend(src);
        }
    }
    SampleBatch::from_channels(channels, seed)
}
