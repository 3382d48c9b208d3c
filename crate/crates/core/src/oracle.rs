//! Closed-form predictions for the conditional transfer.
//!
//! # Gaussian transfer
//!
//! For pair `k` write the intensity sum `xₖ = sₖ + iₖ` (variance `V₊ᵏ`) and
//! difference `yₖ = sₖ − iₖ` (variance `V₋ᵏ`); the two are independent. Define
//!
//! ```text
//! A = (x₁ − x₂)/2,  V_A = (V₊¹ + V₊²)/4
//! B = (y₁ − y₂)/2,  V_B = (V₋¹ + V₋²)/4
//! ```
//!
//! Then the trigger difference is `D_s = s₁ − s₂ = A + B` and the target
//! difference is `D_i = i₁ − i₂ = A − B = D_s − 2B`, with `A ⟂ B`. Regressing
//! `B` on `D_s` gives `B = ρ·D_s + E` with `ρ = V_B/(V_A + V_B)` and a residual
//! `E ⟂ D_s` of variance `V_A·V_B/(V_A + V_B)`. Hence
//!
//! ```text
//! D_i = (1 − 2ρ)·D_s − 2E
//! Var(D_i | |D_s| ≤ c) = (1 − 2ρ)²·Var(D_s | |D_s| ≤ c) + 4·V_A·V_B/(V_A + V_B)
//! ```
//!
//! where `D_s ~ N(0, V_A + V_B)` truncated to `|D_s| ≤ c`, `c = ΔI·δ`, has the
//! variance given by [`truncated_gaussian_variance`]. The acceptance
//! probability is `P(|D_s| ≤ c) = erf(c / √(2(V_A + V_B)))`.
//!
//! For equal pairs with `V₊ → ∞` and `ΔI → 0` the conditional variance tends
//! to `2V₋`: the transferred squeezing is the input squeezing minus
//! `10·log₁₀ 2 ≈ 3.01 dB`. Coherent inputs (`V₊ = V₋ = 2`) give `ρ = 1/2` and
//! stay at shot noise for every window.
//!
//! # Ideal photon-number transfer
//!
//! With joint signal/idler distributions `p₁`, `p₂`, conditioning on equal
//! signal counts `n_s1 = n_s2 = N` leaves the idlers in
//! `p₃(a, b) ∝ Σ_N p₁(N, a)·p₂(N, b)`; see [`fock_transfer`].

use alloc::vec::Vec;
use core::f64::consts::{FRAC_2_SQRT_PI, SQRT_2};

use crate::error::{Error, Result};
use crate::model::{MeasurementSetting, PairVariances, TwinPairParams};
use crate::special::{db_below, erf};
use crate::{DELTA, SHOT_DIFFERENCE};

/// Variance of `X ~ N(0, σ²)` conditioned on `|X| ≤ c`:
/// `σ²·[1 − 2t·φ(t)/(2Φ(t) − 1)]` with `t = c/σ`.
///
/// For `t < 1` the bracket is summed as a series, which avoids the
/// cancellation of the direct form as `t → 0` (where the value tends to `c²/3`).
pub fn truncated_gaussian_variance(sigma: f64, half_width: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain("sigma must be positive and finite"));
    }
    if !(half_width > 0.0) {
        return Err(Error::Domain("half-width must be positive"));
    }
    let t = half_width / sigma;
    if t.is_infinite() {
        return Ok(sigma * sigma);
    }
    let ratio = if t < 1.0 {
        // erf(t/√2)·√(π/2)/t and its difference from exp(−t²/2), both as
        // power series in u = t²/2
        let u = 0.5 * t * t;
        let (mut term, mut den, mut num) = (1.0, 0.0, 0.0);
        for k in 0..40 {
            // term = (−u)^k / k!
            let kf = k as f64;
            den += term / (2.0 * kf + 1.0);
            num += term * (2.0 * kf / (2.0 * kf + 1.0));
            term *= -u / (kf + 1.0);
            if k > 0 && libm::fabs(term) < 1e-17 * libm::fabs(num) {
                break;
            }
        }
        // den − exp(−u) = −num
        -num / den
    } else {
        let mass = erf(t / SQRT_2);
        let density = FRAC_2_SQRT_PI / SQRT_2 * t * libm::exp(-0.5 * t * t);
        1.0 - density / mass
    };
    Ok(sigma * sigma * ratio)
}

/// Closed-form outcome of the conditional transfer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferPrediction {
    /// `Var(D_i | selection)` in model units.
    pub conditional_variance: f64,
    /// dB below the shot reference 2.
    pub transferred_db: f64,
    pub selection_probability: f64,
}

/// Prediction from the effective per-pair mode variances.
pub fn predict_from_variances(pair1: PairVariances, pair2: PairVariances, delta_i: f64) -> Result<TransferPrediction> {
    if !(delta_i > 0.0) {
        return Err(Error::invalid("bandwidth_delta", "must be positive"));
    }
    let va = (pair1.sum + pair2.sum) / 4.0;
    let vb = (pair1.difference + pair2.difference) / 4.0;
    if !(va >= 0.0 && vb >= 0.0 && va + vb > 0.0) {
        return Err(Error::Domain("mode variances must be non-negative"));
    }
    let total = va + vb;
    let rho = vb / total;
    let c = delta_i * DELTA;
    let truncated = truncated_gaussian_variance(libm::sqrt(total), c)?;
    let lever = 1.0 - 2.0 * rho;
    let conditional_variance = lever * lever * truncated + 4.0 * va * vb / total;
    let selection_probability = if c.is_infinite() { 1.0 } else { erf(c / (SQRT_2 * libm::sqrt(total))) };
    Ok(TransferPrediction {
        conditional_variance,
        transferred_db: db_below(conditional_variance, SHOT_DIFFERENCE),
        selection_probability,
    })
}

/// Prediction for two pairs separated at 0°.
pub fn predict_transfer(pair1: &TwinPairParams, pair2: &TwinPairParams, delta_i: f64) -> Result<TransferPrediction> {
    predict_transfer_in(pair1, pair2, MeasurementSetting::TwinBeams0deg, delta_i)
}

/// Prediction in an arbitrary measurement setting.
pub fn predict_transfer_in(
    pair1: &TwinPairParams,
    pair2: &TwinPairParams,
    setting: MeasurementSetting,
    delta_i: f64,
) -> Result<TransferPrediction> {
    predict_from_variances(pair1.effective_variances(setting)?, pair2.effective_variances(setting)?, delta_i)
}

/// Joint photon-number distribution `p(n_a, n_b)` on `{0..dim}²`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointFockDistribution {
    dim: usize,
    /// Row-major, `probs[a·dim + b]`.
    probs: Vec<f64>,
}

impl JointFockDistribution {
    /// Validates non-negativity and normalization (to 1e-9).
    pub fn new(dim: usize, probs: Vec<f64>) -> Result<Self> {
        if dim == 0 || probs.len() != dim * dim {
            return Err(Error::invalid("probabilities", "expected a non-empty dim × dim table"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid("probabilities", "entries must be finite and non-negative"));
        }
        let sum: f64 = probs.iter().sum();
        if libm::fabs(sum - 1.0) > 1e-9 {
            return Err(Error::invalid("probabilities", alloc::format!("sum to {sum}, not 1")));
        }
        Ok(JointFockDistribution { dim, probs })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(dim: usize, weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::invalid("probabilities", "weights must have a positive finite sum"));
        }
        Self::new(dim, weights.into_iter().map(|w| w / sum).collect())
    }

    /// Perfect twin correlation: `p(n, n) = diag[n]`, zero elsewhere.
    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let dim = diag.len();
        let mut probs = alloc::vec![0.0; dim * dim];
        for (n, &p) in diag.iter().enumerate() {
            probs[n * dim + n] = p;
        }
        Self::new(dim, probs)
    }

    /// Independent marginals: `p(a, b) = pa[a]·pb[b]`.
    pub fn product(pa: &[f64], pb: &[f64]) -> Result<Self> {
        let dim = pa.len().max(pb.len());
        let mut probs = alloc::vec![0.0; dim * dim];
        for (a, &x) in pa.iter().enumerate() {
            for (b, &y) in pb.iter().enumerate() {
                probs[a * dim + b] = x * y;
            }
        }
        Self::new(dim, probs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        if a < self.dim && b < self.dim {
            self.probs[a * self.dim + b]
        } else {
            0.0
        }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// True when all mass sits on `a = b`.
    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|a| (0..self.dim).all(|b| a == b || self.get(a, b) == 0.0))
    }
}

/// Idler distribution after keeping only equal signal counts.
#[derive(Debug, Clone, PartialEq)]
pub struct FockTransfer {
    pub distribution: JointFockDistribution,
    /// `Σ_N p₁(N)·p₂(N)` over the signal marginals.
    pub acceptance_probability: f64,
}

/// `p₃(a, b) = Σ_N p₁(N, a)·p₂(N, b) / P_acc` on the larger of the two
/// dimensions.
pub fn fock_transfer(p1: &JointFockDistribution, p2: &JointFockDistribution) -> Result<FockTransfer> {
    let dim = p1.dim().max(p2.dim());
    let shared = p1.dim().min(p2.dim());
    let mut joint = alloc::vec![0.0; dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            joint[a * dim + b] = (0..shared).map(|n| p1.get(n, a) * p2.get(n, b)).sum();
        }
    }
    let acceptance: f64 = joint.iter().sum();
    if acceptance <= 0.0 {
        return Err(Error::EmptySelection { total: 0 });
    }
    let probs = joint.into_iter().map(|p| p / acceptance).collect();
    Ok(FockTransfer { distribution: JointFockDistribution::new(dim, probs)?, acceptance_probability: acceptance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Composite Simpson integration of x²·φ over [−c, c] divided by its mass.
    fn quadrature_truncated_variance(sigma: f64, c: f64) -> f64 {
        let n = 20_000;
        let h = 2.0 * c / n as f64;
        let pdf = |x: f64| (-0.5 * (x / sigma).powi(2)).exp();
        let (mut m0, mut m2) = (0.0, 0.0);
        for k in 0..=n {
            let x = -c + k as f64 * h;
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            m0 += w * pdf(x);
            m2 += w * x * x * pdf(x);
        }
        m2 / m0
    }

    #[test]
    fn truncated_variance_against_quadrature() {
        let v = truncated_gaussian_variance(1.0, 1.0).unwrap();
        let q = quadrature_truncated_variance(1.0, 1.0);
        assert!((q - 0.2911).abs() < 5e-5);
        assert!((v - q).abs() < 1e-10, "{v} vs {q}");
        for &(s, c) in &[(1.0, 0.3), (2.0, 0.999 * 2.0), (2.0, 1.001 * 2.0), (10.0, 4.24), (0.5, 3.0)] {
            let v = truncated_gaussian_variance(s, c).unwrap();
            let q = quadrature_truncated_variance(s, c);
            assert!((v - q).abs() < 1e-9 * s * s, "σ={s}, c={c}: {v} vs {q}");
        }
    }

    #[test]
    fn truncated_variance_limits() {
        assert_eq!(truncated_gaussian_variance(3.0, f64::INFINITY).unwrap(), 9.0);
        assert!((truncated_gaussian_variance(3.0, 1e3).unwrap() - 9.0).abs() < 1e-12);
        for c in [1e-3, 1e-6, 1e-9] {
            let v = truncated_gaussian_variance(1.0, c).unwrap();
            assert!((v / (c * c / 3.0) - 1.0).abs() < 1e-6, "c={c}");
        }
        assert!(truncated_gaussian_variance(0.0, 1.0).is_err());
        assert!(truncated_gaussian_variance(1.0, 0.0).is_err());
    }

    #[test]
    fn series_and_direct_forms_agree_at_switch() {
        let below = truncated_gaussian_variance(1.0, 1.0 - 1e-12).unwrap();
        let above = truncated_gaussian_variance(1.0, 1.0).unwrap();
        assert!((below - above).abs() < 1e-11);
    }

    #[test]
    fn headline_prediction() {
        let p = TwinPairParams::default();
        let pred = predict_transfer(&p, &p, 0.03).unwrap();
        assert!((pred.transferred_db - 4.00).abs() < 0.01, "{pred:?}");
        assert!((pred.selection_probability - 3.4e-3).abs() < 0.05e-3);
    }

    #[test]
    fn coherent_prediction_is_shot_noise_for_every_window() {
        let p = TwinPairParams::default();
        for bw in [0.001, 0.03, 1.0, 30.0, f64::INFINITY] {
            let pred = predict_transfer_in(&p, &p, MeasurementSetting::CoherentState, bw).unwrap();
            assert!((pred.conditional_variance - 2.0).abs() < 1e-12);
            assert!(pred.transferred_db.abs() < 1e-11);
        }
    }

    #[test]
    fn threshold_in_the_ideal_limit() {
        let v_minus = 2.0 * 10f64.powf(-0.301);
        let huge = PairVariances { difference: v_minus, sum: 1e12 };
        let pred = predict_from_variances(huge, huge, 1e-9).unwrap();
        assert!(pred.transferred_db.abs() < 0.01, "{}", pred.transferred_db);
    }

    #[test]
    fn three_db_law() {
        for s in [0.5, 4.0, 7.0, 12.0, 20.0] {
            let v = PairVariances { difference: 2.0 * 10f64.powf(-s / 10.0), sum: 1e14 };
            let pred = predict_from_variances(v, v, 1e-9).unwrap();
            assert!((pred.transferred_db - (s - 10.0 * 2f64.log10())).abs() < 1e-6);
        }
    }

    #[test]
    fn probability_insensitive_to_squeezing() {
        let prob = |s: f64| {
            let p = TwinPairParams::with_squeezing(s);
            predict_transfer(&p, &p, 0.03).unwrap().selection_probability
        };
        let (p0, p9) = (prob(0.0), prob(9.0));
        assert!(((p9 - p0) / p0).abs() < 0.01);
    }

    #[test]
    fn bandwidth_plateau() {
        let p = TwinPairParams::default();
        let db: Vec<f64> =
            [0.01, 0.02, 0.05, 0.1].iter().map(|&bw| predict_transfer(&p, &p, bw).unwrap().transferred_db).collect();
        let spread = db.iter().cloned().fold(f64::MIN, f64::max) - db.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 0.5);
    }

    #[test]
    fn unequal_pairs_reduce_to_equal_case() {
        let a = TwinPairParams::with_squeezing(6.0);
        let eq = predict_transfer(&a, &a, 0.05).unwrap();
        let va = a.effective_variances(MeasurementSetting::TwinBeams0deg).unwrap();
        let direct = predict_from_variances(va, va, 0.05).unwrap();
        assert_eq!(eq, direct);
        let b = TwinPairParams::with_squeezing(9.0);
        let mixed = predict_transfer(&a, &b, 0.05).unwrap();
        assert!(mixed.transferred_db > eq.transferred_db);
    }

    /// Brute-force enumeration over (n_s1, n_i1, n_s2, n_i2).
    fn brute_force(p1: &JointFockDistribution, p2: &JointFockDistribution) -> (Vec<f64>, f64) {
        let dim = p1.dim().max(p2.dim());
        let mut joint = alloc::vec![0.0; dim * dim];
        for ns1 in 0..dim {
            for ni1 in 0..dim {
                for ns2 in 0..dim {
                    for ni2 in 0..dim {
                        if ns1 == ns2 {
                            joint[ni1 * dim + ni2] += p1.get(ns1, ni1) * p2.get(ns2, ni2);
                        }
                    }
                }
            }
        }
        let total: f64 = joint.iter().sum();
        (joint.into_iter().map(|p| p / total).collect(), total)
    }

    #[test]
    fn two_level_diagonal_transfer() {
        let p = JointFockDistribution::diagonal(&[0.5, 0.5]).unwrap();
        let out = fock_transfer(&p, &p).unwrap();
        assert_eq!(out.distribution.probabilities(), &[0.5, 0.0, 0.0, 0.5]);
        assert_eq!(out.acceptance_probability, 0.5);
        let (bf, acc) = brute_force(&p, &p);
        assert_eq!(bf, out.distribution.probabilities());
        assert_eq!(acc, out.acceptance_probability);
    }

    #[test]
    fn product_inputs_transfer_nothing() {
        let p1 = JointFockDistribution::product(&[0.2, 0.5, 0.3], &[0.6, 0.4]).unwrap();
        let p2 = JointFockDistribution::product(&[0.1, 0.1, 0.8], &[0.3, 0.3, 0.4]).unwrap();
        let out = fock_transfer(&p1, &p2).unwrap().distribution;
        let row = |a: usize| (0..3).map(|b| out.get(a, b)).sum::<f64>();
        let col = |b: usize| (0..3).map(|a| out.get(a, b)).sum::<f64>();
        for a in 0..3 {
            for b in 0..3 {
                assert!((out.get(a, b) - row(a) * col(b)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn disjoint_signal_support_is_an_empty_selection() {
        let p1 = JointFockDistribution::diagonal(&[1.0, 0.0]).unwrap();
        let p2 = JointFockDistribution::diagonal(&[0.0, 1.0]).unwrap();
        assert!(matches!(fock_transfer(&p1, &p2), Err(Error::EmptySelection { .. })));
        assert!(JointFockDistribution::new(2, alloc::vec![0.5, 0.5, 0.5, -0.5]).is_err());
        assert!(JointFockDistribution::new(2, alloc::vec![0.5, 0.5, 0.5]).is_err());
    }

    fn diag_weights() -> impl Strategy<Value = Vec<f64>> {
        (1usize..=6)
            .prop_flat_map(|d| proptest::collection::vec(0u32..100, d))
            .prop_filter("non-zero", |w| w.iter().any(|&x| x > 0))
            .prop_map(|w| w.into_iter().map(f64::from).collect())
    }

    proptest! {
        #[test]
        fn diagonal_inputs_give_diagonal_output(w1 in diag_weights(), w2 in diag_weights()) {
            let d1 = JointFockDistribution::diagonal(&w1.iter().map(|w| w / w1.iter().sum::<f64>()).collect::<Vec<_>>()).unwrap();
            let d2 = JointFockDistribution::diagonal(&w2.iter().map(|w| w / w2.iter().sum::<f64>()).collect::<Vec<_>>()).unwrap();
            match fock_transfer(&d1, &d2) {
                Ok(out) => {
                    prop_assert!(out.distribution.is_diagonal());
                    let (bf, acc) = brute_force(&d1, &d2);
                    prop_assert_eq!(out.distribution.probabilities(), &bf[..]);
                    prop_assert_eq!(out.acceptance_probability, acc);
                }
                Err(e) => {
                    let empty = matches!(e, Error::EmptySelection { .. });
                    prop_assert!(empty);
                }
            }
        }

        #[test]
        fn transfer_output_is_a_distribution(w1 in proptest::collection::vec(0.0..1.0f64, 9), w2 in proptest::collection::vec(0.0..1.0f64, 16)) {
            let p1 = JointFockDistribution::from_weights(3, w1).unwrap();
            let p2 = JointFockDistribution::from_weights(4, w2).unwrap();
            let out = fock_transfer(&p1, &p2).unwrap();
            prop_assert!(out.distribution.probabilities().iter().all(|&p| p >= 0.0));
            prop_assert!((out.distribution.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(out.acceptance_probability > 0.0 && out.acceptance_probability <= 1.0 + 1e-12);
        }
    }
}
