//! Normal-distribution helpers and decibel conversions.

use core::f64::consts::{PI, SQRT_2};

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Inverse of [`normal_cdf`] by bisection; accurate to ~1e-12.
pub fn normal_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Noise reduction in dB below `reference`: positive when `variance < reference`.
pub fn db_below(variance: f64, reference: f64) -> f64 {
    -10.0 * libm::log10(variance / reference)
}

/// Inverse of [`db_below`].
pub fn variance_from_db(db: f64, reference: f64) -> f64 {
    reference * libm::pow(10.0, -db / 10.0)
}
