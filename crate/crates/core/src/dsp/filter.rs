//! IIR building blocks designed by the bilinear transform.

use alloc::vec::Vec;
use core::f64::consts::PI;

/// Second-order section, transposed direct form II.
#[derive(Debug, Clone, PartialEq)]
pub struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
    z: [f64; 2],
}

impl Biquad {
    pub fn new(b: [f64; 3], a: [f64; 2]) -> Self {
        Biquad { b, a, z: [0.0; 2] }
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.z[0];
        self.z[0] = self.b[1] * x - self.a[0] * y + self.z[1];
        self.z[1] = self.b[2] * x - self.a[1] * y;
        y
    }

    pub fn reset(&mut self) {
        self.z = [0.0; 2];
    }

    /// `|H(e^{jω})|²` at normalized angular frequency `omega`.
    pub fn power_response(&self, omega: f64) -> f64 {
        let (c1, s1) = (libm::cos(omega), libm::sin(omega));
        let (c2, s2) = (libm::cos(2.0 * omega), libm::sin(2.0 * omega));
        let num_re = self.b[0] + self.b[1] * c1 + self.b[2] * c2;
        let num_im = -(self.b[1] * s1 + self.b[2] * s2);
        let den_re = 1.0 + self.a[0] * c1 + self.a[1] * c2;
        let den_im = -(self.a[0] * s1 + self.a[1] * s2);
        (num_re * num_re + num_im * num_im) / (den_re * den_re + den_im * den_im)
    }
}

/// Even-order Butterworth low-pass as a cascade of biquads. DC gain is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterworthLowpass {
    sections: Vec<Biquad>,
    sample_rate: f64,
}

impl ButterworthLowpass {
    /// `order` must be even and positive; `cutoff` is the −3 dB frequency,
    /// prewarped so it lands exactly.
    pub fn new(order: usize, cutoff: f64, sample_rate: f64) -> Self {
        assert!(order >= 2 && order.is_multiple_of(2), "Butterworth order must be even");
        assert!(cutoff > 0.0 && cutoff < 0.5 * sample_rate, "cutoff must lie below Nyquist");
        let k = libm::tan(PI * cutoff / sample_rate);
        let k2 = k * k;
        let sections = (0..order / 2)
            .map(|i| {
                let theta = PI * (2 * i + 1) as f64 / (2 * order) as f64;
                // 1/Q for this pole pair
                let q_inv = 2.0 * libm::sin(theta);
                let norm = 1.0 / (1.0 + k * q_inv + k2);
                let b0 = k2 * norm;
                Biquad::new([b0, 2.0 * b0, b0], [2.0 * (k2 - 1.0) * norm, (1.0 - k * q_inv + k2) * norm])
            })
            .collect();
        ButterworthLowpass { sections, sample_rate }
    }

    pub fn order(&self) -> usize {
        2 * self.sections.len()
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        self.sections.iter_mut().fold(x, |acc, s| s.process(acc))
    }

    pub fn reset(&mut self) {
        self.sections.iter_mut().for_each(Biquad::reset);
    }

    /// `|H(f)|²` at frequency `f` in Hz.
    pub fn power_response(&self, f: f64) -> f64 {
        let omega = 2.0 * PI * f / self.sample_rate;
        self.sections.iter().map(|s| s.power_response(omega)).product()
    }

    /// `Σ h[n]²` of the impulse response, i.e. the output variance for unit
    /// white input.
    pub fn impulse_energy(&self, samples: usize) -> f64 {
        let mut f = self.clone();
        f.reset();
        let mut energy = 0.0;
        for n in 0..samples {
            let y = f.process(if n == 0 { 1.0 } else { 0.0 });
            energy += y * y;
        }
        energy
    }
}

/// First-order low-pass `H(s) = ω_c/(s + ω_c)` mapped by the bilinear
/// transform with prewarping at the corner.
///
/// The power response is the Lorentzian `1/(1 + (f_w/f_c)²)` in warped
/// frequency `f_w = (f_s/π)·tan(πf/f_s)`, and `Re H = |H|²` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct OnePoleLowpass {
    b: f64,
    a: f64,
    x1: f64,
    y1: f64,
    warp: f64,
}

impl OnePoleLowpass {
    pub fn new(corner: f64, sample_rate: f64) -> Self {
        assert!(corner > 0.0 && corner < 0.5 * sample_rate, "corner must lie below Nyquist");
        let k = libm::tan(PI * corner / sample_rate);
        OnePoleLowpass { b: k / (1.0 + k), a: (k - 1.0) / (1.0 + k), x1: 0.0, y1: 0.0, warp: k }
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b * (x + self.x1) - self.a * self.y1;
        self.x1 = x;
        self.y1 = y;
        y
    }

    /// `|H|²` at normalized frequency `f/f_s`.
    pub fn power_response(&self, normalized_freq: f64) -> f64 {
        let r = libm::tan(PI * normalized_freq) / self.warp;
        1.0 / (1.0 + r * r)
    }
}
