//! Digital Butterworth band-pass filtering.
//!
//! Design goes through the analog low-pass prototype, the low-pass to
//! band-pass transform, and the bilinear transform with both band edges
//! pre-warped. The filter is stored as second-order sections and applied
//! forward and backward for zero phase.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::Signal;
use crate::error::{Error, Result};

/// One biquad `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let num = self.b[0] + self.b[1] * z_inv + self.b[2] * z_inv * z_inv;
        let den = 1.0 + self.a[0] * z_inv + self.a[1] * z_inv * z_inv;
        num / den
    }

    fn run(&self, x: &mut [f64]) {
        // transposed direct form II
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let out = self.b[0] * input + s1;
            s1 = self.b[1] * input - self.a[0] * out + s2;
            s2 = self.b[2] * input - self.a[1] * out;
            *v = out;
        }
    }
}

/// A cascade of biquads designed as a Butterworth band-pass.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPass {
    pub sections: Vec<Biquad>,
}

impl BandPass {
    /// Designs an `order`-th order prototype band-pass (`2·order` poles) for
    /// the band `[f_low, f_high]` Hz at sampling step `dt`.
    pub fn design(f_low: f64, f_high: f64, order: usize, dt: f64) -> Result<Self> {
        let nyquist = 0.5 / dt;
        if !(dt > 0.0) || order == 0 {
            return Err(Error::InvalidArgument("band-pass needs dt > 0 and order >= 1".into()));
        }
        if !(0.0 < f_low && f_low < f_high && f_high < nyquist) {
            return Err(Error::InvalidArgument(format!(
                "band ({f_low}, {f_high}) Hz must satisfy 0 < low < high < Nyquist {nyquist} Hz"
            )));
        }
        let fs2 = 2.0 / dt;
        let w1 = fs2 * (PI * f_low * dt).tan();
        let w2 = fs2 * (PI * f_high * dt).tan();
        let bw = w2 - w1;
        let w0sq = w1 * w2;

        let mut poles = Vec::with_capacity(2 * order);
        for k in 0..order {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            let p = Complex64::from_polar(1.0, theta);
            let pb = p * bw;
            let disc = (pb * pb - 4.0 * w0sq).sqrt();
            for s in [(pb + disc) * 0.5, (pb - disc) * 0.5] {
                poles.push((fs2 + s) / (fs2 - s));
            }
        }

        // one section per conjugate pair; real poles are paired with each other
        let mut upper: Vec<Complex64> = poles.iter().copied().filter(|z| z.im > 1e-12).collect();
        let mut reals: Vec<f64> = poles.iter().filter(|z| z.im.abs() <= 1e-12).map(|z| z.re).collect();
        upper.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        reals.sort_by(f64::total_cmp);
        let mut sections: Vec<Biquad> = upper
            .iter()
            .map(|z| Biquad { b: [1.0, 0.0, -1.0], a: [-2.0 * z.re, z.norm_sqr()] })
            .collect();
        for pair in reals.chunks(2) {
            let (r1, r2) = (pair[0], *pair.get(1).unwrap_or(&0.0));
            sections.push(Biquad { b: [1.0, 0.0, -1.0], a: [-(r1 + r2), r1 * r2] });
        }

        // unit gain at the (digital) centre frequency
        let centre = 2.0 * (w0sq.sqrt() / fs2).atan() / dt;
        let z_inv = Complex64::from_polar(1.0, -centre * dt);
        let gain: Complex64 = sections.iter().map(|s| s.response(z_inv)).product();
        let g = gain.norm();
        if let Some(first) = sections.first_mut() {
            for b in first.b.iter_mut() {
                *b /= g;
            }
        }
        Ok(Self { sections })
    }

    /// Magnitude response at frequency `f` Hz for sampling step `dt`.
    pub fn magnitude(&self, f: f64, dt: f64) -> f64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f * dt);
        self.sections.iter().map(|s| s.response(z_inv)).product::<Complex64>().norm()
    }

    /// Causal single pass.
    pub fn apply(&self, x: &mut [f64]) {
        for s in &self.sections {
            s.run(x);
        }
    }

    /// Forward-backward pass with odd-extension padding at both ends.
    pub fn apply_zero_phase(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = (6 * self.sections.len() + 3).min(n - 1);
        let mut buf = Vec::with_capacity(n + 2 * pad);
        buf.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        buf.extend_from_slice(x);
        buf.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));
        self.apply(&mut buf);
        buf.reverse();
        self.apply(&mut buf);
        buf.reverse();
        buf[pad..pad + n].to_vec()
    }
}

/// Zero-phase Butterworth band-pass of `signal`; output length equals input
/// length.
pub fn butterworth_bandpass(signal: &Signal, f_low: f64, f_high: f64, order: usize) -> Result<Signal> {
    let filter = BandPass::design(f_low, f_high, order, signal.dt())?;
    Signal::new(signal.dt(), filter.apply_zero_phase(signal.samples()))
}
