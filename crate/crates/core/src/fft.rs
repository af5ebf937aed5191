//! FFT plans and the causal convolution / correlation helpers built on them.
//!
//! Lengths are zero-padded to the next power of two. A [`Fft`] plan wraps
//! planned `rustfft` transforms of one size, so the thousands of transforms
//! in a training run reuse the same twiddles.

use num_complex::Complex64;

/// Smallest power of two that is `>= n` (and at least 1).
pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// A reusable transform plan for one power-of-two size.
#[derive(Clone)]
pub struct Fft {
    n: usize,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl std::fmt::Debug for Fft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft").field("n", &self.n).finish()
    }
}

impl Fft {
    /// # Panics
    /// If `n` is not a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT size {n} is not a power of two");
        let mut planner = rustfft::FftPlanner::new();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform, `X[k] = Σ x[j] e^{-2πi jk/n}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n, "buffer length does not match plan");
        self.fwd.process(data);
    }

    /// In-place inverse transform including the `1/n` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n, "buffer length does not match plan");
        self.inv.process(data);
        let scale = 1.0 / self.n as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Transforms two real sequences with one complex FFT.
    ///
    /// Both inputs are zero-padded to the plan size; the returned spectra are
    /// full length `n`.
    pub fn forward_real_pair(&self, a: &[f64], b: &[f64], out_a: &mut [Complex64], out_b: &mut [Complex64]) {
        let n = self.n;
        assert!(a.len() <= n && b.len() <= n);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (i, v) in a.iter().enumerate() {
            buf[i].re = *v;
        }
        for (i, v) in b.iter().enumerate() {
            buf[i].im = *v;
        }
        self.forward(&mut buf);
        for k in 0..n {
            let z = buf[k];
            let zc = buf[(n - k) % n].conj();
            out_a[k] = (z + zc) * 0.5;
            out_b[k] = (z - zc) * Complex64::new(0.0, -0.5);
        }
    }

    /// Spectrum of a real sequence zero-padded to the plan size.
    pub fn forward_real(&self, x: &[f64]) -> Vec<Complex64> {
        assert!(x.len() <= self.n);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        for (b, v) in buf.iter_mut().zip(x) {
            b.re = *v;
        }
        self.forward(&mut buf);
        buf
    }
}

/// First `signal.len()` samples of the linear convolution `kernel * signal`:
/// `y[p] = Σ_{k=0}^{p} kernel[k] · signal[p-k]`.
pub fn causal_convolve(kernel: &[f64], signal: &[f64]) -> Vec<f64> {
    let m = signal.len();
    if m == 0 {
        return Vec::new();
    }
    let n = next_pow2(kernel.len() + m - 1);
    let plan = Fft::new(n);
    let mut ks = plan.forward_real(kernel);
    let xs = plan.forward_real(signal);
    for (k, x) in ks.iter_mut().zip(&xs) {
        *k *= x;
    }
    plan.inverse(&mut ks);
    ks[..m].iter().map(|c| c.re).collect()
}

/// Lagged correlation `c[k] = Σ_p a[p] · b[p-k]` for `k = 0..lags`, the sum
/// running over indices where both factors exist.
pub fn lagged_correlation(a: &[f64], b: &[f64], lags: usize) -> Vec<f64> {
    if lags == 0 {
        return Vec::new();
    }
    let n = next_pow2(a.len() + b.len());
    let plan = Fft::new(n);
    let mut fa = plan.forward_real(a);
    let fb = plan.forward_real(b);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y.conj();
    }
    plan.inverse(&mut fa);
    (0..lags).map(|k| if k < n { fa[k].re } else { 0.0 }).collect()
}

/// One-sided amplitude spectrum of a uniformly sampled real signal.
///
/// Returns `(frequency in Hz, |X(f)|·dt)` pairs for the bins `0..=n/2` of
/// the zero-padded transform.
pub fn amplitude_spectrum(x: &[f64], dt: f64) -> Vec<(f64, f64)> {
    let n = next_pow2(x.len());
    let plan = Fft::new(n);
    let spec = plan.forward_real(x);
    let df = 1.0 / (n as f64 * dt);
    (0..=n / 2).map(|k| (k as f64 * df, spec[k].norm() * dt)).collect()
}
