//! Causal DeepONet: the branch sees only the samples up to the output time.
//!
//! For output step `p` (`1 ≤ p ≤ m`) the branch input is the first `p`
//! samples of the signal placed in a length-`m` vector with zeros elsewhere.
//! The convolutional variant right-aligns the samples, so branch weight
//! column `q` always multiplies the sample `m - 1 - q` steps back: the first
//! layer is a bank of causal convolutions and can be evaluated for all `p` at
//! once with FFTs. The other variant left-aligns them (fixed weights per
//! absolute time).
//!
//! Output `p` is paired with response sample `p - 1`, the value at time
//! `(p-1)·dt`, which depends on the window's last sample at most; the trunk
//! receives `t_p = p·dt` in seconds.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rand::Rng;

use super::{masks, Architecture, Dropout, Operator};
use crate::error::{Error, Result};
use crate::fft::{next_pow2, Fft};
use crate::neuralcore::{Activation, Cache, Mlp, Mode, RegConfig};

fn check_window(m: usize, p: usize) -> Result<()> {
    if p > m {
        return Err(Error::InvalidArgument(format!("window size {p} exceeds signal length {m}")));
    }
    Ok(())
}

/// First `p` samples right-aligned: `v[m-p+j] = signal[j]`.
pub fn causal_branch_input(signal: &[f64], p: usize) -> Result<Vec<f64>> {
    let m = signal.len();
    check_window(m, p)?;
    let mut v = vec![0.0; m];
    v[m - p..].copy_from_slice(&signal[..p]);
    Ok(v)
}

/// First `p` samples left-aligned: `v[j] = signal[j]` for `j < p`.
pub fn noconv_branch_input(signal: &[f64], p: usize) -> Result<Vec<f64>> {
    let m = signal.len();
    check_window(m, p)?;
    let mut v = vec![0.0; m];
    v[..p].copy_from_slice(&signal[..p]);
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalityModel {
    pub branch: Mlp,
    pub trunk: Mlp,
    pub convolutional: bool,
    pub dt: f64,
    pub output_bias: f64,
    pub train_bias: bool,
}

/// Inputs plus, for the convolutional branch, their zero-padded spectra.
pub struct CausalPrepared {
    inputs: Array2<f64>,
    fft: Option<Fft>,
    spectra: Vec<Vec<Complex64>>,
}

pub struct CausalTape {
    branch: Cache,
    trunk: Cache,
}

impl CausalityModel {
    /// `branch_dims[0]` is the signal length `m`, `trunk_dims[0]` must be 1.
    pub fn new(
        branch_dims: &[usize],
        trunk_dims: &[usize],
        activation: Activation,
        convolutional: bool,
        dt: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let branch = Mlp::new(branch_dims, activation, rng)?;
        let trunk = Mlp::new(trunk_dims, activation, rng)?;
        Self::from_parts(branch, trunk, convolutional, dt)
    }

    pub fn from_parts(branch: Mlp, trunk: Mlp, convolutional: bool, dt: f64) -> Result<Self> {
        super::check_pair(&branch, trunk.output_dim())?;
        if trunk.input_dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: trunk.input_dim() });
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument("dt must be positive".into()));
        }
        Ok(Self { branch, trunk, convolutional, dt, output_bias: 0.0, train_bias: false })
    }

    pub fn m(&self) -> usize {
        self.branch.input_dim()
    }

    /// Window for step `p` according to the variant.
    pub fn window(&self, signal: &[f64], p: usize) -> Result<Vec<f64>> {
        if signal.len() != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), got: signal.len() });
        }
        if self.convolutional {
            causal_branch_input(signal, p)
        } else {
            noconv_branch_input(signal, p)
        }
    }

    /// Branch output for window `p`.
    pub fn branch_features(&self, signal: &[f64], p: usize, mode: Mode) -> Result<Vec<f64>> {
        self.branch.forward(&self.window(signal, p)?, mode)
    }

    /// `branch(window(signal, p)) · trunk(p·dt) + bias`.
    pub fn forward(&self, signal: &[f64], p: usize, mode: Mode) -> Result<f64> {
        let b = self.branch_features(signal, p, mode)?;
        let t = self.trunk.forward(&[p as f64 * self.dt], mode)?;
        Ok(b.iter().zip(&t).map(|(x, y)| x * y).sum::<f64>() + self.output_bias)
    }

    /// Outputs for `p = 1..=m` in evaluation mode.
    ///
    /// With `fast`, the first branch layer for all windows comes from FFT
    /// convolutions; otherwise each window is formed and multiplied
    /// explicitly. The layers after the first are shared by both paths.
    pub fn forward_all(&self, signal: &[f64], fast: bool) -> Result<Vec<f64>> {
        if fast && !self.convolutional {
            return Err(Error::FastPathUndefined);
        }
        let inputs = ArrayView2::from_shape((1, signal.len()), signal)
            .map_err(|_| Error::InvalidArgument("signal view".into()))?;
        let first = if fast {
            let prep = self.prepare(inputs)?;
            self.first_layer(&prep)
        } else {
            if signal.len() != self.m() {
                return Err(Error::DimensionMismatch { expected: self.m(), got: signal.len() });
            }
            self.first_layer_direct(signal)?
        };
        Ok(self.finish(first, 1, None)?.0.into_raw_vec_and_offset().0)
    }

    fn first_layer_direct(&self, signal: &[f64]) -> Result<Array2<f64>> {
        let m = self.m();
        let layer = &self.branch.layers()[0];
        let mut out = Array2::zeros((m, layer.w.nrows()));
        for p in 1..=m {
            let v = ndarray::Array1::from(self.window(signal, p)?);
            out.row_mut(p - 1).assign(&(layer.w.dot(&v) + &layer.b));
        }
        Ok(out)
    }

    fn trunk_grid(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.m(), 1), |(j, _)| (j + 1) as f64 * self.dt)
    }

    /// First-layer pre-activations for every signal and window, stacked as
    /// `(n·m) × h1` with row `ℓ·m + (p-1)`.
    fn first_layer(&self, prep: &CausalPrepared) -> Array2<f64> {
        let m = self.m();
        let n = prep.inputs.nrows();
        let layer = &self.branch.layers()[0];
        let h1 = layer.w.nrows();
        let mut z = Array2::zeros((n * m, h1));
        if let Some(fft) = &prep.fft {
            let nf = fft.len();
            // kernels r_i[k] = W[i, m-1-k], two rows per complex transform
            let pairs: Vec<Vec<Complex64>> = (0..h1)
                .step_by(2)
                .map(|i| {
                    let mut buf = vec![Complex64::new(0.0, 0.0); nf];
                    for k in 0..m {
                        buf[k].re = layer.w[[i, m - 1 - k]];
                        if i + 1 < h1 {
                            buf[k].im = layer.w[[i + 1, m - 1 - k]];
                        }
                    }
                    fft.forward(&mut buf);
                    buf
                })
                .collect();
            let mut buf = vec![Complex64::new(0.0, 0.0); nf];
            for (l, spec) in prep.spectra.iter().enumerate() {
                for (q, r) in pairs.iter().enumerate() {
                    for k in 0..nf {
                        buf[k] = r[k] * spec[k];
                    }
                    fft.inverse(&mut buf);
                    let i = 2 * q;
                    for p in 0..m {
                        z[[l * m + p, i]] = buf[p].re + layer.b[i];
                        if i + 1 < h1 {
                            z[[l * m + p, i + 1]] = buf[p].im + layer.b[i + 1];
                        }
                    }
                }
            }
        } else {
            let wt = layer.w.t().to_owned();
            for l in 0..n {
                let mut acc = layer.b.clone();
                for p in 0..m {
                    acc.scaled_add(prep.inputs[[l, p]], &wt.row(p));
                    z.row_mut(l * m + p).assign(&acc);
                }
            }
        }
        z
    }

    /// Weight gradient of the first layer from `d_first` (`(n·m) × h1`).
    fn first_layer_grad(&self, prep: &CausalPrepared, d_first: &Array2<f64>) -> Array2<f64> {
        let m = self.m();
        let n = prep.inputs.nrows();
        let h1 = d_first.ncols();
        let mut dw = Array2::zeros((h1, m));
        if let Some(fft) = &prep.fft {
            let nf = fft.len();
            let npairs = h1.div_ceil(2);
            let mut acc = vec![vec![Complex64::new(0.0, 0.0); nf]; npairs];
            let mut buf = vec![Complex64::new(0.0, 0.0); nf];
            let dt = d_first.t();
            let dt = dt.as_standard_layout();
            let cols = dt.as_slice().expect("standard layout");
            let stride = n * m;
            for (l, spec) in prep.spectra.iter().enumerate() {
                for (q, a) in acc.iter_mut().enumerate() {
                    let i = 2 * q;
                    buf[m..].iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                    let re = &cols[i * stride + l * m..i * stride + (l + 1) * m];
                    for (b, &v) in buf.iter_mut().zip(re) {
                        *b = Complex64::new(v, 0.0);
                    }
                    if i + 1 < h1 {
                        let im = &cols[(i + 1) * stride + l * m..(i + 1) * stride + (l + 1) * m];
                        for (b, &v) in buf.iter_mut().zip(im) {
                            b.im = v;
                        }
                    }
                    fft.forward(&mut buf);
                    for k in 0..nf {
                        a[k] += buf[k] * spec[k].conj();
                    }
                }
            }
            // c_i[k] = Σ_p δ_i[p] u[p-k] is the gradient of r_i[k] = W[i, m-1-k]
            for (q, a) in acc.iter_mut().enumerate() {
                fft.inverse(a);
                let i = 2 * q;
                for k in 0..m {
                    dw[[i, m - 1 - k]] = a[k].re;
                    if i + 1 < h1 {
                        dw[[i + 1, m - 1 - k]] = a[k].im;
                    }
                }
            }
        } else {
            let mut dwt = Array2::<f64>::zeros((m, h1));
            for l in 0..n {
                let mut suffix = ndarray::Array1::<f64>::zeros(h1);
                for p in (0..m).rev() {
                    suffix += &d_first.row(l * m + p);
                    dwt.row_mut(p).scaled_add(prep.inputs[[l, p]], &suffix);
                }
            }
            dw.assign(&dwt.t());
        }
        dw
    }

    fn finish(
        &self,
        first: Array2<f64>,
        n: usize,
        dropout: Option<Dropout<'_>>,
    ) -> Result<(Array2<f64>, CausalTape)> {
        let m = self.m();
        let (bm, tm) = match dropout {
            Some(d) => {
                let bm = masks(&self.branch, n * m, d.branch, Some(&mut *d.rng));
                (bm, masks(&self.trunk, m, d.trunk, Some(d.rng)))
            }
            None => (vec![], vec![]),
        };
        let branch = self.branch.forward_from_first(first, &bm)?;
        let trunk = self.trunk.forward_batch(self.trunk_grid().view(), &tm)?;
        let mut pred = Array2::zeros((n, m));
        for l in 0..n {
            for p in 0..m {
                pred[[l, p]] = branch.output.row(l * m + p).dot(&trunk.output.row(p)) + self.output_bias;
            }
        }
        Ok((pred, CausalTape { branch, trunk }))
    }

    fn params_len(&self) -> usize {
        self.branch.param_count() + self.trunk.param_count() + self.train_bias as usize
    }
}

impl Operator for CausalityModel {
    type Prepared = CausalPrepared;
    type Tape = CausalTape;

    fn architecture(&self) -> Architecture {
        if self.convolutional {
            Architecture::Causality
        } else {
            Architecture::CausalityNoConv
        }
    }

    fn signal_len(&self) -> usize {
        self.m()
    }

    fn prepare(&self, inputs: ArrayView2<f64>) -> Result<CausalPrepared> {
        super::check_inputs(inputs, self.m())?;
        let inputs = inputs.to_owned();
        if !self.convolutional {
            return Ok(CausalPrepared { inputs, fft: None, spectra: vec![] });
        }
        let fft = Fft::new(next_pow2(2 * self.m()));
        let spectra = inputs.rows().into_iter().map(|r| fft.forward_real(&r.to_vec())).collect();
        Ok(CausalPrepared { inputs, fft: Some(fft), spectra })
    }

    fn forward(&self, prep: &CausalPrepared, dropout: Option<Dropout<'_>>) -> Result<(Array2<f64>, CausalTape)> {
        let first = self.first_layer(prep);
        self.finish(first, prep.inputs.nrows(), dropout)
    }

    fn backward(&self, prep: &CausalPrepared, tape: &CausalTape, d_pred: &Array2<f64>) -> Vec<f64> {
        let m = self.m();
        let n = prep.inputs.nrows();
        let width = tape.trunk.output.ncols();
        let mut db = Array2::zeros((n * m, width));
        let mut dt = Array2::zeros((m, width));
        for l in 0..n {
            for p in 0..m {
                let g = d_pred[[l, p]];
                if g != 0.0 {
                    db.row_mut(l * m + p).scaled_add(g, &tape.trunk.output.row(p));
                    dt.row_mut(p).scaled_add(g, &tape.branch.output.row(l * m + p));
                }
            }
        }
        let mut bw = self.branch.backward(&tape.branch, &db, false);
        bw.grads.layers[0].w = self.first_layer_grad(prep, &bw.d_first);
        let mut out = Vec::with_capacity(self.params_len());
        bw.grads.write_flat(&mut out);
        self.trunk.backward(&tape.trunk, &dt, false).grads.write_flat(&mut out);
        if self.train_bias {
            out.push(d_pred.sum());
        }
        out
    }

    fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.params_len());
        self.branch.write_params(&mut out);
        self.trunk.write_params(&mut out);
        if self.train_bias {
            out.push(self.output_bias);
        }
        out
    }

    fn set_params(&mut self, params: &[f64]) {
        let k = self.branch.read_params(params);
        let k = k + self.trunk.read_params(&params[k..]);
        if self.train_bias {
            self.output_bias = params[k];
        }
    }

    fn l2_mask(&self, reg: &RegConfig) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.params_len());
        self.branch.write_l2_mask(reg.l2_branch, &mut out);
        self.trunk.write_l2_mask(reg.l2_trunk, &mut out);
        if self.train_bias {
            out.push(0.0);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(conv: bool, m: usize, seed: u64) -> CausalityModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CausalityModel::new(&[m, 7, 5], &[1, 6, 5], Activation::Tanh, conv, 0.02, &mut rng).unwrap()
    }

    #[test]
    fn windows() {
        let u = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(causal_branch_input(&u, 2).unwrap(), vec![0.0, 0.0, 1.0, 2.0]);
        assert_eq!(noconv_branch_input(&u, 2).unwrap(), vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(causal_branch_input(&u, 0).unwrap(), vec![0.0; 4]);
        assert_eq!(causal_branch_input(&u, 4).unwrap(), u.to_vec());
        assert!(causal_branch_input(&u, 5).is_err());
    }

    #[test]
    fn batched_paths_match_single_windows() {
        for conv in [true, false] {
            let md = model(conv, 9, 1);
            let u: Vec<f64> = (0..9).map(|j| (j as f64 * 0.7).sin()).collect();
            let pred = md.predict(ArrayView2::from_shape((1, 9), &u).unwrap()).unwrap();
            for p in 1..=9 {
                let single = md.forward(&u, p, Mode::Eval).unwrap();
                assert!((pred[[0, p - 1]] - single).abs() < 1e-12, "conv={conv} p={p}");
            }
        }
    }

    #[test]
    fn fast_path_rules() {
        let md = model(false, 8, 2);
        assert!(matches!(md.forward_all(&[0.0; 8], true), Err(Error::FastPathUndefined)));
        let md = model(true, 8, 2);
        let z = md.forward_all(&[0.0; 8], true).unwrap();
        let first = md.forward(&[0.0; 8], 0, Mode::Eval).unwrap();
        // zero signal: every window is the zero vector, only the trunk varies
        assert_eq!(md.branch_features(&[0.0; 8], 3, Mode::Eval).unwrap(), md.branch_features(&[0.0; 8], 0, Mode::Eval).unwrap());
        assert!(z.iter().all(|v| v.is_finite()) && first.is_finite());
    }
}
