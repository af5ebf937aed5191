use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::{check_inputs, masks, Architecture, Dropout, Operator};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::neuralcore::{Activation, Cache, Mlp, Mode, RegConfig};

/// Mean trajectory and orthonormal basis of the centered training outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    pub mean: Array1<f64>,
    /// `p × m`, rows orthonormal, ordered by descending singular value.
    pub basis: Array2<f64>,
    pub singular_values: Vec<f64>,
}

/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-6;

/// Top-`p` right singular vectors of the centered `n × m` output matrix,
/// from the `n × n` Gram matrix.
///
/// Centering removes one dimension, so `n` rows span at most `n - 1`
/// directions. Asking for `p = n` is still allowed: the missing direction
/// has singular value 0 and is filled with a unit vector orthogonal to the
/// others (it does not affect reconstruction of the training rows). Any
/// other zero among the top `p` is an error.
pub fn pod_basis(outputs: ArrayView2<f64>, p: usize) -> Result<PodBasis> {
    let (n, m) = outputs.dim();
    if p == 0 || p > n || n > m {
        return Err(Error::InvalidArgument(format!("POD needs 1 <= p <= n <= m, got p={p}, n={n}, m={m}")));
    }
    let mean = outputs.mean_axis(Axis(0)).unwrap();
    let centered = &outputs - &mean;
    let gram = centered.dot(&centered.t());
    let (w, y) = symmetric_eigen(&gram)?;

    let sigma: Vec<f64> = (0..n).rev().map(|k| w[k].max(0.0).sqrt()).collect();
    let top = sigma[0];
    let rank = sigma.iter().take_while(|&&s| s > RANK_TOL * top && s > 0.0).count();
    let needed = p.min(n - 1).max(1);
    if rank < needed {
        return Err(Error::RankDeficient { index: rank, value: sigma.get(rank).copied().unwrap_or(0.0) });
    }

    let mut basis = Array2::zeros((p, m));
    for k in 0..p.min(rank) {
        let col = y.column(n - 1 - k);
        let v = centered.t().dot(&col) / sigma[k];
        basis.row_mut(k).assign(&v);
    }
    let mut singular_values: Vec<f64> = sigma[..p.min(rank)].to_vec();
    // completion of the structurally missing direction
    let mut candidate = 0;
    for k in rank..p {
        loop {
            let mut v = Array1::zeros(m);
            v[candidate % m] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for r in 0..k {
                    let b = basis.row(r);
                    let c = b.dot(&v);
                    v.scaled_add(-c, &b);
                }
            }
            let norm = v.dot(&v).sqrt();
            if norm > 0.5 {
                basis.row_mut(k).assign(&(v / norm));
                break;
            }
        }
        singular_values.push(0.0);
    }
    // one modified Gram-Schmidt pass tightens orthonormality
    for k in 0..p {
        for r in 0..k {
            let c = basis.row(r).dot(&basis.row(k));
            let prev = basis.row(r).to_owned();
            basis.row_mut(k).scaled_add(-c, &prev);
        }
        let norm = basis.row(k).dot(&basis.row(k)).sqrt();
        basis.row_mut(k).mapv_inplace(|x| x / norm);
        let imax = (0..m).max_by(|&a, &b| basis[[k, a]].abs().total_cmp(&basis[[k, b]].abs())).unwrap();
        if basis[[k, imax]] < 0.0 {
            basis.row_mut(k).mapv_inplace(|x| -x);
        }
    }
    Ok(PodBasis { mean, basis, singular_values })
}

/// Branch network whose outputs weight a fixed POD basis.
///
/// The branch coefficients multiply the basis rescaled to unit RMS over the
/// grid (`√m` times the orthonormal rows), so they are of the same order as
/// the trunk outputs of a vanilla DeepONet rather than of `‖x‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct PodDeepOnetModel {
    pub branch: Mlp,
    pub pod: PodBasis,
    trunk: Array2<f64>,
}

impl PodDeepOnetModel {
    /// `branch_dims` ends in the basis size `p`.
    pub fn new(branch_dims: &[usize], activation: Activation, pod: PodBasis, rng: &mut impl Rng) -> Result<Self> {
        Self::from_parts(Mlp::new(branch_dims, activation, rng)?, pod)
    }

    pub fn from_parts(branch: Mlp, pod: PodBasis) -> Result<Self> {
        if branch.output_dim() != pod.basis.nrows() {
            return Err(Error::DimensionMismatch { expected: pod.basis.nrows(), got: branch.output_dim() });
        }
        if branch.input_dim() != pod.basis.ncols() {
            return Err(Error::DimensionMismatch { expected: pod.basis.ncols(), got: branch.input_dim() });
        }
        let trunk = &pod.basis * (pod.basis.ncols() as f64).sqrt();
        Ok(Self { branch, pod, trunk })
    }

    /// Basis rows as seen by the branch coefficients.
    pub fn trunk(&self) -> &Array2<f64> {
        &self.trunk
    }

    /// Whole trajectory `Σ_k branch_k(signal) √m B_k + B_0`.
    pub fn forward_signal(&self, signal: &[f64], mode: Mode) -> Result<Array1<f64>> {
        let c = Array1::from(self.branch.forward(signal, mode)?);
        Ok(c.dot(&self.trunk) + &self.pod.mean)
    }
}

impl Operator for PodDeepOnetModel {
    type Prepared = Array2<f64>;
    type Tape = Cache;

    fn architecture(&self) -> Architecture {
        Architecture::Pod
    }

    fn signal_len(&self) -> usize {
        self.branch.input_dim()
    }

    fn prepare(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_inputs(inputs, self.signal_len())?;
        Ok(inputs.to_owned())
    }

    fn forward(&self, prep: &Array2<f64>, dropout: Option<Dropout<'_>>) -> Result<(Array2<f64>, Cache)> {
        let bm = match dropout {
            Some(d) => masks(&self.branch, prep.nrows(), d.branch, Some(d.rng)),
            None => vec![],
        };
        let cache = self.branch.forward_batch(prep.view(), &bm)?;
        let pred = cache.output.dot(&self.trunk) + &self.pod.mean;
        Ok((pred, cache))
    }

    fn backward(&self, _prep: &Array2<f64>, tape: &Cache, d_pred: &Array2<f64>) -> Vec<f64> {
        let db = d_pred.dot(&self.trunk.t());
        let mut out = Vec::with_capacity(self.branch.param_count());
        self.branch.backward(tape, &db, false).grads.write_flat(&mut out);
        out
    }

    fn params(&self) -> Vec<f64> {
        let mut out = vec![];
        self.branch.write_params(&mut out);
        out
    }

    fn set_params(&mut self, params: &[f64]) {
        self.branch.read_params(params);
    }

    fn l2_mask(&self, reg: &RegConfig) -> Vec<f64> {
        let mut out = vec![];
        self.branch.write_l2_mask(reg.l2_branch, &mut out);
        out
    }
}

impl PodBasis {
    /// Projects `rows` onto the basis and maps back.
    pub fn reconstruct(&self, rows: ArrayView2<f64>) -> Array2<f64> {
        let c = (&rows - &self.mean).dot(&self.basis.t());
        c.dot(&self.basis) + &self.mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn orthonormality_error(b: &Array2<f64>) -> f64 {
        let g = b.dot(&b.t());
        let mut worst = 0.0f64;
        for ((i, j), v) in g.indexed_iter() {
            worst = worst.max((v - if i == j { 1.0 } else { 0.0 }).abs());
        }
        worst
    }

    #[test]
    fn rank_one_pair() {
        let v = Array1::from(vec![3.0, -4.0, 0.0]);
        let mut x = Array2::zeros((2, 3));
        x.row_mut(0).assign(&v);
        x.row_mut(1).assign(&(-&v));
        let pod = pod_basis(x.view(), 1).unwrap();
        assert!(pod.mean.iter().all(|&m| m == 0.0));
        let expect = [-0.6, 0.8, 0.0];
        for (a, b) in pod.basis.row(0).iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn identical_rows_are_rank_deficient() {
        let x = Array2::from_shape_fn((3, 5), |(_, j)| j as f64);
        let err = pod_basis(x.view(), 1).unwrap_err();
        assert!(err.to_string().contains("rank deficient"));
        assert!(pod_basis(x.view(), 4).is_err());
    }

    #[test]
    fn full_rank_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Array2::from_shape_fn((5, 40), |_| rng.gen_range(-1.0..1.0));
        let pod = pod_basis(x.view(), 5).unwrap();
        assert!(orthonormality_error(&pod.basis) < 1e-10);
        assert!(pod.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let err = (&pod.reconstruct(x.view()) - &x).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(err < 1e-8);
    }

    #[test]
    fn forward_is_linear_combination() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((4, 12), |_| rng.gen_range(-1.0..1.0));
        let pod = pod_basis(x.view(), 3).unwrap();
        let mut model = PodDeepOnetModel::new(&[12, 6, 3], Activation::Tanh, pod.clone(), &mut rng).unwrap();
        let sig: Vec<f64> = (0..12).map(|j| (j as f64).cos()).collect();
        let c = model.branch.forward(&sig, Mode::Eval).unwrap();
        let out = model.forward_signal(&sig, Mode::Eval).unwrap();
        for j in 0..12 {
            let manual = pod.mean[j] + (0..3).map(|k| c[k] * 12f64.sqrt() * pod.basis[[k, j]]).sum::<f64>();
            assert!((out[j] - manual).abs() < 1e-12);
        }
        let last = model.branch.layers().len() - 1;
        model.branch.layers_mut()[last].w.fill(0.0);
        assert_eq!(model.forward_signal(&sig, Mode::Eval).unwrap(), pod.mean);
        model.branch.layers_mut()[last].b = ndarray::array![0.0, 1.0, 0.0];
        let one_hot = model.forward_signal(&sig, Mode::Eval).unwrap();
        assert_eq!(one_hot, &pod.mean + &model.trunk().row(1));
        let rms = (model.trunk().row(1).mapv(|v| v * v).sum() / 12.0).sqrt();
        assert!((rms - 1.0).abs() < 1e-12);
    }
}
