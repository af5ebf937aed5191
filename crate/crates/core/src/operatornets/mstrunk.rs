use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::deeponet::unit_grid;
use super::{check_inputs, masks, Architecture, Dropout, Operator};
use crate::error::{Error, Result};
use crate::neuralcore::{Activation, Cache, Mlp, Mode, RegConfig};

/// `S` equally spaced scales from 1 to `1 + 780π`.
pub fn default_scales(count: usize) -> Vec<f64> {
    let top = 780.0 * std::f64::consts::PI;
    match count {
        0 => vec![],
        1 => vec![1.0],
        _ => (0..count).map(|i| 1.0 + i as f64 * top / (count - 1) as f64).collect(),
    }
}

/// Multi-scale trunk `Σ_i w_i · subnet_i(S_i · t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MsTrunk {
    pub subnets: Vec<Mlp>,
    pub scales: Vec<f64>,
    pub combo_weights: Vec<f64>,
}

impl MsTrunk {
    /// One subnet of shape `dims` per scale; combination weights start at 1.
    pub fn new(dims: &[usize], scales: Vec<f64>, activation: Activation, rng: &mut impl Rng) -> Result<Self> {
        let subnets = scales.iter().map(|_| Mlp::new(dims, activation, rng)).collect::<Result<Vec<_>>>()?;
        let w = vec![1.0; scales.len()];
        Self::from_parts(subnets, scales, w)
    }

    pub fn from_parts(subnets: Vec<Mlp>, scales: Vec<f64>, combo_weights: Vec<f64>) -> Result<Self> {
        if subnets.is_empty() || subnets.len() != scales.len() || scales.len() != combo_weights.len() {
            return Err(Error::InvalidArgument("multi-scale trunk needs matching subnets, scales and weights".into()));
        }
        if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidArgument("scales must be finite and positive".into()));
        }
        let width = subnets[0].output_dim();
        if subnets.iter().any(|s| s.output_dim() != width || s.input_dim() != 1) {
            return Err(Error::InvalidArgument("subnets must map 1 input to equal widths".into()));
        }
        Ok(Self { subnets, scales, combo_weights })
    }

    pub fn output_dim(&self) -> usize {
        self.subnets[0].output_dim()
    }

    /// Trunk features at `t` (already scaled to `[0, 1]` by the caller).
    pub fn forward(&self, t: f64, mode: Mode) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_dim()];
        for ((net, s), w) in self.subnets.iter().zip(&self.scales).zip(&self.combo_weights) {
            for (o, v) in out.iter_mut().zip(net.forward(&[s * t], mode)?) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    fn forward_batch(&self, t: &Array2<f64>, masks: Vec<Vec<Option<Array2<f64>>>>) -> Result<(Array2<f64>, Vec<Cache>)> {
        let mut out = Array2::zeros((t.nrows(), self.output_dim()));
        let mut caches = Vec::with_capacity(self.subnets.len());
        for (i, net) in self.subnets.iter().enumerate() {
            let c = net.forward_batch((t * self.scales[i]).view(), masks.get(i).map_or(&[][..], |v| v))?;
            out.scaled_add(self.combo_weights[i], &c.output);
            caches.push(c);
        }
        Ok((out, caches))
    }
}

/// DeepONet with a multi-scale trunk fed `t / T`.
#[derive(Debug, Clone, PartialEq)]
pub struct MsDeepOnetModel {
    pub branch: Mlp,
    pub trunk: MsTrunk,
    pub output_bias: f64,
    pub train_bias: bool,
    pub dt: f64,
}

pub struct MsTape {
    branch: Cache,
    trunk: Vec<Cache>,
    trunk_out: Array2<f64>,
}

impl MsDeepOnetModel {
    pub fn new(
        branch_dims: &[usize],
        subnet_dims: &[usize],
        scales: Vec<f64>,
        activation: Activation,
        dt: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let branch = Mlp::new(branch_dims, activation, rng)?;
        let trunk = MsTrunk::new(subnet_dims, scales, activation, rng)?;
        Self::from_parts(branch, trunk, dt)
    }

    pub fn from_parts(branch: Mlp, trunk: MsTrunk, dt: f64) -> Result<Self> {
        if branch.output_dim() != trunk.output_dim() {
            return Err(Error::DimensionMismatch { expected: branch.output_dim(), got: trunk.output_dim() });
        }
        Ok(Self { branch, trunk, output_bias: 0.0, train_bias: false, dt })
    }
}

impl Operator for MsDeepOnetModel {
    type Prepared = Array2<f64>;
    type Tape = MsTape;

    fn architecture(&self) -> Architecture {
        Architecture::MsDeepOnet
    }

    fn signal_len(&self) -> usize {
        self.branch.input_dim()
    }

    fn prepare(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_inputs(inputs, self.signal_len())?;
        Ok(inputs.to_owned())
    }

    fn forward(&self, prep: &Array2<f64>, dropout: Option<Dropout<'_>>) -> Result<(Array2<f64>, MsTape)> {
        let m = self.signal_len();
        let (bm, tm) = match dropout {
            Some(d) => {
                let bm = masks(&self.branch, prep.nrows(), d.branch, Some(&mut *d.rng));
                let tm = self.trunk.subnets.iter().map(|s| masks(s, m, d.trunk, Some(&mut *d.rng))).collect();
                (bm, tm)
            }
            None => (vec![], vec![]),
        };
        let branch = self.branch.forward_batch(prep.view(), &bm)?;
        let (trunk_out, trunk) = self.trunk.forward_batch(&unit_grid(m), tm)?;
        let pred = branch.output.dot(&trunk_out.t()) + self.output_bias;
        Ok((pred, MsTape { branch, trunk, trunk_out }))
    }

    fn backward(&self, _prep: &Array2<f64>, tape: &MsTape, d_pred: &Array2<f64>) -> Vec<f64> {
        let mut out = vec![];
        let db = d_pred.dot(&tape.trunk_out);
        let dt = d_pred.t().dot(&tape.branch.output);
        self.branch.backward(&tape.branch, &db, false).grads.write_flat(&mut out);
        for (i, net) in self.trunk.subnets.iter().enumerate() {
            let d_sub = &dt * self.trunk.combo_weights[i];
            net.backward(&tape.trunk[i], &d_sub, false).grads.write_flat(&mut out);
        }
        for c in &tape.trunk {
            out.push((&dt * &c.output).sum());
        }
        if self.train_bias {
            out.push(d_pred.sum());
        }
        out
    }

    fn params(&self) -> Vec<f64> {
        let mut out = vec![];
        self.branch.write_params(&mut out);
        for s in &self.trunk.subnets {
            s.write_params(&mut out);
        }
        out.extend(&self.trunk.combo_weights);
        if self.train_bias {
            out.push(self.output_bias);
        }
        out
    }

    fn set_params(&mut self, params: &[f64]) {
        let mut k = self.branch.read_params(params);
        for s in &mut self.trunk.subnets {
            k += s.read_params(&params[k..]);
        }
        for w in &mut self.trunk.combo_weights {
            *w = params[k];
            k += 1;
        }
        if self.train_bias {
            self.output_bias = params[k];
        }
    }

    fn l2_mask(&self, reg: &RegConfig) -> Vec<f64> {
        let mut out = vec![];
        self.branch.write_l2_mask(reg.l2_branch, &mut out);
        for s in &self.trunk.subnets {
            s.write_l2_mask(reg.l2_trunk, &mut out);
        }
        out.extend(std::iter::repeat_n(reg.l2_trunk, self.trunk.combo_weights.len()));
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

    #[test]
    fn scale_list() {
        let s = default_scales(20);
        assert_eq!(s.len(), 20);
        assert_eq!(s[0], 1.0);
        assert!((s[19] - (1.0 + 780.0 * std::f64::consts::PI)).abs() < 1e-9);
        assert!((s[1] - (1.0 + 780.0 * std::f64::consts::PI / 19.0)).abs() < 1e-12);
    }

    #[test]
    fn reductions() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::new(&[1, 5, 3], Activation::Tanh, &mut rng).unwrap();
        let one = MsTrunk::from_parts(vec![net.clone()], vec![1.0], vec![1.0]).unwrap();
        assert_eq!(one.forward(0.37, Mode::Eval).unwrap(), net.forward(&[0.37], Mode::Eval).unwrap());
        let two = MsTrunk::from_parts(vec![net.clone(), net.clone()], vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let doubled: Vec<f64> = net.forward(&[0.37], Mode::Eval).unwrap().iter().map(|v| 2.0 * v).collect();
        assert_eq!(two.forward(0.37, Mode::Eval).unwrap(), doubled);
        let zero = MsTrunk::from_parts(vec![net.clone(), net], vec![1.0, 3.0], vec![0.0, 0.0]).unwrap();
        assert!(zero.forward(0.8, Mode::Eval).unwrap().iter().all(|&v| v == 0.0));
        assert!(MsTrunk::from_parts(vec![], vec![], vec![]).is_err());
    }
}
