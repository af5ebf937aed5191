use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::{check_inputs, check_pair, masks, Architecture, Dropout, Operator};
use crate::error::{Error, Result};
use crate::neuralcore::{Activation, Cache, Mlp, Mode, RegConfig};

/// Branch and trunk networks whose outputs are combined by a dot product.
///
/// The trunk sees `t / T` with `T = dt·(m-1)`, so the grid maps onto
/// `[0, 1]`. An optional scalar output bias is off by default.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepOnetModel {
    pub branch: Mlp,
    pub trunk: Mlp,
    pub output_bias: f64,
    pub train_bias: bool,
    pub dt: f64,
}

pub struct DeepOnetTape {
    branch: Cache,
    trunk: Cache,
}

/// Normalized trunk coordinates `j / (m-1)` for `j = 0..m`.
pub(crate) fn unit_grid(m: usize) -> Array2<f64> {
    let span = (m.max(2) - 1) as f64;
    Array2::from_shape_fn((m, 1), |(j, _)| j as f64 / span)
}

pub(crate) fn pair_backward(
    branch: &Mlp,
    trunk: &Mlp,
    bcache: &Cache,
    tcache: &Cache,
    d_pred: &Array2<f64>,
    out: &mut Vec<f64>,
) {
    let db = d_pred.dot(&tcache.output);
    let dt = d_pred.t().dot(&bcache.output);
    branch.backward(bcache, &db, false).grads.write_flat(out);
    trunk.backward(tcache, &dt, false).grads.write_flat(out);
}

impl DeepOnetModel {
    /// `branch_dims[0]` is the signal length `m`; `trunk_dims[0]` must be 1.
    pub fn new(
        branch_dims: &[usize],
        trunk_dims: &[usize],
        activation: Activation,
        dt: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if trunk_dims.first() != Some(&1) {
            return Err(Error::InvalidArgument("trunk input width must be 1".into()));
        }
        let branch = Mlp::new(branch_dims, activation, rng)?;
        let trunk = Mlp::new(trunk_dims, activation, rng)?;
        Self::from_parts(branch, trunk, dt)
    }

    pub fn from_parts(branch: Mlp, trunk: Mlp, dt: f64) -> Result<Self> {
        check_pair(&branch, trunk.output_dim())?;
        if trunk.input_dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: trunk.input_dim() });
        }
        Ok(Self { branch, trunk, output_bias: 0.0, train_bias: false, dt })
    }

    /// `branch(signal) · trunk(t_in) + bias` for one trunk coordinate.
    pub fn forward_at(&self, signal: &[f64], t_in: f64, mode: Mode) -> Result<f64> {
        let b = self.branch.forward(signal, mode)?;
        let t = self.trunk.forward(&[t_in], mode)?;
        Ok(b.iter().zip(&t).map(|(x, y)| x * y).sum::<f64>() + self.output_bias)
    }
}

impl Operator for DeepOnetModel {
    type Prepared = Array2<f64>;
    type Tape = DeepOnetTape;

    fn architecture(&self) -> Architecture {
        Architecture::DeepOnet
    }

    fn signal_len(&self) -> usize {
        self.branch.input_dim()
    }

    fn prepare(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_inputs(inputs, self.signal_len())?;
        Ok(inputs.to_owned())
    }

    fn forward(&self, prep: &Array2<f64>, dropout: Option<Dropout<'_>>) -> Result<(Array2<f64>, DeepOnetTape)> {
        let m = self.signal_len();
        let (bm, tm) = match dropout {
            Some(d) => {
                let bm = masks(&self.branch, prep.nrows(), d.branch, Some(&mut *d.rng));
                (bm, masks(&self.trunk, m, d.trunk, Some(d.rng)))
            }
            None => (vec![], vec![]),
        };
        let branch = self.branch.forward_batch(prep.view(), &bm)?;
        let trunk = self.trunk.forward_batch(unit_grid(m).view(), &tm)?;
        let pred = branch.output.dot(&trunk.output.t()) + self.output_bias;
        Ok((pred, DeepOnetTape { branch, trunk }))
    }

    fn backward(&self, _prep: &Array2<f64>, tape: &DeepOnetTape, d_pred: &Array2<f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.params_len());
        pair_backward(&self.branch, &self.trunk, &tape.branch, &tape.trunk, d_pred, &mut out);
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

impl DeepOnetModel {
    fn params_len(&self) -> usize {
        self.branch.param_count() + self.trunk.param_count() + self.train_bias as usize
    }
}
