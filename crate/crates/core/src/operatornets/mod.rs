//! Operator networks mapping a sampled ground motion to a response history.
//!
//! Every model predicts a whole trajectory per input signal: an `n × m`
//! prediction for an `n × m` input batch. Training goes through the
//! [`Operator`] trait: a model-specific `prepare` step caches whatever depends
//! only on the inputs (signal spectra for the causal branch), then `forward`
//! and `backward` work on flat parameter vectors so one Adam loop serves all
//! architectures.

mod causality;
mod deeponet;
mod gradcheck;
mod modelfile;
mod mstrunk;
mod pod;

pub use causality::{causal_branch_input, noconv_branch_input, CausalityModel, CausalPrepared};
pub use deeponet::DeepOnetModel;
pub use gradcheck::check_operator_gradients;
pub use modelfile::{load_model, save_model, AnyModel, MODEL_MAGIC, MODEL_VERSION};
pub use mstrunk::{default_scales, MsDeepOnetModel, MsTrunk};
pub use pod::{pod_basis, PodBasis, PodDeepOnetModel};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::neuralcore::{Mlp, RegConfig};

/// Architecture tag stored in model files and configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    DeepOnet,
    Pod,
    MsDeepOnet,
    Causality,
    CausalityNoConv,
}

impl Architecture {
    pub const ALL: [Architecture; 5] = [
        Architecture::DeepOnet,
        Architecture::Pod,
        Architecture::MsDeepOnet,
        Architecture::Causality,
        Architecture::CausalityNoConv,
    ];

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    /// Causal models are trained with the zero-signal / zero-response pair.
    pub fn is_causal(self) -> bool {
        matches!(self, Architecture::Causality | Architecture::CausalityNoConv)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::DeepOnet => "deeponet",
            Architecture::Pod => "pod",
            Architecture::MsDeepOnet => "msdeeponet",
            Architecture::Causality => "causality",
            Architecture::CausalityNoConv => "causality_noconv",
        })
    }
}

impl FromStr for Architecture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown architecture `{s}`")))
    }
}

/// Dropout rates plus the stream the masks are drawn from.
pub struct Dropout<'a> {
    pub branch: f64,
    pub trunk: f64,
    pub rng: &'a mut ChaCha8Rng,
}

/// A trainable operator model.
pub trait Operator: Clone {
    /// Input-dependent data reused across epochs.
    type Prepared;
    /// Intermediates kept from `forward` for `backward`.
    type Tape;

    fn architecture(&self) -> Architecture;

    /// Number of samples per input signal (and per predicted trajectory).
    fn signal_len(&self) -> usize;

    fn prepare(&self, inputs: ArrayView2<f64>) -> Result<Self::Prepared>;

    /// `n × m` predictions. Dropout applies only when `dropout` is given.
    fn forward(&self, prep: &Self::Prepared, dropout: Option<Dropout<'_>>) -> Result<(Array2<f64>, Self::Tape)>;

    /// Flat parameter gradient for upstream gradient `d_pred` (`n × m`).
    fn backward(&self, prep: &Self::Prepared, tape: &Self::Tape, d_pred: &Array2<f64>) -> Vec<f64>;

    fn params(&self) -> Vec<f64>;

    fn set_params(&mut self, params: &[f64]);

    /// Per-parameter L2 coefficients, aligned with [`params`](Self::params).
    fn l2_mask(&self, reg: &RegConfig) -> Vec<f64>;

    /// Evaluation-mode predictions.
    fn predict(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        let prep = self.prepare(inputs)?;
        Ok(self.forward(&prep, None)?.0)
    }
}

pub(crate) fn check_inputs(inputs: ArrayView2<f64>, m: usize) -> Result<()> {
    if inputs.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, got: inputs.ncols() });
    }
    Ok(())
}

pub(crate) fn check_pair(branch: &Mlp, trunk_out: usize) -> Result<()> {
    if branch.output_dim() != trunk_out {
        return Err(Error::DimensionMismatch { expected: branch.output_dim(), got: trunk_out });
    }
    Ok(())
}

pub(crate) fn masks(net: &Mlp, rows: usize, rate: f64, rng: Option<&mut ChaCha8Rng>) -> Vec<Option<Array2<f64>>> {
    match rng {
        Some(r) if rate > 0.0 => net.dropout_masks(rows, rate, r),
        _ => vec![],
    }
}
