use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::{s, Array1, Array2};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metrics::{rel_err, rel_l2, row_weights, weighted_loss_and_grad};
use super::normalize::GaussianStats;
use crate::error::{Error, Result};
use crate::neuralcore::{adam_step, lr_at, AdamState, LrSchedule, RegConfig};
use crate::operatornets::{Dropout, Operator};
use crate::signalgen::ResponseDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mse,
    /// Rows weighted by `1 / max|x_ℓ|`.
    WeightedMse,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Mse => "mse",
            LossKind::WeightedMse => "weighted_mse",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(LossKind::Mse),
            "weighted_mse" => Ok(LossKind::WeightedMse),
            other => Err(Error::InvalidArgument(format!("unknown loss `{other}`"))),
        }
    }
}

/// Input normalization applied before the branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    None,
    /// Per-time-sample Gaussian statistics of the training inputs.
    Gaussian,
}

impl FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Normalization::None),
            "gaussian" => Ok(Normalization::Gaussian),
            other => Err(Error::InvalidArgument(format!("unknown normalization `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub schedule: LrSchedule,
    pub epochs: usize,
    pub reg: RegConfig,
    /// Seeds dropout masks and time-index sampling.
    pub seed: u64,
    pub normalization: Normalization,
    /// Time indices per step; `None` uses all `m` (full batch).
    pub time_batch: Option<usize>,
    /// Appends the zero-signal / zero-response pair to the training set.
    pub include_ic_pair: bool,
    /// Test metrics are computed on epochs divisible by this (and the last).
    pub eval_every: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl TrainConfig {
    pub fn new(schedule: LrSchedule, epochs: usize) -> Self {
        Self {
            loss: LossKind::Mse,
            schedule,
            epochs,
            reg: RegConfig::default(),
            seed: 0,
            normalization: Normalization::None,
            time_batch: None,
            include_ic_pair: false,
            eval_every: 1,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidArgument("eval_every must be >= 1".into()));
        }
        if self.time_batch == Some(0) {
            return Err(Error::InvalidArgument("time batch must be >= 1".into()));
        }
        self.reg.validate()
    }
}

/// Metrics of one epoch, measured with the parameters the epoch starts from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub loss: f64,
    pub train_rel_l2: f64,
    pub test_rel_l2: Option<f64>,
}

/// Training curves and final per-sample errors. `wall_clock_s` is left out
/// of equality comparisons.
#[derive(Debug, Clone)]
pub struct RunHistory {
    pub records: Vec<EpochRecord>,
    pub final_train_rel_l2: f64,
    pub final_test_rel_l2: Option<f64>,
    pub final_train_rel_err: Vec<f64>,
    pub final_test_rel_err: Vec<f64>,
    pub best_epoch: usize,
    pub wall_clock_s: f64,
}

impl PartialEq for RunHistory {
    fn eq(&self, o: &Self) -> bool {
        self.records == o.records
            && self.final_train_rel_l2 == o.final_train_rel_l2
            && self.final_test_rel_l2 == o.final_test_rel_l2
            && self.final_train_rel_err == o.final_train_rel_err
            && self.final_test_rel_err == o.final_test_rel_err
            && self.best_epoch == o.best_epoch
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    /// Parameters after the last epoch.
    pub model: M,
    /// Parameters with the lowest monitored test error (train error when no
    /// test set is given).
    pub best: M,
    pub history: RunHistory,
    pub stats: Option<GaussianStats>,
}

fn per_row_rel_err(pred: &Array2<f64>, truth: &Array2<f64>) -> Result<Vec<f64>> {
    pred.rows().into_iter().zip(truth.rows()).map(|(p, x)| rel_err(p, x)).collect()
}

/// Full-batch Adam training. One epoch is one optimizer step over every
/// sample and every (or the sampled) time index.
pub fn train<M: Operator>(
    mut model: M,
    cfg: &TrainConfig,
    train_ds: &ResponseDataset,
    test_ds: Option<&ResponseDataset>,
) -> Result<TrainOutcome<M>> {
    cfg.validate()?;
    let start = Instant::now();
    let m = model.signal_len();
    for ds in std::iter::once(train_ds).chain(test_ds) {
        if ds.m != m {
            return Err(Error::DimensionMismatch { expected: m, got: ds.m });
        }
    }
    if train_ds.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }

    let raw_x = train_ds.input_matrix();
    let truth = train_ds.output_matrix();
    let n = truth.nrows();
    let stats = (cfg.normalization == Normalization::Gaussian).then(|| GaussianStats::fit(raw_x.view()));
    let normalize = |x: Array2<f64>| match &stats {
        Some(s) => s.apply(x.view()),
        None => x,
    };

    let (mut x, mut y) = (raw_x, truth.clone());
    if cfg.include_ic_pair {
        x.push_row(Array1::zeros(m).view()).expect("row width");
        y.push_row(Array1::zeros(m).view()).expect("row width");
    }
    let x = normalize(x);
    let weights = match cfg.loss {
        LossKind::Mse => Array1::ones(y.nrows()),
        LossKind::WeightedMse => row_weights(y.view(), cfg.include_ic_pair)?,
    };
    let prep = model.prepare(x.view())?;
    let test = match test_ds {
        Some(ds) if !ds.is_empty() => {
            Some((model.prepare(normalize(ds.input_matrix()).view())?, ds.output_matrix()))
        }
        _ => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = model.params();
    let l2 = model.l2_mask(&cfg.reg);
    let mut adam = AdamState::with_hyper(params.len(), cfg.beta1, cfg.beta2, cfg.eps);
    let dropping = cfg.reg.dropout_branch > 0.0 || cfg.reg.dropout_trunk > 0.0;
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;

    for epoch in 0..cfg.epochs {
        let lr = lr_at(&cfg.schedule, epoch);
        let dropout = dropping.then_some(Dropout {
            branch: cfg.reg.dropout_branch,
            trunk: cfg.reg.dropout_trunk,
            rng: &mut rng,
        });
        let (pred, tape) = model.forward(&prep, dropout)?;
        let cols: Option<Vec<usize>> = match cfg.time_batch {
            Some(b) if b < m => {
                let mut c = sample(&mut rng, m, b).into_vec();
                c.sort_unstable();
                Some(c)
            }
            _ => None,
        };
        let (loss, grad) = weighted_loss_and_grad(pred.view(), y.view(), weights.view(), cols.as_deref());
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }

        let train_rel = if dropping {
            rel_l2(model.forward(&prep, None)?.0.slice(s![..n, ..]), truth.view())?
        } else {
            rel_l2(pred.slice(s![..n, ..]), truth.view())?
        };
        let test_rel = match &test {
            Some((tp, ty)) if epoch % cfg.eval_every == 0 || epoch + 1 == cfg.epochs => {
                Some(rel_l2(model.forward(tp, None)?.0.view(), ty.view())?)
            }
            _ => None,
        };
        let monitored = if test.is_some() { test_rel } else { Some(train_rel) };
        if let Some(v) = monitored {
            if best.as_ref().is_none_or(|(b, _, _)| v < *b) {
                best = Some((v, epoch, params.clone()));
            }
        }
        records.push(EpochRecord { epoch, lr, loss, train_rel_l2: train_rel, test_rel_l2: test_rel });

        let g = model.backward(&prep, &tape, &grad);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        adam_step(&mut adam, &mut params, &g, lr, &l2);
        model.set_params(&params);
    }

    let final_train = model.forward(&prep, None)?.0.slice(s![..n, ..]).to_owned();
    let (final_test_rel_l2, final_test_rel_err) = match &test {
        Some((tp, ty)) => {
            let p = model.forward(tp, None)?.0;
            (Some(rel_l2(p.view(), ty.view())?), per_row_rel_err(&p, ty)?)
        }
        None => (None, vec![]),
    };
    let (_, best_epoch, best_params) = best.expect("at least one epoch");
    let mut best_model = model.clone();
    best_model.set_params(&best_params);
    let history = RunHistory {
        records,
        final_train_rel_l2: rel_l2(final_train.view(), truth.view())?,
        final_test_rel_l2,
        final_train_rel_err: per_row_rel_err(&final_train, &truth)?,
        final_test_rel_err,
        best_epoch,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome { model, best: best_model, history, stats })
}
