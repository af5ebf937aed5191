use crate::error::{Error, Result};

/// Adam moments over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// `β1 = 0.9`, `β2 = 0.999`, `ε = 1e-8`.
    pub fn new(len: usize) -> Self {
        Self::with_hyper(len, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyper(len: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len], step: 0, beta1, beta2, eps }
    }
}

/// One bias-corrected Adam update. `l2[i]` adds `2·l2[i]·params[i]` to the
/// gradient (pass an empty slice for none).
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64], lr: f64, l2: &[f64]) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        let mut g = grads[i];
        if let Some(&lambda) = l2.get(i) {
            g += 2.0 * lambda * params[i];
        }
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let mhat = state.m[i] / c1;
        let vhat = state.v[i] / c2;
        params[i] -= lr * mhat / (vhat.sqrt() + state.eps);
    }
}

/// Piecewise-constant learning rate: `(threshold, rate)` pairs with
/// strictly increasing thresholds. A zero rate is accepted (it freezes the
/// parameters, which is handy for smoke runs).
#[derive(Debug, Clone, PartialEq)]
pub struct LrSchedule {
    segments: Vec<(usize, f64)>,
}

impl LrSchedule {
    pub fn new(segments: Vec<(usize, f64)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidArgument("learning-rate schedule is empty".into()));
        }
        if segments.iter().any(|&(_, r)| !(r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument("learning rates must be finite and non-negative".into()));
        }
        if segments.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidArgument("schedule thresholds must increase strictly".into()));
        }
        Ok(Self { segments })
    }

    pub fn constant(rate: f64) -> Result<Self> {
        Self::new(vec![(usize::MAX, rate)])
    }

    pub fn segments(&self) -> &[(usize, f64)] {
        &self.segments
    }
}

/// Rate of the first segment whose threshold exceeds `epoch`, so an epoch
/// equal to a threshold already uses the next rate. Past the last threshold
/// the last rate holds.
pub fn lr_at(schedule: &LrSchedule, epoch: usize) -> f64 {
    schedule
        .segments
        .iter()
        .find(|&&(threshold, _)| threshold > epoch)
        .unwrap_or_else(|| schedule.segments.last().unwrap())
        .1
}

/// L2 coefficients and dropout rates for the branch and trunk groups.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RegConfig {
    pub l2_branch: f64,
    pub l2_trunk: f64,
    pub dropout_branch: f64,
    pub dropout_trunk: f64,
}

impl RegConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("l2_branch", self.l2_branch), ("l2_trunk", self.l2_trunk)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("dropout_branch", self.dropout_branch), ("dropout_trunk", self.dropout_trunk)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} must be in [0, 1), got {v}")));
            }
        }
        Ok(())
    }
}
