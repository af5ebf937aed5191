use crate::error::{Error, Result};

/// A uniformly sampled scalar time series starting at `t = 0`.
///
/// Sample `j` sits at `t_j = j · dt`, so the record spans
/// `T = dt · (len - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    dt: f64,
    samples: Vec<f64>,
}

impl Signal {
    /// Checks `dt > 0`, a non-empty record and finite samples.
    pub fn new(dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidSignal(format!("sampling step must be positive, got {dt}")));
        }
        if samples.is_empty() {
            return Err(Error::InvalidSignal("signal has no samples".into()));
        }
        if let Some(j) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidSignal(format!("sample {j} is not finite")));
        }
        Ok(Self { dt, samples })
    }

    pub fn zeros(dt: f64, len: usize) -> Result<Self> {
        Self::new(dt, vec![0.0; len])
    }

    /// Samples `f(j·dt)` for `j = 0..len`.
    pub fn from_fn(dt: f64, len: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(dt, (0..len).map(|j| f(j as f64 * dt)).collect())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Record length `dt · (len - 1)`.
    pub fn duration(&self) -> f64 {
        self.dt * (self.samples.len() - 1) as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    /// Peak absolute value.
    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Sum of squared samples (no `dt` factor).
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.dt, self.samples.iter().map(|x| x * factor).collect())
    }

    /// Samples `start..end`, re-based so the first kept sample is at `t = 0`.
    pub fn trim(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.samples.len() {
            return Err(Error::InvalidArgument(format!(
                "trim window {start}..{end} invalid for {} samples",
                self.samples.len()
            )));
        }
        Self::new(self.dt, self.samples[start..end].to_vec())
    }

    /// Same as [`trim`](Self::trim) but with times in seconds; also reports
    /// the fraction of the record's energy that was dropped.
    pub fn trim_seconds(&self, start: f64, end: f64) -> Result<(Self, f64)> {
        let s = (start / self.dt).round().max(0.0) as usize;
        let e = ((end / self.dt).round() as usize + 1).min(self.samples.len());
        let kept = self.trim(s, e)?;
        let total = self.energy();
        let dropped = if total > 0.0 { 1.0 - kept.energy() / total } else { 0.0 };
        Ok((kept, dropped))
    }
}
