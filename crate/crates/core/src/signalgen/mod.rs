//! Ground-motion synthesis, preprocessing and paired datasets.
//!
//! Motions are synthesized in m/s². Datasets may store them in other units
//! (see [`Units`]).

mod dataset;
mod filter;
mod signal;
mod stats;

pub use dataset::{build_dataset, load_dataset, save_dataset, DatasetMeta, ResponseDataset, Solver, Units,
    STANDARD_GRAVITY};
pub use filter::{butterworth_bandpass, BandPass, Biquad};
pub use signal::Signal;
pub use stats::{compute_stats, format_stats_table, CorpusStats, Summary};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Linear interpolation onto `t_j = j·new_dt` for every `t_j` inside the
/// original record. The first sample is kept; the last one is kept whenever
/// the duration is a multiple of `new_dt`.
pub fn resample(signal: &Signal, new_dt: f64) -> Result<Signal> {
    if !(new_dt > 0.0 && new_dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("new_dt must be positive, got {new_dt}")));
    }
    if new_dt == signal.dt() {
        return Ok(signal.clone());
    }
    let x = signal.samples();
    let duration = signal.duration();
    let count = (duration / new_dt + 1e-9).floor() as usize + 1;
    let last = x.len() - 1;
    let out = (0..count)
        .map(|j| {
            let pos = (j as f64 * new_dt / signal.dt()).min(last as f64);
            let k = pos.floor() as usize;
            let frac = pos - k as f64;
            if k >= last || frac < 1e-12 {
                x[k.min(last)]
            } else {
                x[k] + frac * (x[k + 1] - x[k])
            }
        })
        .collect();
    Signal::new(new_dt, out)
}

/// Scales the record so its peak absolute value equals `target_pga`.
pub fn pga_rescale(signal: &Signal, target_pga: f64) -> Result<Signal> {
    if !(target_pga > 0.0 && target_pga.is_finite()) {
        return Err(Error::InvalidArgument(format!("target PGA must be positive, got {target_pga}")));
    }
    let peak = signal.peak();
    if peak == 0.0 {
        return Err(Error::InvalidSignal("cannot rescale an all-zero signal".into()));
    }
    signal.scaled(target_pga / peak)
}

/// Trapezoidal amplitude envelope: 10% ramp, 50% plateau, 40% decay.
pub fn trapezoid_envelope(t: f64, duration: f64) -> f64 {
    let r = if duration > 0.0 { t / duration } else { 0.0 };
    if r < 0.1 {
        r / 0.1
    } else if r <= 0.6 {
        1.0
    } else {
        ((1.0 - r) / 0.4).max(0.0)
    }
}

/// Seeded synthetic ground motion of `m = round(duration/dt)` samples.
///
/// White Gaussian noise from a ChaCha8 stream, band-passed (order 4, zero
/// phase), shaped by [`trapezoid_envelope`], then rescaled to `pga`.
pub fn synth_ground_motion(seed: u64, duration: f64, dt: f64, band: (f64, f64), pga: f64) -> Result<Signal> {
    if !(dt > 0.0 && duration > 0.0) {
        return Err(Error::InvalidArgument("duration and dt must be positive".into()));
    }
    let ratio = duration / dt;
    let m = ratio.round();
    if (ratio - m).abs() > 1e-6 * ratio.max(1.0) || m < 2.0 {
        return Err(Error::InvalidArgument(format!("duration {duration} is not a multiple of dt {dt}")));
    }
    let m = m as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
    let filtered = butterworth_bandpass(&Signal::new(dt, noise)?, band.0, band.1, 4)?;
    let span = dt * (m - 1) as f64;
    let shaped: Vec<f64> = filtered
        .samples()
        .iter()
        .enumerate()
        .map(|(j, x)| x * trapezoid_envelope(j as f64 * dt, span))
        .collect();
    pga_rescale(&Signal::new(dt, shaped)?, pga)
}

/// A seeded corpus of synthetic motions.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub count: usize,
    pub duration: f64,
    pub dt: f64,
    pub band: (f64, f64),
    /// PGA of each motion is drawn uniformly from this range (m/s²).
    pub pga: (f64, f64),
    pub seed: u64,
}

/// Generates `spec.count` motions. Motion `i` gets noise seed
/// `seed·1_000_003 + i` and a PGA drawn from a stream seeded by `seed`, so
/// the first `k` motions do not depend on `count`.
pub fn synth_corpus(spec: &CorpusSpec) -> Result<Vec<Signal>> {
    let (lo, hi) = spec.pga;
    if !(0.0 < lo && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("PGA range ({lo}, {hi}) must satisfy 0 < low <= high")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.count)
        .map(|i| {
            let pga = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            let seed = spec.seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
            synth_ground_motion(seed, spec.duration, spec.dt, spec.band, pga)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_prefix_stable() {
        let mut spec = CorpusSpec { count: 5, duration: 4.0, dt: 0.02, band: (0.1, 24.9), pga: (1.0, 4.0), seed: 9 };
        let a = synth_corpus(&spec).unwrap();
        spec.count = 3;
        let b = synth_corpus(&spec).unwrap();
        assert_eq!(&a[..3], &b[..]);
        for s in &a {
            assert!((1.0 - 1e-12..=4.0 + 1e-12).contains(&s.peak()));
        }
    }

    #[test]
    fn resample_identity_and_ramp() {
        let s = Signal::from_fn(0.01, 101, |t| 3.0 * t - 1.0).unwrap();
        assert_eq!(resample(&s, 0.01).unwrap(), s);
        let r = resample(&s, 0.03).unwrap();
        assert_eq!(r.len(), 34);
        for (j, v) in r.samples().iter().enumerate() {
            assert!((v - (3.0 * j as f64 * 0.03 - 1.0)).abs() < 1e-12);
        }
        let up = resample(&s, 0.004).unwrap();
        assert_eq!(up.len(), 251);
        assert!((up.samples()[250] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rescale_hits_target() {
        let s = Signal::new(0.1, vec![0.1, -0.5, 0.2]).unwrap();
        assert_eq!(pga_rescale(&s, 0.25).unwrap().samples(), &[0.05, -0.25, 0.1]);
        assert_eq!(pga_rescale(&s, 0.5).unwrap(), s);
        assert!(pga_rescale(&Signal::zeros(0.1, 3).unwrap(), 1.0).is_err());
    }

    #[test]
    fn envelope_shape() {
        assert_eq!(trapezoid_envelope(0.0, 10.0), 0.0);
        assert_eq!(trapezoid_envelope(0.5, 10.0), 0.5);
        assert_eq!(trapezoid_envelope(3.0, 10.0), 1.0);
        assert!((trapezoid_envelope(8.0, 10.0) - 0.5).abs() < 1e-12);
        assert_eq!(trapezoid_envelope(10.0, 10.0), 0.0);
    }

    #[test]
    fn synth_is_seeded() {
        let a = synth_ground_motion(7, 10.0, 0.02, (0.1, 24.9), 0.3).unwrap();
        let b = synth_ground_motion(7, 10.0, 0.02, (0.1, 24.9), 0.3).unwrap();
        let c = synth_ground_motion(8, 10.0, 0.02, (0.1, 24.9), 0.3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 500);
        assert!((a.peak() - 0.3).abs() <= 1e-12 * 0.3);
        assert!(synth_ground_motion(1, 10.01, 0.02, (0.1, 24.9), 0.3).is_err());
    }
}
