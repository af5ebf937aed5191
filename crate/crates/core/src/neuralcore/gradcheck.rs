use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Mlp;
use crate::error::Result;

/// Largest discrepancy between analytic and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradReport {
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub checked: usize,
}

/// Checks every parameter and input gradient of `L = Σ r ⊙ net(x)` for a
/// random batch `x` and random weights `r`, both drawn from `seed`.
///
/// The relative error is `|a - n| / max(|a|, |n|, floor)` with `floor =
/// 1e-4`, so gradients that are zero up to rounding do not blow up the ratio.
pub fn check_gradients(net: &Mlp, batch: usize, step: f64, seed: u64) -> Result<GradReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((batch, net.input_dim()), |_| rng.gen_range(-1.0..1.0));
    let r = Array2::from_shape_fn((batch, net.output_dim()), |_| rng.gen_range(-1.0..1.0));
    let loss = |n: &Mlp, x: &Array2<f64>| -> Result<f64> {
        Ok((&n.forward_batch(x.view(), &[])?.output * &r).sum())
    };
    let cache = net.forward_batch(x.view(), &[])?;
    let back = net.backward(&cache, &r, true);
    let mut analytic = vec![];
    back.grads.write_flat(&mut analytic);

    let mut params = vec![];
    net.write_params(&mut params);
    let mut probe = net.clone();
    let mut report = GradReport { max_rel_err: 0.0, max_abs_err: 0.0, checked: 0 };
    let mut record = |a: f64, n: f64| {
        let abs = (a - n).abs();
        report.max_abs_err = report.max_abs_err.max(abs);
        report.max_rel_err = report.max_rel_err.max(abs / a.abs().max(n.abs()).max(1e-4));
        report.checked += 1;
    };
    for i in 0..params.len() {
        let orig = params[i];
        params[i] = orig + step;
        probe.read_params(&params);
        let up = loss(&probe, &x)?;
        params[i] = orig - step;
        probe.read_params(&params);
        let down = loss(&probe, &x)?;
        params[i] = orig;
        record(analytic[i], (up - down) / (2.0 * step));
    }
    let dx = back.d_input.expect("input gradient requested");
    let mut xp = x.clone();
    for idx in ndarray::indices(x.raw_dim()) {
        let orig = x[idx];
        xp[idx] = orig + step;
        let up = loss(net, &xp)?;
        xp[idx] = orig - step;
        let down = loss(net, &xp)?;
        xp[idx] = orig;
        record(dx[idx], (up - down) / (2.0 * step));
    }
    Ok(report)
}
