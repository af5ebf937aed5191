use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Operator;
use crate::error::Result;
use crate::neuralcore::GradReport;

/// Compares [`Operator::backward`] with central differences of
/// `L = Σ r ⊙ model(inputs)` for random weights `r`. At most `max_params`
/// parameters, chosen at random from `seed`, are probed.
pub fn check_operator_gradients<M: Operator>(
    model: &M,
    inputs: ArrayView2<f64>,
    step: f64,
    max_params: usize,
    seed: u64,
) -> Result<GradReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prep = model.prepare(inputs)?;
    let (pred, tape) = model.forward(&prep, None)?;
    let r = Array2::from_shape_fn(pred.raw_dim(), |_| rng.gen_range(-1.0..1.0));
    let analytic = model.backward(&prep, &tape, &r);

    let mut params = model.params();
    let count = max_params.min(params.len());
    let mut which = sample(&mut rng, params.len(), count).into_vec();
    which.sort_unstable();
    let mut probe = model.clone();
    let mut loss = |p: &[f64]| -> Result<f64> {
        probe.set_params(p);
        Ok((&probe.forward(&prep, None)?.0 * &r).sum())
    };
    let mut report = GradReport { max_rel_err: 0.0, max_abs_err: 0.0, checked: 0 };
    for i in which {
        let orig = params[i];
        params[i] = orig + step;
        let up = loss(&params)?;
        params[i] = orig - step;
        let down = loss(&params)?;
        params[i] = orig;
        let (a, n) = (analytic[i], (up - down) / (2.0 * step));
        let abs = (a - n).abs();
        report.max_abs_err = report.max_abs_err.max(abs);
        report.max_rel_err = report.max_rel_err.max(abs / a.abs().max(n.abs()).max(1e-4));
        report.checked += 1;
    }
    Ok(report)
}
