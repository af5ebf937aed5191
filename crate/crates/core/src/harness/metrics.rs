use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

fn same_shape(pred: &ArrayView2<f64>, truth: &ArrayView2<f64>) -> Result<()> {
    if pred.dim() != truth.dim() {
        return Err(Error::InvalidArgument(format!(
            "prediction is {:?}, truth is {:?}",
            pred.dim(),
            truth.dim()
        )));
    }
    Ok(())
}

fn row_mse(pred: ArrayView1<f64>, truth: ArrayView1<f64>) -> f64 {
    pred.iter().zip(truth).map(|(p, x)| (p - x) * (p - x)).sum::<f64>() / pred.len() as f64
}

fn peak(row: ArrayView1<f64>) -> f64 {
    row.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Mean over rows of the per-row mean squared error.
pub fn loss_mse(pred: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<f64> {
    same_shape(&pred, &truth)?;
    let n = pred.nrows() as f64;
    Ok(pred.rows().into_iter().zip(truth.rows()).map(|(p, x)| row_mse(p, x)).sum::<f64>() / n)
}

/// `1 / max|x_ℓ|` per truth row. All-zero rows get weight 1 when
/// `allow_zero` is set (the injected zero pair), and are an error otherwise.
pub fn row_weights(truth: ArrayView2<f64>, allow_zero: bool) -> Result<Array1<f64>> {
    truth
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let p = peak(row);
            if p > 0.0 {
                Ok(1.0 / p)
            } else if allow_zero {
                Ok(1.0)
            } else {
                Err(Error::InvalidArgument(format!("truth row {i} is identically zero")))
            }
        })
        .collect()
}

/// Mean over rows of `MSE_ℓ / max|x_ℓ|`.
pub fn loss_weighted(pred: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<f64> {
    same_shape(&pred, &truth)?;
    let w = row_weights(truth, false)?;
    Ok(weighted_loss_and_grad(pred, truth, w.view(), None).0)
}

/// Weighted loss `(1/n) Σ_ℓ w_ℓ · mean_{i∈cols} (p - x)²` and its gradient
/// with respect to `pred`. `cols` restricts the time indices (all when
/// `None`); the gradient is zero outside them.
pub fn weighted_loss_and_grad(
    pred: ArrayView2<f64>,
    truth: ArrayView2<f64>,
    weights: ArrayView1<f64>,
    cols: Option<&[usize]>,
) -> (f64, Array2<f64>) {
    let (n, m) = pred.dim();
    let mut grad = Array2::zeros((n, m));
    let mut loss = 0.0;
    match cols {
        None => {
            let scale = 1.0 / (n * m) as f64;
            for l in 0..n {
                let w = weights[l];
                let mut acc = 0.0;
                for i in 0..m {
                    let e = pred[[l, i]] - truth[[l, i]];
                    acc += e * e;
                    grad[[l, i]] = 2.0 * w * e * scale;
                }
                loss += w * acc * scale;
            }
        }
        Some(cols) => {
            let scale = 1.0 / (n * cols.len()) as f64;
            for l in 0..n {
                let w = weights[l];
                let mut acc = 0.0;
                for &i in cols {
                    let e = pred[[l, i]] - truth[[l, i]];
                    acc += e * e;
                    grad[[l, i]] = 2.0 * w * e * scale;
                }
                loss += w * acc * scale;
            }
        }
    }
    (loss, grad)
}

/// Per-row relative L2 error `‖x - x̂‖ / ‖x‖`.
pub fn rel_l2_rows(pred: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<Vec<f64>> {
    same_shape(&pred, &truth)?;
    pred.rows()
        .into_iter()
        .zip(truth.rows())
        .enumerate()
        .map(|(i, (p, x))| {
            let den: f64 = x.iter().map(|v| v * v).sum();
            if den == 0.0 {
                return Err(Error::InvalidArgument(format!("truth row {i} has zero norm")));
            }
            let num: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok((num / den).sqrt())
        })
        .collect()
}

/// Mean of [`rel_l2_rows`].
pub fn rel_l2(pred: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<f64> {
    let rows = rel_l2_rows(pred, truth)?;
    Ok(rows.iter().sum::<f64>() / rows.len().max(1) as f64)
}

/// `max|x - x̂| / max|x|` for one trajectory.
pub fn rel_err(pred: ArrayView1<f64>, truth: ArrayView1<f64>) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), got: pred.len() });
    }
    let den = peak(truth);
    if den == 0.0 {
        return Err(Error::InvalidArgument("truth trajectory is identically zero".into()));
    }
    let num = pred.iter().zip(truth).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(num / den)
}
