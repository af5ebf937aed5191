use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Lower bound applied to per-time standard deviations.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// Per-time-sample ensemble mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mu: Array1<f64>,
    pub sigma: Array1<f64>,
}

impl GaussianStats {
    /// Population statistics over the rows of `rows`, `σ` floored.
    pub fn fit(rows: ArrayView2<f64>) -> Self {
        let mu = rows.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(rows.ncols()));
        let sigma = rows.var_axis(Axis(0), 0.0).mapv(|v| v.sqrt().max(SIGMA_FLOOR));
        Self { mu, sigma }
    }

    pub fn apply(&self, rows: ArrayView2<f64>) -> Array2<f64> {
        (&rows - &self.mu) / &self.sigma
    }

    pub fn invert(&self, rows: ArrayView2<f64>) -> Array2<f64> {
        &rows * &self.sigma + &self.mu
    }
}

/// Fits [`GaussianStats`] on `rows` and returns the normalized rows.
pub fn gaussian_normalize(rows: ArrayView2<f64>) -> (Array2<f64>, GaussianStats) {
    let stats = GaussianStats::fit(rows);
    (stats.apply(rows), stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn plus_minus_rows() {
        let x = array![[1.0, 0.0, -2.0], [-1.0, 0.0, 2.0]];
        let (z, s) = gaussian_normalize(x.view());
        assert!(s.mu.iter().all(|&m| m == 0.0));
        assert_eq!(z.row(0).to_vec(), vec![1.0, 0.0, -1.0]);
        assert_eq!(s.sigma[1], SIGMA_FLOOR);
        let back = s.invert(z.view());
        assert!((&back - &x).iter().all(|v| v.abs() <= 1e-12));
    }
}
