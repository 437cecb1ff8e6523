//! Nadaraya–Watson kernel estimate with a Gaussian window.

use nalgebra::DMatrix;

use super::{check_finite, row_sq_dist};
use crate::error::{Error, Result};

/// `sum_i y_i G(|u - X_i| / h) / sum_i G(|u - X_i| / h)` with
/// `G(r) = exp(-r^2 / 2)`. If every weight underflows to zero the global mean
/// of `y` is returned.
pub fn nke_predict(x: &DMatrix<f64>, y: &[f64], bandwidth: f64, u: &[f64]) -> Result<f64> {
    NkeModel::new(x, y, bandwidth)?.predict(u)
}

#[derive(Debug, Clone)]
pub struct NkeModel {
    inputs: DMatrix<f64>,
    targets: Vec<f64>,
    bandwidth: f64,
    mean: f64,
}

impl NkeModel {
    pub fn new(x: &DMatrix<f64>, y: &[f64], bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidArgument(format!("bandwidth must be finite and > 0, got {bandwidth}")));
        }
        if y.len() != x.nrows() || y.is_empty() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), found: y.len() });
        }
        check_finite(x, y)?;
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        Ok(Self { inputs: x.clone(), targets: y.to_vec(), bandwidth, mean })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn predict(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.inputs.ncols() {
            return Err(Error::DimensionMismatch { expected: self.inputs.ncols(), found: u.len() });
        }
        let h2 = self.bandwidth * self.bandwidth;
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &yi) in self.targets.iter().enumerate() {
            let w = (-0.5 * row_sq_dist(&self.inputs, i, u) / h2).exp();
            num += w * yi;
            den += w;
        }
        if den < f64::MIN_POSITIVE {
            return Ok(self.mean);
        }
        Ok(num / den)
    }

    pub fn predict_rows(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        (0..x.nrows())
            .map(|i| self.predict(x.row(i).transpose().as_slice()))
            .collect()
    }
}
