//! Kernel ridge regression with closed-form leave-one-out.
//!
//! Coefficients solve `(K + delta I) c = y`; the predictor is
//! `u -> sum_i c_i kappa(X_i, u)`. This is the usual reparametrization of the
//! target-weighted form `sum_i T_i alpha_i kappa(U_i, u)` (`c_i = T_i alpha_i`).
//! With `G = (K + delta I)^-1`, the leave-one-out residual is
//! `e_i = c_i / G_ii`, so the leave-one-out error comes with the fit.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{check_finite, row_sq_dist, sq_dists};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum KernelSpec {
    Linear,
    /// `exp(-gamma |u - v|^2)`.
    Gaussian { gamma: f64 },
}

impl KernelSpec {
    pub fn gaussian(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("gaussian width must be finite and > 0, got {gamma}")));
        }
        Ok(KernelSpec::Gaussian { gamma })
    }

    pub fn gram(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        match *self {
            KernelSpec::Linear => a * b.transpose(),
            KernelSpec::Gaussian { gamma } => sq_dists(a, b).map(|d| (-gamma * d).exp()),
        }
    }

    fn eval_row(&self, x: &DMatrix<f64>, i: usize, u: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => x.row(i).iter().zip(u).map(|(a, b)| a * b).sum(),
            KernelSpec::Gaussian { gamma } => (-gamma * row_sq_dist(x, i, u)).exp(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KrrModel {
    kernel: KernelSpec,
    delta: f64,
    inputs: DMatrix<f64>,
    coef: DVector<f64>,
    offset: f64,
    loo_mse: f64,
    loo_residuals: DVector<f64>,
}

impl KrrModel {
    /// Fits on the rows of `x`. With `center`, the training mean of `y` is
    /// removed before fitting and added back to predictions (held fixed in
    /// the leave-one-out shortcut).
    pub fn fit(x: &DMatrix<f64>, y: &[f64], kernel: KernelSpec, delta: f64, center: bool) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("kernel ridge regression needs n >= 2, got {n}")));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: y.len() });
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidArgument(format!("ridge parameter must be > 0, got {delta}")));
        }
        if let KernelSpec::Gaussian { gamma } = kernel {
            KernelSpec::gaussian(gamma)?;
        }
        check_finite(x, y)?;
        let offset = if center { y.iter().sum::<f64>() / n as f64 } else { 0.0 };
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - offset));

        let mut g = kernel.gram(x, x);
        for i in 0..n {
            g[(i, i)] += delta;
        }
        let chol = g
            .cholesky()
            .ok_or_else(|| Error::Conditioning(format!("K + delta I is not positive definite (delta = {delta})")))?;
        let coef = chol.solve(&yc);
        let g_inv = chol.inverse();
        let loo_residuals = DVector::from_fn(n, |i, _| coef[i] / g_inv[(i, i)]);
        let loo_mse = loo_residuals.norm_squared() / n as f64;
        Ok(Self { kernel, delta, inputs: x.clone(), coef, offset, loo_mse, loo_residuals })
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coef
    }

    pub fn loo_mse(&self) -> f64 {
        self.loo_mse
    }

    /// `y_i - f_{-i}(X_i)` for every training row.
    pub fn loo_residuals(&self) -> &DVector<f64> {
        &self.loo_residuals
    }

    pub fn predict(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.inputs.ncols() {
            return Err(Error::DimensionMismatch { expected: self.inputs.ncols(), found: u.len() });
        }
        Ok(self.offset
            + (0..self.inputs.nrows()).map(|i| self.coef[i] * self.kernel.eval_row(&self.inputs, i, u)).sum::<f64>())
    }

    pub fn predict_rows(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.inputs.ncols() {
            return Err(Error::DimensionMismatch { expected: self.inputs.ncols(), found: x.ncols() });
        }
        let k = self.kernel.gram(x, &self.inputs);
        Ok((k * &self.coef).iter().map(|v| v + self.offset).collect())
    }
}

/// Eigendecomposition of one kernel matrix, reused across ridge parameters:
/// with `K = Q diag(l) Q^T`, `(K + delta I)^-1 = Q diag(1 / (l + delta)) Q^T`.
pub struct KrrLooPath {
    q: DMatrix<f64>,
    eig: DVector<f64>,
    qty: DVector<f64>,
    y: DVector<f64>,
}

impl KrrLooPath {
    pub fn new(x: &DMatrix<f64>, y: &[f64], kernel: KernelSpec, center: bool) -> Result<Self> {
        let n = x.nrows();
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: y.len() });
        }
        check_finite(x, y)?;
        let offset = if center { y.iter().sum::<f64>() / n as f64 } else { 0.0 };
        let y = DVector::from_iterator(n, y.iter().map(|v| v - offset));
        let SymmetricEigen { eigenvectors, eigenvalues } = kernel.gram(x, x).symmetric_eigen();
        let eig = eigenvalues.map(|l| l.max(0.0));
        let qty = eigenvectors.transpose() * &y;
        Ok(Self { q: eigenvectors, eig, qty, y })
    }

    /// Mean kernel diagonal, the natural scale of the ridge parameter.
    pub fn scale(&self) -> f64 {
        self.eig.sum() / self.eig.len() as f64
    }

    /// Leave-one-out residuals `y_i - f_{-i}(X_i)` at ridge parameter `delta`.
    pub fn loo_residuals(&self, delta: f64) -> DVector<f64> {
        let n = self.y.len();
        let inv: Vec<f64> = self.eig.iter().map(|l| 1.0 / (l + delta)).collect();
        let mut coef = DVector::zeros(n);
        let mut diag = DVector::zeros(n);
        for (k, &w) in inv.iter().enumerate() {
            let a = w * self.qty[k];
            for i in 0..n {
                let qik = self.q[(i, k)];
                coef[i] += qik * a;
                diag[i] += qik * qik * w;
            }
        }
        coef.component_div(&diag)
    }

    /// Targets the path was built with (centered when requested).
    pub fn targets(&self) -> &DVector<f64> {
        &self.y
    }
}
