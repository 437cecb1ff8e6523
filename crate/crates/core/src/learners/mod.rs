//! Multivariate learners applied to (possibly transformed) sampled curves.

mod fd;
mod knn;
mod krr;
mod nke;
mod tune;

pub use fd::{fd_derivative, fd_rows};
pub use knn::{knn_predict, KnnModel};
pub use krr::{KernelSpec, KrrLooPath, KrrModel};
pub use nke::{nke_predict, NkeModel};
pub use tune::{cv_score, fit_model, folds, tune, Learner, Model, Params, ParamsGrid, Scheme, TuneOutcome};

use nalgebra::DMatrix;

/// `|a_i - b_j|^2` for every row pair.
pub(crate) fn sq_dists(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| {
        a.row(i).iter().zip(b.row(j).iter()).map(|(x, y)| (x - y) * (x - y)).sum()
    })
}

pub(crate) fn row_sq_dist(a: &DMatrix<f64>, i: usize, u: &[f64]) -> f64 {
    a.row(i).iter().zip(u).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median of the pairwise squared distances between distinct rows.
pub(crate) fn median_sq_dist(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push(x.row(i).iter().zip(x.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    if *m > 0.0 {
        *m
    } else {
        1.0
    }
}

pub(crate) fn check_finite(x: &DMatrix<f64>, y: &[f64]) -> crate::Result<()> {
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(crate::Error::Data("non-finite entry in learner inputs".into()));
    }
    Ok(())
}
