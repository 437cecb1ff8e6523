//! Grid-search tuning with leave-one-out or k-fold validation.
//!
//! Grid values are relative to the training data so that one grid fits
//! inputs of any scale (raw spectra, derivatives, transformed vectors):
//! - ridge `delta` = multiplier x mean kernel diagonal,
//! - Gaussian `gamma` = multiplier / median pairwise squared distance,
//! - NKE bandwidth = multiplier x median pairwise distance,
//! - KNN `k` is absolute.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{median_sq_dist, KernelSpec, KnnModel, KrrLooPath, KrrModel, NkeModel};
use crate::data::Task;
use crate::error::{Error, Result};
use crate::rng;
use crate::spline::log_grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Learner {
    KrrLinear,
    KrrGaussian,
    Nke,
    Knn,
}

impl Learner {
    pub fn name(self) -> &'static str {
        match self {
            Learner::KrrLinear => "krr-linear",
            Learner::KrrGaussian => "krr-gaussian",
            Learner::Nke => "nke",
            Learner::Knn => "knn",
        }
    }
}

impl std::fmt::Display for Learner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsGrid {
    pub delta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub k: Vec<usize>,
    pub bandwidth: Vec<f64>,
}

impl Default for ParamsGrid {
    fn default() -> Self {
        Self {
            delta: log_grid(1e-10, 1e1, 12),
            gamma: log_grid(1e-3, 1e3, 15),
            k: vec![1, 3, 5, 7, 9, 11, 15, 21],
            bandwidth: log_grid(1e-2, 1e1, 13),
        }
    }
}

impl ParamsGrid {
    pub fn validate(&self, learner: Learner) -> Result<()> {
        let positive = |name: &str, v: &[f64]| -> Result<()> {
            if v.is_empty() {
                return Err(Error::InvalidArgument(format!("{name} grid is empty")));
            }
            if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return Err(Error::InvalidArgument(format!("{name} grid values must be > 0, got {bad}")));
            }
            Ok(())
        };
        match learner {
            Learner::KrrLinear => positive("delta", &self.delta),
            Learner::KrrGaussian => positive("delta", &self.delta).and(positive("gamma", &self.gamma)),
            Learner::Nke => positive("bandwidth", &self.bandwidth),
            Learner::Knn => {
                if self.k.is_empty() || self.k.contains(&0) {
                    Err(Error::InvalidArgument("k grid must be non-empty with values >= 1".into()))
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Scheme {
    LeaveOneOut,
    KFold { k: usize },
}

/// Absolute hyper-parameters of a fitted learner.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TuneOutcome {
    pub params: Params,
    /// Validation MSE (regression) or misclassification rate.
    pub score: f64,
}

#[derive(Debug, Clone)]
pub enum Model {
    Krr(KrrModel, Task),
    Nke(NkeModel, Task),
    Knn(KnnModel),
}

impl Model {
    pub fn predict_rows(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let (raw, task) = match self {
            Model::Krr(m, t) => (m.predict_rows(x)?, *t),
            Model::Nke(m, t) => (m.predict_rows(x)?, *t),
            Model::Knn(m) => return m.predict_rows(x),
        };
        Ok(match task {
            Task::Regression => raw,
            Task::Classification => raw.into_iter().map(sign).collect(),
        })
    }
}

fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

pub fn fit_model(
    learner: Learner,
    x: &DMatrix<f64>,
    y: &[f64],
    task: Task,
    params: &Params,
    center: bool,
) -> Result<Model> {
    let missing = |what: &str| Error::InvalidArgument(format!("{learner} needs parameter {what}"));
    Ok(match learner {
        Learner::KrrLinear => {
            let delta = params.delta.ok_or_else(|| missing("delta"))?;
            Model::Krr(KrrModel::fit(x, y, KernelSpec::Linear, delta, center)?, task)
        }
        Learner::KrrGaussian => {
            let delta = params.delta.ok_or_else(|| missing("delta"))?;
            let gamma = params.gamma.ok_or_else(|| missing("gamma"))?;
            Model::Krr(KrrModel::fit(x, y, KernelSpec::gaussian(gamma)?, delta, center)?, task)
        }
        Learner::Nke => Model::Nke(NkeModel::new(x, y, params.bandwidth.ok_or_else(|| missing("bandwidth"))?)?, task),
        Learner::Knn => Model::Knn(KnnModel::new(x, y, params.k.ok_or_else(|| missing("k"))?, task)?),
    })
}

pub(crate) fn loss(pred: &[f64], y: &[f64], task: Task) -> f64 {
    let n = y.len() as f64;
    match task {
        Task::Regression => pred.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n,
        Task::Classification => pred.iter().zip(y).filter(|(a, b)| sign(**a) != **b).count() as f64 / n,
    }
}

/// Validation index sets. Classification folds are stratified: each class is
/// shuffled and dealt round-robin, which needs at least `k` members per class.
pub fn folds(y: &[f64], task: Task, k: usize, seed: u64, stratify: bool) -> Result<Vec<Vec<usize>>> {
    let n = y.len();
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("number of folds must lie in 2..={n}, got {k}")));
    }
    let mut rng = rng::rng(seed);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    if stratify && task == Task::Classification {
        for class in [-1.0, 1.0] {
            let mut members: Vec<usize> = (0..n).filter(|&i| y[i] == class).collect();
            if members.len() < k {
                return Err(Error::Stratification(format!(
                    "class {class:+} has {} members, fewer than the {k} folds; some fold would hold a single class",
                    members.len()
                )));
            }
            members.shuffle(&mut rng);
            order.extend(members);
        }
    } else {
        order.extend(0..n);
        order.shuffle(&mut rng);
    }
    let mut out = vec![Vec::new(); k];
    for (j, i) in order.into_iter().enumerate() {
        out[j % k].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// Refit-based validation loss pooled over all held-out predictions.
pub fn cv_score(
    learner: Learner,
    x: &DMatrix<f64>,
    y: &[f64],
    task: Task,
    params: &Params,
    folds: &[Vec<usize>],
    center: bool,
) -> Result<f64> {
    let n = x.nrows();
    let mut pred = vec![0.0; n];
    let mut held = vec![false; n];
    for fold in folds {
        let mut in_fold = vec![false; n];
        for &i in fold {
            in_fold[i] = true;
        }
        let train: Vec<usize> = (0..n).filter(|&i| !in_fold[i]).collect();
        let xt = x.select_rows(&train);
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let model = fit_model(learner, &xt, &yt, task, params, center)?;
        let p = model.predict_rows(&x.select_rows(fold))?;
        for (&i, v) in fold.iter().zip(p) {
            pred[i] = v;
            held[i] = true;
        }
    }
    let idx: Vec<usize> = (0..n).filter(|&i| held[i]).collect();
    let p: Vec<f64> = idx.iter().map(|&i| pred[i]).collect();
    let t: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    Ok(loss(&p, &t, task))
}

/// Absolute candidates in grid order (outer `gamma`, inner `delta`).
fn candidates(learner: Learner, x: &DMatrix<f64>, grid: &ParamsGrid, max_k: usize) -> Result<Vec<Params>> {
    grid.validate(learner)?;
    Ok(match learner {
        Learner::KrrLinear => {
            let scale = (0..x.nrows()).map(|i| x.row(i).norm_squared()).sum::<f64>() / x.nrows() as f64;
            let scale = if scale > 0.0 { scale } else { 1.0 };
            grid.delta.iter().map(|d| Params { delta: Some(d * scale), ..Default::default() }).collect()
        }
        Learner::KrrGaussian => {
            let med = median_sq_dist(x);
            grid.gamma
                .iter()
                .flat_map(|g| {
                    grid.delta.iter().map(move |d| Params { delta: Some(*d), gamma: Some(g / med), ..Default::default() })
                })
                .collect()
        }
        Learner::Nke => {
            let med = median_sq_dist(x).sqrt();
            grid.bandwidth.iter().map(|b| Params { bandwidth: Some(b * med), ..Default::default() }).collect()
        }
        Learner::Knn => {
            let ks: Vec<Params> =
                grid.k.iter().filter(|&&k| k <= max_k).map(|&k| Params { k: Some(k), ..Default::default() }).collect();
            if ks.is_empty() {
                return Err(Error::InvalidArgument(format!("no k in the grid fits training folds of size {max_k}")));
            }
            ks
        }
    })
}

/// Picks the grid point with the smallest validation loss; ties keep the
/// first in grid order. Independent candidates run in parallel.
#[allow(clippy::too_many_arguments)]
pub fn tune(
    learner: Learner,
    x: &DMatrix<f64>,
    y: &[f64],
    task: Task,
    grid: &ParamsGrid,
    scheme: Scheme,
    seed: u64,
    center: bool,
) -> Result<TuneOutcome> {
    let n = x.nrows();
    if n < 2 || y.len() != n {
        return Err(Error::InvalidArgument(format!("tuning needs n >= 2 rows with matching targets (n = {n})")));
    }
    let fold_sets = match scheme {
        Scheme::LeaveOneOut => (0..n).map(|i| vec![i]).collect::<Vec<_>>(),
        Scheme::KFold { k } => folds(y, task, k, seed, true)?,
    };
    let smallest_train = fold_sets.iter().map(|f| n - f.len()).min().unwrap_or(0);
    let cands = candidates(learner, x, grid, smallest_train)?;

    let scores: Vec<Result<f64>> = match (learner, scheme) {
        (Learner::KrrLinear | Learner::KrrGaussian, Scheme::LeaveOneOut) => {
            krr_loo_scores(learner, x, y, task, &cands, center)?
        }
        _ => cands
            .par_iter()
            .map(|p| cv_score(learner, x, y, task, p, &fold_sets, center))
            .collect(),
    };

    let mut best: Option<TuneOutcome> = None;
    for (params, score) in cands.iter().zip(scores) {
        let score = score?;
        let score = if score.is_nan() { f64::INFINITY } else { score };
        if best.is_none_or(|b| score < b.score) {
            best = Some(TuneOutcome { params: *params, score });
        }
    }
    Ok(best.expect("candidate list is non-empty"))
}

/// Closed-form leave-one-out over all candidates: one eigendecomposition per
/// distinct kernel.
fn krr_loo_scores(
    learner: Learner,
    x: &DMatrix<f64>,
    y: &[f64],
    task: Task,
    cands: &[Params],
    center: bool,
) -> Result<Vec<Result<f64>>> {
    let mut kernels: Vec<Option<f64>> = cands.iter().map(|p| p.gamma).collect();
    kernels.dedup();
    let paths: Vec<Result<(Option<f64>, KrrLooPath)>> = kernels
        .par_iter()
        .map(|g| {
            let kernel = match (learner, g) {
                (Learner::KrrGaussian, Some(g)) => KernelSpec::gaussian(*g)?,
                _ => KernelSpec::Linear,
            };
            Ok((*g, KrrLooPath::new(x, y, kernel, center)?))
        })
        .collect();
    let paths: Vec<(Option<f64>, KrrLooPath)> = paths.into_iter().collect::<Result<_>>()?;
    Ok(cands
        .par_iter()
        .map(|p| {
            let path = &paths.iter().find(|(g, _)| *g == p.gamma).expect("path per kernel").1;
            let e = path.loo_residuals(p.delta.expect("krr candidates carry delta"));
            let pred: Vec<f64> = y.iter().zip(e.iter()).map(|(yi, ei)| yi - ei).collect();
            Ok(loss(&pred, y, task))
        })
        .collect())
}
