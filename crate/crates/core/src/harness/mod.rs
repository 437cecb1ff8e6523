//! Repeated random-split benchmarks over preprocessing variants.
//!
//! Every split is a training/test partition shared by all variants. Smoothing
//! levels, tuning and model fits only ever see [`TrainView`] data; test rows
//! enter through [`Pipeline::predict_rows`] alone.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{FunctionalDataset, Task};
use crate::error::{Error, Result};
use crate::grid::SamplingGrid;
use crate::learners::{fd_rows, fit_model, tune, Learner, Model, Params, ParamsGrid, Scheme};
use crate::rkhs::Order;
use crate::rng::{self, stream};
use crate::spline::{select_lambda, SplineSystem};
use crate::stats::{mean, paired_t_test, sample_sd, sample_variance};

/// Split attempts per index before giving up on a classification plan.
pub const MAX_SPLIT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PreprocessingVariant {
    /// Raw sampled values.
    O,
    S1,
    S2,
    /// Interpolating spline (`lambda = 0`).
    IS1,
    IS2,
    /// Finite-difference derivative.
    FD1,
    FD2,
}

impl PreprocessingVariant {
    pub const ALL: [Self; 7] = [Self::O, Self::S1, Self::S2, Self::IS1, Self::IS2, Self::FD1, Self::FD2];

    pub fn tag(self) -> &'static str {
        match self {
            Self::O => "O",
            Self::S1 => "S1",
            Self::S2 => "S2",
            Self::IS1 => "IS1",
            Self::IS2 => "IS2",
            Self::FD1 => "FD1",
            Self::FD2 => "FD2",
        }
    }

    /// Derivative order, `None` for the raw data.
    pub fn order(self) -> Option<Order> {
        match self {
            Self::O => None,
            Self::S1 | Self::IS1 | Self::FD1 => Some(Order::One),
            Self::S2 | Self::IS2 | Self::FD2 => Some(Order::Two),
        }
    }
}

impl fmt::Display for PreprocessingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for PreprocessingVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant {s:?} (expected O, S1, S2, IS1, IS2, FD1, FD2)")))
    }
}

impl TryFrom<String> for PreprocessingVariant {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PreprocessingVariant> for String {
    fn from(v: PreprocessingVariant) -> String {
        v.tag().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub n_splits: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// Balanced test sets (half of each class); classification only.
    pub stratified: bool,
    pub seed: u64,
}

impl SplitPlan {
    pub fn validate(&self, ds: &FunctionalDataset) -> Result<()> {
        let n = ds.n();
        if self.n_splits == 0 {
            return Err(Error::InvalidArgument("n_splits must be at least 1".into()));
        }
        if self.train_size < 2 || self.test_size < 2 {
            return Err(Error::InvalidArgument(format!(
                "train_size and test_size must both be >= 2 (got {} and {})",
                self.train_size, self.test_size
            )));
        }
        if self.train_size + self.test_size > n {
            return Err(Error::InvalidArgument(format!(
                "train_size + test_size = {} exceeds the {n} available rows",
                self.train_size + self.test_size
            )));
        }
        if self.stratified {
            if ds.task() != Task::Classification {
                return Err(Error::InvalidArgument("stratified splits apply to classification only".into()));
            }
            if !self.test_size.is_multiple_of(2) {
                return Err(Error::InvalidArgument(format!(
                    "stratified test_size must be even, got {}",
                    self.test_size
                )));
            }
            let half = self.test_size / 2;
            for class in [-1.0, 1.0] {
                let count = ds.targets().iter().filter(|&&y| y == class).count();
                if count < half {
                    return Err(Error::Stratification(format!(
                        "class {class:+} has {count} rows, fewer than the {half} needed per test set"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub learner: Learner,
    #[serde(default)]
    pub grid: ParamsGrid,
    pub scheme: Scheme,
    /// Subtract the training mean from KRR targets.
    #[serde(default)]
    pub center: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub variants: Vec<PreprocessingVariant>,
    pub learner: LearnerSpec,
    /// Smoothing-level candidates for the S variants.
    pub lambda_grid: Vec<f64>,
    pub plan: SplitPlan,
    /// Paired-test level for significance and ranking.
    pub level: f64,
}

/// Training rows of one split: the only data a pipeline may fit on.
#[derive(Debug, Clone, Copy)]
pub struct TrainView<'a> {
    pub grid: &'a SamplingGrid,
    pub x: &'a DMatrix<f64>,
    pub y: &'a [f64],
    pub task: Task,
}

/// Preprocessing plus a tuned model, fitted on training rows.
#[derive(Debug, Clone)]
pub struct Pipeline {
    variant: PreprocessingVariant,
    grid: SamplingGrid,
    system: Option<SplineSystem>,
    params: Params,
    validation_score: f64,
    model: Model,
}

impl Pipeline {
    pub fn fit(train: TrainView<'_>, variant: PreprocessingVariant, spec: &LearnerSpec, lambda_grid: &[f64], seed: u64) -> Result<Self> {
        let system = match variant {
            PreprocessingVariant::S1 | PreprocessingVariant::S2 => {
                let order = variant.order().expect("spline variants carry an order");
                let sel = select_lambda(train.grid, order, train.x, lambda_grid)?;
                Some(SplineSystem::build(train.grid, order, sel.lambda)?)
            }
            PreprocessingVariant::IS1 | PreprocessingVariant::IS2 => {
                let order = variant.order().expect("spline variants carry an order");
                Some(SplineSystem::build(train.grid, order, 0.0)?)
            }
            _ => None,
        };
        let z = preprocess(system.as_ref(), variant, train.grid, train.x)?;
        let best = tune(spec.learner, &z, train.y, train.task, &spec.grid, spec.scheme, seed, spec.center)?;
        let model = fit_model(spec.learner, &z, train.y, train.task, &best.params, spec.center)?;
        Ok(Pipeline {
            variant,
            grid: train.grid.clone(),
            system,
            params: best.params,
            validation_score: best.score,
            model,
        })
    }

    pub fn variant(&self) -> PreprocessingVariant {
        self.variant
    }

    /// Smoothing level of the spline variants.
    pub fn lambda(&self) -> Option<f64> {
        self.system.as_ref().map(|s| s.lambda())
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn validation_score(&self) -> f64 {
        self.validation_score
    }

    /// Maps raw sampled rows into the representation the model sees.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        preprocess(self.system.as_ref(), self.variant, &self.grid, x)
    }

    pub fn predict_rows(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.model.predict_rows(&self.apply(x)?)
    }
}

fn preprocess(
    system: Option<&SplineSystem>,
    variant: PreprocessingVariant,
    grid: &SamplingGrid,
    x: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if x.ncols() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: x.ncols() });
    }
    match (system, variant) {
        (Some(sys), _) => sys.transform_rows(x),
        (None, PreprocessingVariant::FD1) => fd_rows(grid, x, 1),
        (None, PreprocessingVariant::FD2) => fd_rows(grid, x, 2),
        (None, _) => Ok(x.clone()),
    }
}

pub fn mse(pred: &[f64], y: &[f64]) -> f64 {
    let sq: Vec<f64> = pred.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).collect();
    mean(&sq)
}

/// `1 - MSE / Var(y)` with the sample (n - 1) variance.
pub fn r_squared(pred: &[f64], y: &[f64]) -> f64 {
    1.0 - mse(pred, y) / sample_variance(y)
}

pub fn misclassification_rate(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).filter(|(a, b)| a != b).count() as f64 / y.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitInfo {
    pub index: usize,
    /// SHA-256 prefix of the sorted training and test indices.
    pub hash: String,
    /// Regenerations needed for a usable classification split.
    pub retries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantReport {
    pub variant: PreprocessingVariant,
    /// Primary metric per split: MSE for regression, MCR for classification.
    pub metric: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_squared: Option<Vec<f64>>,
    pub mean: f64,
    pub sd: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_r_squared: Option<f64>,
    /// Selected smoothing level per split (spline variants).
    pub lambda: Vec<Option<f64>>,
    pub params: Vec<Params>,
    pub validation_score: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseTest {
    pub a: PreprocessingVariant,
    pub b: PreprocessingVariant,
    pub statistic: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub generator: String,
    pub seed: u64,
    pub task: Task,
    pub metric: String,
    pub learner: LearnerSpec,
    pub plan: SplitPlan,
    pub level: f64,
    pub splits: Vec<SplitInfo>,
    pub variants: Vec<VariantReport>,
    pub pairwise: Vec<PairwiseTest>,
    pub ranking: String,
}

fn split_hash(train: &[usize], test: &[usize]) -> String {
    let mut a = train.to_vec();
    let mut b = test.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let mut h = Sha256::new();
    for i in a {
        h.update((i as u64).to_le_bytes());
    }
    h.update(u64::MAX.to_le_bytes());
    for i in b {
        h.update((i as u64).to_le_bytes());
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn draw_split(ds: &FunctionalDataset, plan: &SplitPlan, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = rng::rng(seed);
    let n = ds.n();
    if plan.stratified {
        let half = plan.test_size / 2;
        let mut test = Vec::with_capacity(plan.test_size);
        let mut rest = Vec::with_capacity(n);
        for class in [-1.0, 1.0] {
            let mut members: Vec<usize> = (0..n).filter(|&i| ds.targets()[i] == class).collect();
            members.shuffle(&mut rng);
            test.extend_from_slice(&members[..half]);
            rest.extend_from_slice(&members[half..]);
        }
        rest.sort_unstable();
        rest.shuffle(&mut rng);
        rest.truncate(plan.train_size);
        (rest, test)
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let test = idx[..plan.test_size].to_vec();
        let train = idx[plan.test_size..plan.test_size + plan.train_size].to_vec();
        (train, test)
    }
}

/// Minimum members per class in a training split for the scheme to work.
fn class_floor(scheme: Scheme) -> usize {
    match scheme {
        Scheme::LeaveOneOut => 1,
        Scheme::KFold { k } => k.max(1),
    }
}

fn usable(ds: &FunctionalDataset, train: &[usize], floor: usize) -> bool {
    ds.task() == Task::Regression
        || [-1.0, 1.0]
            .iter()
            .all(|c| train.iter().filter(|&&i| ds.targets()[i] == *c).count() >= floor)
}

/// Draws split `index`, regenerating with fresh sub-seeds while a class is
/// too thin in the training rows.
pub fn make_split(ds: &FunctionalDataset, plan: &SplitPlan, scheme: Scheme, index: usize) -> Result<(Vec<usize>, Vec<usize>, usize)> {
    let floor = class_floor(scheme);
    for attempt in 0..=MAX_SPLIT_ATTEMPTS {
        let seed = if attempt == 0 {
            rng::sub_seed(plan.seed, stream::SPLIT, index as u64)
        } else {
            rng::sub_seed(rng::sub_seed(plan.seed, stream::SPLIT_RETRY, index as u64), stream::SPLIT_RETRY, attempt as u64)
        };
        let (train, test) = draw_split(ds, plan, seed);
        if usable(ds, &train, floor) {
            if attempt > 0 {
                log::info!("split {index}: regenerated {attempt} time(s) for class coverage");
            }
            return Ok((train, test, attempt));
        }
        log::info!("split {index}: attempt {attempt} leaves a class with fewer than {floor} training rows");
    }
    Err(Error::Stratification(format!(
        "split {index}: no usable training split after {MAX_SPLIT_ATTEMPTS} regenerations"
    )))
}

struct VariantOutcome {
    metric: f64,
    r_squared: Option<f64>,
    lambda: Option<f64>,
    params: Params,
    validation_score: f64,
}

struct SplitOutcome {
    info: SplitInfo,
    per_variant: Vec<VariantOutcome>,
}

fn run_split(ds: &FunctionalDataset, spec: &BenchmarkSpec, index: usize) -> Result<SplitOutcome> {
    let (train, test, retries) = make_split(ds, &spec.plan, spec.learner.scheme, index)?;
    let hash = split_hash(&train, &test);
    log::debug!("split {index}: {hash}");
    let xtr = ds.rows().select_rows(&train);
    let ytr: Vec<f64> = train.iter().map(|&i| ds.targets()[i]).collect();
    let xte = ds.rows().select_rows(&test);
    let yte: Vec<f64> = test.iter().map(|&i| ds.targets()[i]).collect();
    let view = TrainView { grid: ds.grid(), x: &xtr, y: &ytr, task: ds.task() };
    let tune_seed = rng::sub_seed(spec.plan.seed, stream::FOLDS, index as u64);

    let mut per_variant = Vec::with_capacity(spec.variants.len());
    for &variant in &spec.variants {
        let pipe = Pipeline::fit(view, variant, &spec.learner, &spec.lambda_grid, tune_seed)
            .map_err(|e| annotate(e, index, variant))?;
        let pred = pipe.predict_rows(&xte)?;
        let (metric, r_squared) = match ds.task() {
            Task::Regression => (mse(&pred, &yte), Some(r_squared(&pred, &yte))),
            Task::Classification => (misclassification_rate(&pred, &yte), None),
        };
        per_variant.push(VariantOutcome {
            metric,
            r_squared,
            lambda: pipe.lambda(),
            params: pipe.params,
            validation_score: pipe.validation_score,
        });
    }
    Ok(SplitOutcome { info: SplitInfo { index, hash, retries }, per_variant })
}

fn annotate(e: Error, index: usize, variant: PreprocessingVariant) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("split {index}, variant {variant}: {m}")),
        other => other,
    }
}

impl BenchmarkSpec {
    pub fn validate(&self, ds: &FunctionalDataset) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::InvalidArgument("variant list is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.variants.iter().find(|v| !seen.insert(**v)) {
            return Err(Error::InvalidArgument(format!("variant {dup} listed twice")));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidArgument(format!("level must lie in (0, 1), got {}", self.level)));
        }
        if self.variants.iter().any(|v| matches!(v, PreprocessingVariant::S1 | PreprocessingVariant::S2)) {
            if self.lambda_grid.is_empty() {
                return Err(Error::InvalidArgument("lambda grid is empty".into()));
            }
            if let Some(bad) = self.lambda_grid.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
                return Err(Error::InvalidArgument(format!("lambda grid values must be > 0, got {bad}")));
            }
        }
        self.learner.grid.validate(self.learner.learner)?;
        if let Scheme::KFold { k } = self.learner.scheme {
            if k < 2 || k > self.plan.train_size {
                return Err(Error::InvalidArgument(format!(
                    "fold count {k} must lie in 2..={}",
                    self.plan.train_size
                )));
            }
        }
        self.plan.validate(ds)
    }
}

/// Runs every variant on the same `plan.n_splits` partitions. Splits run in
/// parallel; results are keyed by split index so the report does not depend
/// on scheduling.
pub fn run_benchmark(ds: &FunctionalDataset, spec: &BenchmarkSpec) -> Result<RunReport> {
    spec.validate(ds)?;
    let outcomes: Vec<SplitOutcome> = (0..spec.plan.n_splits)
        .into_par_iter()
        .map(|s| run_split(ds, spec, s))
        .collect::<Result<_>>()?;

    let regression = ds.task() == Task::Regression;
    let variants: Vec<VariantReport> = spec
        .variants
        .iter()
        .enumerate()
        .map(|(j, &variant)| {
            let col = |f: &dyn Fn(&VariantOutcome) -> f64| -> Vec<f64> {
                outcomes.iter().map(|o| f(&o.per_variant[j])).collect()
            };
            let metric = col(&|r| r.metric);
            let r2 = regression.then(|| col(&|r| r.r_squared.unwrap_or(f64::NAN)));
            VariantReport {
                variant,
                mean: mean(&metric),
                sd: if metric.len() > 1 { sample_sd(&metric) } else { 0.0 },
                mean_r_squared: r2.as_deref().map(mean),
                metric,
                r_squared: r2,
                lambda: outcomes.iter().map(|o| o.per_variant[j].lambda).collect(),
                params: outcomes.iter().map(|o| o.per_variant[j].params).collect(),
                validation_score: col(&|r| r.validation_score),
            }
        })
        .collect();

    let mut pairwise = Vec::new();
    if spec.plan.n_splits >= 2 {
        for i in 0..variants.len() {
            for k in i + 1..variants.len() {
                let t = paired_t_test(&variants[i].metric, &variants[k].metric, spec.level)?;
                pairwise.push(PairwiseTest {
                    a: variants[i].variant,
                    b: variants[k].variant,
                    statistic: t.statistic,
                    p_value: t.p_value,
                    significant: t.significant,
                });
            }
        }
    }

    let mut report = RunReport {
        generator: rng::GENERATOR.to_string(),
        seed: spec.plan.seed,
        task: ds.task(),
        metric: if regression { "mse" } else { "mcr" }.to_string(),
        learner: spec.learner.clone(),
        plan: spec.plan,
        level: spec.level,
        splits: outcomes.into_iter().map(|o| o.info).collect(),
        variants,
        pairwise,
        ranking: String::new(),
    };
    report.ranking = if report.variants.len() >= 2 && spec.plan.n_splits >= 2 {
        rank_methods(&report)?
    } else {
        report.variants.iter().map(|v| v.variant.tag()).collect::<Vec<_>>().join(" ")
    };
    Ok(report)
}

/// Orders the report's variants by mean metric.
pub fn rank_methods(report: &RunReport) -> Result<String> {
    let names: Vec<String> = report.variants.iter().map(|v| v.variant.to_string()).collect();
    let metrics: Vec<Vec<f64>> = report.variants.iter().map(|v| v.metric.clone()).collect();
    rank(&names, &metrics, report.level)
}

/// Sorts methods by mean (stable for equal means) and joins neighbours with
/// `<` when their paired test is significant at `level`, `≤` otherwise.
pub fn rank(names: &[String], metrics: &[Vec<f64>], level: f64) -> Result<String> {
    if names.len() < 2 || names.len() != metrics.len() {
        return Err(Error::InvalidArgument("ranking needs at least two named methods".into()));
    }
    let means: Vec<f64> = metrics.iter().map(|m| mean(m)).collect();
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]));
    let mut p = Vec::with_capacity(order.len() - 1);
    for w in order.windows(2) {
        p.push(paired_t_test(&metrics[w[0]], &metrics[w[1]], level)?.p_value);
    }
    let sorted: Vec<&str> = order.iter().map(|&i| names[i].as_str()).collect();
    Ok(chain(&sorted, &p, level))
}

fn chain(sorted: &[&str], adjacent_p: &[f64], level: f64) -> String {
    let mut out = sorted[0].to_string();
    for (name, p) in sorted[1..].iter().zip(adjacent_p) {
        out.push_str(if *p < level { " < " } else { " ≤ " });
        out.push_str(name);
    }
    out
}

/// One row per variant: learner, variant, metric name, mean, sd.
pub fn write_summary<W: Write>(report: &RunReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "data", "metric", "mean", "sd"])?;
    for v in &report.variants {
        w.write_record([
            report.learner.learner.name(),
            v.variant.tag(),
            report.metric.as_str(),
            &v.mean.to_string(),
            &v.sd.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
