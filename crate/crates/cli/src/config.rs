//! Benchmark run configuration.
//!
//! ```toml
//! seed = 7
//! variants = ["O", "S1"]
//!
//! [dataset]
//! path = "tecator.csv"
//!
//! [learner]
//! kind = "krr-gaussian"
//!
//! [plan]
//! splits = 50
//! train = 160
//! test = 80
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use splinemetric::data::{LoadOptions, SynthSpec, TargetColumn, TargetRule, TrigFamily};
use splinemetric::harness::{BenchmarkSpec, LearnerSpec, PreprocessingVariant, SplitPlan};
use splinemetric::learners::{Learner, ParamsGrid, Scheme};
use splinemetric::spline::default_lambda_grid;
use splinemetric::Task;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub variants: Vec<String>,
    pub level: Option<f64>,
    pub lambda_grid: Option<Vec<f64>>,
    /// Gaussian noise added to every sampled value before splitting.
    pub noise_sd: Option<f64>,
    /// Turns a regression target into labels (`-1` strictly below).
    pub threshold: Option<f64>,
    pub dataset: Option<DatasetConfig>,
    pub synthetic: Option<SyntheticConfig>,
    pub learner: LearnerConfig,
    pub plan: PlanConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub target: Option<TargetValue>,
    pub task: Option<String>,
    #[serde(default = "yes")]
    pub rescale: bool,
    pub grid_file: Option<PathBuf>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum TargetValue {
    Index(usize),
    Name(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n: usize,
    pub p: usize,
    #[serde(default = "three")]
    pub terms: usize,
    pub rule: String,
    pub seed: Option<u64>,
}

fn three() -> usize {
    3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub kind: String,
    /// `loo` or `kfold`.
    pub scheme: Option<String>,
    pub folds: Option<usize>,
    #[serde(default)]
    pub center: bool,
    pub delta: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
    pub k: Option<Vec<usize>>,
    pub bandwidth: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub splits: usize,
    pub train: usize,
    pub test: usize,
    #[serde(default)]
    pub stratified: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

pub enum Source {
    File(PathBuf, LoadOptions),
    /// Spec plus uniform grid size.
    Synthetic(SynthSpec, usize),
}

/// A fully checked configuration.
pub struct Resolved {
    pub source: Source,
    pub noise_sd: f64,
    pub threshold: Option<f64>,
    pub spec: BenchmarkSpec,
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub splits: Option<usize>,
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

pub fn parse(text: &str) -> Result<RunConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

fn positive(problems: &mut Vec<String>, name: &str, values: &Option<Vec<f64>>) {
    if let Some(v) = values {
        if v.is_empty() {
            problems.push(format!("{name}: list is empty"));
        }
        for x in v {
            if !(x.is_finite() && *x > 0.0) {
                problems.push(format!("{name}: values must be finite and > 0, got {x}"));
            }
        }
    }
}

pub fn parse_task(s: &str) -> Option<Task> {
    match s {
        "regression" => Some(Task::Regression),
        "classification" => Some(Task::Classification),
        _ => None,
    }
}

pub fn parse_rule(s: &str) -> Option<TargetRule> {
    match s {
        "mean" => Some(TargetRule::Mean),
        "deriv-energy" => Some(TargetRule::DerivEnergy),
        "sign-of-deriv-energy" => Some(TargetRule::SignOfDerivEnergy),
        _ => None,
    }
}

pub fn parse_target(s: &str) -> TargetColumn {
    if s.eq_ignore_ascii_case("last") {
        TargetColumn::Last
    } else if let Ok(i) = s.parse() {
        TargetColumn::Index(i)
    } else {
        TargetColumn::Name(s.to_string())
    }
}

/// Checks everything that can be checked without data and reports every
/// problem found, not just the first.
pub fn resolve(cfg: RunConfig, base: &Path, ov: Overrides) -> Result<Resolved, Vec<String>> {
    let mut problems = Vec::new();
    let seed = ov.seed.unwrap_or(cfg.seed);
    let rel = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };

    if cfg.variants.is_empty() {
        problems.push("variants: list is empty".into());
    }
    let mut variants = Vec::new();
    for v in &cfg.variants {
        match v.parse::<PreprocessingVariant>() {
            Ok(v) if variants.contains(&v) => problems.push(format!("variants: {v} listed twice")),
            Ok(v) => variants.push(v),
            Err(e) => problems.push(format!("variants: {e}")),
        }
    }
    let level = cfg.level.unwrap_or(0.01);
    if !(level > 0.0 && level < 1.0) {
        problems.push(format!("level: must lie in (0, 1), got {level}"));
    }
    positive(&mut problems, "lambda_grid", &cfg.lambda_grid);
    let noise_sd = cfg.noise_sd.unwrap_or(0.0);
    if !(noise_sd.is_finite() && noise_sd >= 0.0) {
        problems.push(format!("noise_sd: must be finite and >= 0, got {noise_sd}"));
    }
    if let Some(t) = cfg.threshold {
        if !t.is_finite() {
            problems.push("threshold: must be finite".into());
        }
    }

    let source = match (&cfg.dataset, &cfg.synthetic) {
        (Some(_), Some(_)) => {
            problems.push("give either [dataset] or [synthetic], not both".into());
            None
        }
        (None, None) => {
            problems.push("missing [dataset] or [synthetic] section".into());
            None
        }
        (Some(d), None) => {
            let task = match d.task.as_deref().map(|t| (t, parse_task(t))) {
                None => Some(Task::Regression),
                Some((_, Some(t))) => Some(t),
                Some((t, None)) => {
                    problems.push(format!("dataset.task: expected regression or classification, got {t:?}"));
                    None
                }
            };
            let target = match &d.target {
                None => TargetColumn::Last,
                Some(TargetValue::Index(i)) => TargetColumn::Index(*i),
                Some(TargetValue::Name(s)) => parse_target(s),
            };
            task.map(|task| {
                Source::File(
                    rel(&d.path),
                    LoadOptions { target, task, rescale: d.rescale, grid_file: d.grid_file.as_ref().map(rel) },
                )
            })
        }
        (None, Some(s)) => {
            if s.n < 2 {
                problems.push(format!("synthetic.n: need at least 2 curves, got {}", s.n));
            }
            if s.p < 4 {
                problems.push(format!("synthetic.p: need at least 4 grid points, got {}", s.p));
            }
            if s.terms == 0 {
                problems.push("synthetic.terms: must be at least 1".into());
            }
            let rule = parse_rule(&s.rule);
            if rule.is_none() {
                problems.push(format!(
                    "synthetic.rule: expected mean, deriv-energy or sign-of-deriv-energy, got {:?}",
                    s.rule
                ));
            }
            rule.map(|rule| {
                Source::Synthetic(
                    SynthSpec {
                        n: s.n,
                        family: TrigFamily::Random { terms: s.terms },
                        rule,
                        noise_sd: 0.0,
                        seed: s.seed.unwrap_or(seed),
                    },
                    s.p,
                )
            })
        }
    };

    let learner = match cfg.learner.kind.as_str() {
        "krr-linear" => Some(Learner::KrrLinear),
        "krr-gaussian" => Some(Learner::KrrGaussian),
        "nke" => Some(Learner::Nke),
        "knn" => Some(Learner::Knn),
        other => {
            problems.push(format!("learner.kind: expected krr-linear, krr-gaussian, nke or knn, got {other:?}"));
            None
        }
    };
    let folds = cfg.learner.folds.unwrap_or(4);
    let scheme = match cfg.learner.scheme.as_deref() {
        None => Some(match learner {
            Some(Learner::KrrLinear | Learner::KrrGaussian) => Scheme::LeaveOneOut,
            _ => Scheme::KFold { k: folds },
        }),
        Some("loo") => Some(Scheme::LeaveOneOut),
        Some("kfold") => Some(Scheme::KFold { k: folds }),
        Some(other) => {
            problems.push(format!("learner.scheme: expected loo or kfold, got {other:?}"));
            None
        }
    };
    if folds < 2 {
        problems.push(format!("learner.folds: need at least 2, got {folds}"));
    }
    positive(&mut problems, "learner.delta", &cfg.learner.delta);
    positive(&mut problems, "learner.gamma", &cfg.learner.gamma);
    positive(&mut problems, "learner.bandwidth", &cfg.learner.bandwidth);
    if let Some(k) = &cfg.learner.k {
        if k.is_empty() || k.contains(&0) {
            problems.push("learner.k: list must be non-empty with values >= 1".into());
        }
    }
    let defaults = ParamsGrid::default();
    let grid = ParamsGrid {
        delta: cfg.learner.delta.clone().unwrap_or(defaults.delta),
        gamma: cfg.learner.gamma.clone().unwrap_or(defaults.gamma),
        k: cfg.learner.k.clone().unwrap_or(defaults.k),
        bandwidth: cfg.learner.bandwidth.clone().unwrap_or(defaults.bandwidth),
    };

    let n_splits = ov.splits.unwrap_or(cfg.plan.splits);
    if n_splits == 0 {
        problems.push("plan.splits: must be at least 1".into());
    }
    if cfg.plan.train < 2 || cfg.plan.test < 2 {
        problems.push(format!("plan: train and test must both be >= 2 (got {} and {})", cfg.plan.train, cfg.plan.test));
    }
    if let (Some(Scheme::KFold { k }), true) = (scheme, folds >= 2) {
        if k > cfg.plan.train {
            problems.push(format!("learner.folds: {k} exceeds plan.train = {}", cfg.plan.train));
        }
    }
    if let Some(Source::Synthetic(s, _)) = &source {
        if cfg.plan.train + cfg.plan.test > s.n {
            problems.push(format!(
                "plan: train + test = {} exceeds synthetic.n = {}",
                cfg.plan.train + cfg.plan.test,
                s.n
            ));
        }
    }
    if cfg.plan.stratified {
        let classification = cfg.threshold.is_some()
            || matches!(&source, Some(Source::File(_, o)) if o.task == Task::Classification)
            || matches!(&source, Some(Source::Synthetic(s, _)) if s.rule == TargetRule::SignOfDerivEnergy);
        if !classification {
            problems.push("plan.stratified: only applies to classification".into());
        }
        if !cfg.plan.test.is_multiple_of(2) {
            problems.push(format!("plan.test: stratified test sets need an even size, got {}", cfg.plan.test));
        }
    }

    if !problems.is_empty() {
        return Err(problems);
    }
    Ok(Resolved {
        source: source.expect("checked"),
        noise_sd,
        threshold: cfg.threshold,
        spec: BenchmarkSpec {
            variants,
            learner: LearnerSpec {
                learner: learner.expect("checked"),
                grid,
                scheme: scheme.expect("checked"),
                center: cfg.learner.center,
            },
            lambda_grid: cfg.lambda_grid.unwrap_or_else(default_lambda_grid),
            plan: SplitPlan {
                n_splits,
                train_size: cfg.plan.train,
                test_size: cfg.plan.test,
                stratified: cfg.plan.stratified,
                seed,
            },
            level,
        },
        json: ov.json.or_else(|| cfg.output.json.as_ref().map(rel)),
        csv: ov.csv.or_else(|| cfg.output.csv.as_ref().map(rel)),
    })
}
