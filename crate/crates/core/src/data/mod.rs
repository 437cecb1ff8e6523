//! Sampled functions and datasets of curves observed on a shared grid.

mod csv_io;
mod synth;

pub use csv_io::{load_dataset, load_grid, save_dataset, save_grid, write_dataset, LoadOptions, TargetColumn};
pub use synth::{synthesize, SynthSpec, TargetRule, TrigFamily};

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SamplingGrid;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

/// One curve observed on a grid.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    grid: SamplingGrid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: SamplingGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        if let Some(l) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value at grid index {l}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &SamplingGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `n` curves (rows) sampled on one grid, with a scalar target per curve.
#[derive(Debug, Clone)]
pub struct FunctionalDataset {
    grid: SamplingGrid,
    rows: DMatrix<f64>,
    targets: Vec<f64>,
    task: Task,
}

impl FunctionalDataset {
    pub fn new(grid: SamplingGrid, rows: DMatrix<f64>, targets: Vec<f64>, task: Task) -> Result<Self> {
        let n = rows.nrows();
        if n < 2 {
            return Err(Error::Data(format!("a dataset needs at least 2 curves, got {n}")));
        }
        if rows.ncols() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: rows.ncols() });
        }
        if targets.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: targets.len() });
        }
        for i in 0..n {
            if let Some(l) = rows.row(i).iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!("non-finite value in curve {i} at grid index {l}")));
            }
        }
        if let Some(i) = targets.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite target for curve {i}")));
        }
        if task == Task::Classification {
            if let Some(i) = targets.iter().position(|&v| v != 1.0 && v != -1.0) {
                return Err(Error::Data(format!(
                    "classification target of curve {i} is {}, expected -1 or +1",
                    targets[i]
                )));
            }
        }
        Ok(Self { grid, rows, targets, task })
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    /// `n x p` matrix, one curve per row.
    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn p(&self) -> usize {
        self.rows.ncols()
    }

    pub fn curve(&self, i: usize) -> SampledFunction {
        SampledFunction {
            grid: self.grid.clone(),
            values: self.rows.row(i).iter().copied().collect(),
        }
    }

    /// Turns a regression target into labels: `-1` when strictly below
    /// `threshold`, `+1` otherwise.
    pub fn thresholded(&self, threshold: f64) -> Result<Self> {
        let targets = self
            .targets
            .iter()
            .map(|&y| if y < threshold { -1.0 } else { 1.0 })
            .collect();
        Self::new(self.grid.clone(), self.rows.clone(), targets, Task::Classification)
    }

    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), self.rows.clone(), targets, self.task)
    }
}

/// Adds i.i.d. `N(0, sd^2)` noise to every sampled value, row by row.
/// Targets are untouched; `sd = 0` returns an exact copy.
pub fn add_noise(ds: &FunctionalDataset, sd: f64, seed: u64) -> Result<FunctionalDataset> {
    if !(sd.is_finite() && sd >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise standard deviation must be >= 0, got {sd}")));
    }
    if sd == 0.0 {
        return Ok(ds.clone());
    }
    let normal = Normal::new(0.0, sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = rng::rng(seed);
    let mut rows = ds.rows.clone();
    for i in 0..rows.nrows() {
        for l in 0..rows.ncols() {
            rows[(i, l)] += normal.sample(&mut rng);
        }
    }
    FunctionalDataset::new(ds.grid.clone(), rows, ds.targets.clone(), ds.task)
}
