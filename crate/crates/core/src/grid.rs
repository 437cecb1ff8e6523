//! Sampling grids on `[0, 1]` and their mesh statistics.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Ordered, distinct sampling points in `[0, 1]` shared by every curve of a
/// dataset. Cloning is cheap (the points live behind an `Arc`).
#[derive(Debug, Clone)]
pub struct SamplingGrid {
    points: Arc<[f64]>,
}

/// Quasi-uniformity summary of a grid: the largest gap (boundary gaps to 0 and
/// 1 included), the smallest interior gap and their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshStats {
    pub max_gap: f64,
    pub min_gap: f64,
    pub ratio: f64,
}

impl SamplingGrid {
    /// Validates and wraps the points. At least two points are required, they
    /// must be finite, strictly increasing and inside `[0, 1]`.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Grid(format!(
                "a sampling grid needs at least 2 points, got {}",
                points.len()
            )));
        }
        validate_points(&points)?;
        Ok(Self { points: points.into() })
    }

    /// `p` equispaced points `0, 1/(p-1), ..., 1`.
    pub fn uniform(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::Grid(format!("a sampling grid needs at least 2 points, got {p}")));
        }
        let step = (p - 1) as f64;
        Self::new((0..p).map(|l| l as f64 / step).collect())
    }

    /// Affinely maps arbitrary distinct abscissae (e.g. wavelengths) onto
    /// `[0, 1]`, first point to 0 and last to 1.
    pub fn rescaled(abscissae: &[f64]) -> Result<Self> {
        if abscissae.len() < 2 {
            return Err(Error::Grid(format!(
                "a sampling grid needs at least 2 points, got {}",
                abscissae.len()
            )));
        }
        if let Some(bad) = abscissae.iter().find(|v| !v.is_finite()) {
            return Err(Error::Grid(format!("non-finite abscissa {bad}")));
        }
        check_increasing(abscissae)?;
        let lo = abscissae[0];
        let hi = abscissae[abscissae.len() - 1];
        let span = hi - lo;
        let mut points: Vec<f64> = abscissae.iter().map(|&a| (a - lo) / span).collect();
        // pin the endpoints against rounding
        points[0] = 0.0;
        *points.last_mut().unwrap() = 1.0;
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mesh_stats(&self) -> MeshStats {
        mesh_stats(&self.points).expect("validated grids have at least two points")
    }

    /// Same points as `other` (pointer equality short-circuits).
    pub fn same_as(&self, other: &SamplingGrid) -> bool {
        Arc::ptr_eq(&self.points, &other.points) || self.points[..] == other.points[..]
    }
}

impl PartialEq for SamplingGrid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

fn check_increasing(points: &[f64]) -> Result<()> {
    for (l, w) in points.windows(2).enumerate() {
        if w[1] <= w[0] {
            let what = if w[1] == w[0] { "duplicate" } else { "decreasing" };
            return Err(Error::Grid(format!(
                "{what} abscissae at positions {l} and {}: {} then {}",
                l + 1,
                w[0],
                w[1]
            )));
        }
    }
    Ok(())
}

fn validate_points(points: &[f64]) -> Result<()> {
    if let Some(bad) = points.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
        return Err(Error::Grid(format!("sampling point {bad} outside [0, 1]")));
    }
    check_increasing(points)
}

/// Largest gap `max{t_1, t_2 - t_1, ..., 1 - t_last}`, smallest interior gap
/// `min{t_{i+1} - t_i}` and their ratio. Points are assumed sorted.
pub fn mesh_stats(points: &[f64]) -> Result<MeshStats> {
    if points.len() < 2 {
        return Err(Error::Grid(
            "mesh statistics need at least two points (the smallest gap is undefined)".into(),
        ));
    }
    let first = points[0];
    let last = points[points.len() - 1];
    let mut max_gap = first.max(1.0 - last);
    let mut min_gap = f64::INFINITY;
    for w in points.windows(2) {
        let gap = w[1] - w[0];
        max_gap = max_gap.max(gap);
        min_gap = min_gap.min(gap);
    }
    Ok(MeshStats { max_gap, min_gap, ratio: max_gap / min_gap })
}
