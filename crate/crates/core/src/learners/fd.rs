//! Finite-difference derivatives on (possibly non-uniform) grids.
//!
//! Interior points use three-point divided differences, which are exact for
//! quadratics; the ends use the one-sided difference of the nearest pair (first
//! order) or the nearest triple (second order).

use nalgebra::DMatrix;

use crate::data::SampledFunction;
use crate::error::{Error, Result};
use crate::grid::SamplingGrid;

pub fn fd_derivative(x: &SampledFunction, order: usize) -> Result<Vec<f64>> {
    derivative(x.grid().points(), x.values(), order)
}

/// Differentiates every row of an `n x p` matrix sampled on `grid`.
pub fn fd_rows(grid: &SamplingGrid, x: &DMatrix<f64>, order: usize) -> Result<DMatrix<f64>> {
    if x.ncols() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: x.ncols() });
    }
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for i in 0..x.nrows() {
        let row: Vec<f64> = x.row(i).iter().copied().collect();
        let d = derivative(grid.points(), &row, order)?;
        for (l, v) in d.into_iter().enumerate() {
            out[(i, l)] = v;
        }
    }
    Ok(out)
}

fn derivative(t: &[f64], f: &[f64], order: usize) -> Result<Vec<f64>> {
    let p = t.len();
    if f.len() != p {
        return Err(Error::DimensionMismatch { expected: p, found: f.len() });
    }
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidArgument(format!("finite differences support order 1 or 2, got {order}")));
    }
    if p < order + 1 {
        return Err(Error::InvalidArgument(format!(
            "order-{order} finite differences need at least {} points, got {p}",
            order + 1
        )));
    }
    let mut d = vec![0.0; p];
    if order == 1 {
        d[0] = (f[1] - f[0]) / (t[1] - t[0]);
        d[p - 1] = (f[p - 1] - f[p - 2]) / (t[p - 1] - t[p - 2]);
        for i in 1..p - 1 {
            let hl = t[i] - t[i - 1];
            let hr = t[i + 1] - t[i];
            d[i] = (-hr / (hl * (hl + hr))) * f[i - 1]
                + ((hr - hl) / (hl * hr)) * f[i]
                + (hl / (hr * (hl + hr))) * f[i + 1];
        }
    } else {
        let second = |i: usize| {
            let hl = t[i] - t[i - 1];
            let hr = t[i + 1] - t[i];
            2.0 * (f[i - 1] / (hl * (hl + hr)) - f[i] / (hl * hr) + f[i + 1] / (hr * (hl + hr)))
        };
        for (i, v) in d.iter_mut().enumerate().take(p - 1).skip(1) {
            *v = second(i);
        }
        d[0] = second(1);
        d[p - 1] = second(p - 2);
    }
    Ok(d)
}
