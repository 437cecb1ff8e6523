//! Smoothing splines on a sampling grid and the Sobolev metric they induce on
//! sampled vectors.
//!
//! For a grid `t_1 < ... < t_p`, order `m` and smoothing level `lambda >= 0`,
//! the spline of the samples `x` minimizes
//! `sum_l (x_l - h(t_l))^2 + lambda * integral (h^(m))^2` over `H^m` (the
//! per-point average form of the objective uses `lambda / p`). The solution is
//! `s(t) = sum_k c0_k w_k(t) + sum_l c1_l k1(t_l, t)` with `c0 = M0 x`,
//! `c1 = M1 x`, where
//!
//! ```text
//! M0 = (U G^-1 U^T)^-1 U G^-1,   M1 = G^-1 (I - U^T M0),   G = K1 + lambda I
//! ```
//!
//! `U` holds the null-space basis values `w_k(t_l)` and `K1 = (k1(t_i, t_j))`.
//! Both matrices are the leading blocks of the inverse of the bordered matrix
//! `[[G, U^T], [U, 0]]`, which is what gets factorized (pivoted LU); this also
//! covers `lambda = 0` on grids containing `t = 0`, where `K1` is singular.
//!
//! The `H^m` inner product of two fitted splines is `u^T M v` with
//! `M = M0^T W M0 + M1^T K1 M1`; `R` is the upper Cholesky factor, `R^T R = M`,
//! so `|R u - R v|` is the Sobolev distance of the smoothed curves. The hat
//! matrix `A = U^T M0 + K1 M1 = I - lambda M1` maps samples to fitted values.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::SampledFunction;
use crate::error::{Error, Result};
use crate::grid::SamplingGrid;
use crate::rkhs::{k1, k1_partial, Order, PolyBasis};

/// Guard on `1 - A_tt` in the leave-one-out denominators.
pub const LOO_EPS: f64 = 1e-8;

/// 25 log-spaced values in `[1e-10, 1e2]`.
pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(1e-10, 1e2, 25)
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect()
}

/// All grid- and `lambda`-dependent matrices of the spline operator.
#[derive(Debug, Clone)]
pub struct SplineSystem {
    grid: SamplingGrid,
    order: Order,
    lambda: f64,
    u: DMatrix<f64>,
    k1: DMatrix<f64>,
    m0: DMatrix<f64>,
    m1: DMatrix<f64>,
    metric: DMatrix<f64>,
    chol: DMatrix<f64>,
    hat: DMatrix<f64>,
    jitter: f64,
}

pub(crate) struct Operators {
    pub u: DMatrix<f64>,
    pub k1: DMatrix<f64>,
    pub m0: DMatrix<f64>,
    pub m1: DMatrix<f64>,
}

/// Solves the bordered system for `M0` and `M1` on raw points.
pub(crate) fn assemble(points: &[f64], order: Order, lambda: f64) -> Result<Operators> {
    let p = points.len();
    let m = order.m();
    if p < m {
        return Err(Error::System(format!("order {m} needs at least {m} sampling points, got {p}")));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("smoothing level must be finite and >= 0, got {lambda}")));
    }
    let basis = PolyBasis::new(order);
    let u = DMatrix::from_fn(m, p, |k, l| basis.eval(k, points[l]));
    let k1m = DMatrix::from_fn(p, p, |i, j| k1(points[i], points[j], order));

    let mut bordered = DMatrix::<f64>::zeros(p + m, p + m);
    bordered.view_mut((0, 0), (p, p)).copy_from(&k1m);
    for l in 0..p {
        bordered[(l, l)] += lambda;
    }
    bordered.view_mut((0, p), (p, m)).copy_from(&u.transpose());
    bordered.view_mut((p, 0), (m, p)).copy_from(&u);

    let mut rhs = DMatrix::<f64>::zeros(p + m, p);
    rhs.view_mut((0, 0), (p, p)).fill_with_identity();

    let lu = bordered.clone().lu();
    let sol = lu.solve(&rhs).ok_or_else(|| {
        Error::System("bordered spline system is singular: the grid cannot determine the polynomial part".into())
    })?;
    let resid = (&bordered * &sol - &rhs).amax();
    if !sol.iter().all(|v| v.is_finite()) || resid > 1e-6 {
        return Err(Error::System(format!(
            "bordered spline system is numerically singular (residual {resid:.3e}); \
             the grid and boundary conditions are incompatible at lambda = {lambda}"
        )));
    }
    let m1 = sol.view((0, 0), (p, p)).into_owned();
    let m0 = sol.view((p, 0), (m, p)).into_owned();
    Ok(Operators { u, k1: k1m, m0, m1 })
}

impl SplineSystem {
    /// Builds the operator matrices, the metric `M`, its Cholesky factor and
    /// the hat matrix. Fails rather than return a metric that is not
    /// positive definite; a single diagonal jitter of `1e-12 trace(M) / p` is
    /// tried before giving up.
    pub fn build(grid: &SamplingGrid, order: Order, lambda: f64) -> Result<Self> {
        let Operators { u, k1, m0, m1 } = assemble(grid.points(), order, lambda)?;
        let p = grid.len();
        let w = PolyBasis::new(order).gram();

        let raw = m0.transpose() * &w * &m0 + m1.transpose() * &k1 * &m1;
        let metric = (&raw + raw.transpose()) * 0.5;

        let mut jitter = 0.0;
        let chol = match metric.clone().cholesky() {
            Some(c) => c,
            None => {
                jitter = 1e-12 * metric.trace() / p as f64;
                let mut shifted = metric.clone();
                for l in 0..p {
                    shifted[(l, l)] += jitter;
                }
                shifted.cholesky().ok_or_else(|| {
                    Error::Conditioning(format!(
                        "spline metric is not numerically positive definite (p = {p}, m = {order}, lambda = {lambda})"
                    ))
                })?
            }
        };
        let r = chol.l().transpose();
        let hat = u.transpose() * &m0 + &k1 * &m1;

        Ok(Self { grid: grid.clone(), order, lambda, u, k1, m0, m1, metric, chol: r, hat, jitter })
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Basis values `U = (w_k(t_l))`, `m x p`.
    pub fn basis_values(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn k1(&self) -> &DMatrix<f64> {
        &self.k1
    }

    pub fn m0(&self) -> &DMatrix<f64> {
        &self.m0
    }

    pub fn m1(&self) -> &DMatrix<f64> {
        &self.m1
    }

    /// `M = M0^T W M0 + M1^T K1 M1`.
    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    /// Upper-triangular `R` with `R^T R = M` (up to the recorded jitter).
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn hat(&self) -> &DMatrix<f64> {
        &self.hat
    }

    /// Diagonal shift added before the Cholesky factorization succeeded
    /// (0 when none was needed).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn check(&self, x: &SampledFunction) -> Result<()> {
        if x.grid().same_as(&self.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.grid.len() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.grid.len(), found: len })
        }
    }

    pub fn fit(&self, x: &SampledFunction) -> Result<SplineFit> {
        self.check(x)?;
        self.fit_values(x.values())
    }

    /// Fits raw sample values assumed to lie on this system's grid.
    pub fn fit_values(&self, x: &[f64]) -> Result<SplineFit> {
        self.check_len(x.len())?;
        let x = DVector::from_column_slice(x);
        Ok(SplineFit {
            grid: self.grid.clone(),
            order: self.order,
            c0: &self.m0 * &x,
            c1: &self.m1 * &x,
        })
    }

    /// Spline values at the grid points, `A x`.
    pub fn smooth_values(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_len(x.len())?;
        Ok(&self.hat * DVector::from_column_slice(x))
    }

    /// `u^T M v`: the `H^m` inner product of the splines fitted to `u` and `v`.
    pub fn inner(&self, u: &SampledFunction, v: &SampledFunction) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.inner_values(u.values(), v.values()))
    }

    pub(crate) fn inner_values(&self, u: &[f64], v: &[f64]) -> f64 {
        let u = DVector::from_column_slice(u);
        let v = DVector::from_column_slice(v);
        u.dot(&(&self.metric * v))
    }

    /// `R u`.
    pub fn transform(&self, u: &SampledFunction) -> Result<DVector<f64>> {
        self.check(u)?;
        Ok(&self.chol * DVector::from_column_slice(u.values()))
    }

    /// Applies `R` to every row of an `n x p` matrix, i.e. returns `X R^T`.
    pub fn transform_rows(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_len(x.ncols())?;
        Ok(x * self.chol.transpose())
    }

    /// Solves `R u = z` for every row `z` of an `n x p` matrix.
    pub fn invert_rows(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_len(z.ncols())?;
        let zt = z.transpose();
        let ut = self
            .chol
            .solve_upper_triangular(&zt)
            .ok_or_else(|| Error::Conditioning("Cholesky factor has a zero pivot".into()))?;
        Ok(ut.transpose())
    }

    /// Leave-one-out reconstruction error summed over the rows of `x`
    /// (`n x p`):
    /// `sum_i (1/p) sum_t ((x_i(t) - s_i(t)) / (1 - A_tt))^2`.
    ///
    /// Residuals and `1 - A_tt` are taken from `lambda M1` (equal to `I - A`),
    /// avoiding the cancellation of `x - A x` when `A` is close to `I`.
    pub fn loo_criterion(&self, x: &DMatrix<f64>) -> Result<f64> {
        self.check_len(x.ncols())?;
        let p = self.grid.len();
        let mut denom = Vec::with_capacity(p);
        for t in 0..p {
            let d = self.lambda * self.m1[(t, t)];
            if d.is_nan() || d <= LOO_EPS {
                return Err(Error::DegenerateSmoother { index: t, value: 1.0 - d });
            }
            denom.push(d);
        }
        // residual rows: lambda * (M1 x_i) = lambda * x_i^T M1^T
        let resid = x * self.m1.transpose() * self.lambda;
        let mut total = 0.0;
        for i in 0..x.nrows() {
            let row: f64 = (0..p).map(|t| (resid[(i, t)] / denom[t]).powi(2)).sum();
            total += row / p as f64;
        }
        Ok(total)
    }
}

/// Coefficients of one fitted spline.
#[derive(Debug, Clone)]
pub struct SplineFit {
    grid: SamplingGrid,
    order: Order,
    c0: DVector<f64>,
    c1: DVector<f64>,
}

impl SplineFit {
    pub fn null_coefficients(&self) -> &DVector<f64> {
        &self.c0
    }

    pub fn kernel_coefficients(&self) -> &DVector<f64> {
        &self.c1
    }

    pub fn order(&self) -> Order {
        self.order
    }

    /// `D^j s(t)` for `0 <= j <= m`.
    pub fn evaluate(&self, t: f64, j: usize) -> Result<f64> {
        let m = self.order.m();
        if j > m {
            return Err(Error::DerivativeOrder { j, m });
        }
        let basis = PolyBasis::new(self.order);
        let mut s: f64 = (0..m).map(|k| self.c0[k] * basis.deriv(k, t, j)).sum();
        for (l, &tl) in self.grid.points().iter().enumerate() {
            s += self.c1[l] * k1_partial(tl, t, self.order, j)?;
        }
        Ok(s)
    }
}

/// Outcome of a smoothing-level search.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaSelection {
    pub lambda: f64,
    pub criterion: f64,
    /// `(lambda, criterion)` per candidate, in input order; `None` marks
    /// candidates whose smoother is degenerate.
    pub curve: Vec<(f64, Option<f64>)>,
}

/// Picks the candidate minimizing [`SplineSystem::loo_criterion`] over the
/// rows of `x`. Criteria within `1e-12` of the data energy
/// `sum_i (1/p) |x_i|^2` count as ties and resolve toward the larger
/// `lambda`. Candidates are evaluated in parallel; the result does not depend
/// on scheduling.
pub fn select_lambda(
    grid: &SamplingGrid,
    order: Order,
    x: &DMatrix<f64>,
    candidates: &[f64],
) -> Result<LambdaSelection> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no smoothing-level candidates".into()));
    }
    if let Some(bad) = candidates.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(Error::InvalidArgument(format!("smoothing-level candidates must be > 0, got {bad}")));
    }
    if x.ncols() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: x.ncols() });
    }
    let results: Vec<Result<f64>> = candidates
        .par_iter()
        .map(|&lambda| SplineSystem::build(grid, order, lambda)?.loo_criterion(x))
        .collect();

    let mut curve = Vec::with_capacity(candidates.len());
    let mut last_err = None;
    for (&lambda, r) in candidates.iter().zip(results) {
        match r {
            Ok(c) => curve.push((lambda, Some(c))),
            Err(e @ (Error::DegenerateSmoother { .. } | Error::Conditioning(_) | Error::System(_))) => {
                log::debug!("lambda {lambda:e} skipped: {e}");
                curve.push((lambda, None));
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    let best = curve
        .iter()
        .filter_map(|(_, c)| *c)
        .min_by(f64::total_cmp)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "every smoothing-level candidate is degenerate (last: {})",
                last_err.map(|e| e.to_string()).unwrap_or_default()
            ))
        })?;
    let p = grid.len() as f64;
    let energy: f64 = x.iter().map(|v| v * v).sum::<f64>() / p;
    let tol = 1e-12 * energy.max(best);
    let (lambda, criterion) = curve
        .iter()
        .filter_map(|&(l, c)| c.filter(|&c| c <= best + tol).map(|c| (l, c)))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("the minimum itself qualifies");
    Ok(LambdaSelection { lambda, criterion, curve })
}
