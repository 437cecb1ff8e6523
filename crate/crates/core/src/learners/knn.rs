//! Brute-force k-nearest neighbours with Euclidean distance.
//!
//! Distance ties go to the lower row index. Classification returns the sign
//! of the neighbours' mean label, `+1` when that mean is 0.

use nalgebra::DMatrix;

use super::{check_finite, row_sq_dist};
use crate::data::Task;
use crate::error::{Error, Result};

pub fn knn_predict(x: &DMatrix<f64>, y: &[f64], k: usize, u: &[f64], task: Task) -> Result<f64> {
    KnnModel::new(x, y, k, task)?.predict(u)
}

#[derive(Debug, Clone)]
pub struct KnnModel {
    inputs: DMatrix<f64>,
    targets: Vec<f64>,
    k: usize,
    task: Task,
}

impl KnnModel {
    pub fn new(x: &DMatrix<f64>, y: &[f64], k: usize, task: Task) -> Result<Self> {
        let n = x.nrows();
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: y.len() });
        }
        if k == 0 || k > n {
            return Err(Error::InvalidArgument(format!("k must lie in 1..={n}, got {k}")));
        }
        check_finite(x, y)?;
        Ok(Self { inputs: x.clone(), targets: y.to_vec(), k, task })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn predict(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.inputs.ncols() {
            return Err(Error::DimensionMismatch { expected: self.inputs.ncols(), found: u.len() });
        }
        let mut order: Vec<(f64, usize)> =
            (0..self.inputs.nrows()).map(|i| (row_sq_dist(&self.inputs, i, u), i)).collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < order.len() {
            order.select_nth_unstable_by(self.k - 1, cmp);
        }
        let mut nearest = order[..self.k].to_vec();
        nearest.sort_by(cmp);
        let mean = nearest.iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / self.k as f64;
        Ok(match self.task {
            Task::Regression => mean,
            Task::Classification => {
                if mean < 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
        })
    }

    pub fn predict_rows(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        (0..x.nrows())
            .map(|i| self.predict(x.row(i).transpose().as_slice()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_and_all_neighbours() {
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 2.0, 10.0]);
        let y = [1.0, 2.0, 3.0, 10.0];
        assert_eq!(knn_predict(&x, &y, 1, &[1.9], Task::Regression).unwrap(), 3.0);
        assert_eq!(knn_predict(&x, &y, 4, &[1.9], Task::Regression).unwrap(), 4.0);
        let labels = [1.0, -1.0, -1.0, 1.0];
        assert_eq!(knn_predict(&x, &labels, 4, &[0.0], Task::Classification).unwrap(), 1.0);
        let labels = [1.0, -1.0, -1.0, -1.0];
        assert_eq!(knn_predict(&x, &labels, 4, &[0.0], Task::Classification).unwrap(), -1.0);
        assert!(knn_predict(&x, &y, 0, &[0.0], Task::Regression).is_err());
        assert!(knn_predict(&x, &y, 5, &[0.0], Task::Regression).is_err());
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        let x = DMatrix::from_row_slice(3, 1, &[-1.0, 1.0, 5.0]);
        assert_eq!(knn_predict(&x, &[7.0, 9.0, 0.0], 1, &[0.0], Task::Regression).unwrap(), 7.0);
    }

    /// Exhaustive sort of all distances as the oracle.
    #[test]
    fn planted_points_match_exhaustive_sort() {
        let pts: [[f64; 2]; 6] = [[0.0, 0.0], [1.0, 0.1], [0.2, 2.0], [3.0, 3.0], [-1.5, 0.4], [0.6, -0.9]];
        let x = DMatrix::from_fn(6, 2, |i, j| pts[i][j]);
        let y = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
        let u = [0.4, 0.3];
        let mut d: Vec<(f64, usize)> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| ((p[0] - u[0]).powi(2) + (p[1] - u[1]).powi(2), i))
            .collect();
        d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for k in 1..=6 {
            let expected = d[..k].iter().map(|&(_, i)| y[i]).sum::<f64>() / k as f64;
            assert_eq!(knn_predict(&x, &y, k, &u, Task::Regression).unwrap(), expected);
        }
    }

    #[test]
    fn permutation_invariant_without_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 30;
        let x = DMatrix::from_fn(n, 3, |_, _| rng.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let xp = x.select_rows(&perm);
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        for _ in 0..20 {
            let u: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            for k in [1, 3, 7] {
                let a = knn_predict(&x, &y, k, &u, Task::Regression).unwrap();
                let b = knn_predict(&xp, &yp, k, &u, Task::Regression).unwrap();
                // the neighbour set is identical; summation order may differ
                assert!((a - b).abs() < 1e-15);
            }
        }
    }
}
