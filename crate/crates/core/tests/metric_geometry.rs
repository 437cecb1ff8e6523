use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splinemetric::learners::{KernelSpec, KrrModel};
use splinemetric::{Order, SamplingGrid, SplineSystem};

fn curves(rng: &mut ChaCha8Rng, n: usize, grid: &SamplingGrid) -> DMatrix<f64> {
    DMatrix::from_fn(n, grid.len(), |i, l| {
        let t = grid.points()[l];
        let phase = i as f64 * 0.37;
        (6.0 * t + phase).sin() * (1.0 + 0.1 * i as f64) + 0.05 * rng.random_range(-1.0..1.0)
    })
}

/// Ridge regression written directly against the spline metric:
/// K_ij = x_i^T M x_j, no transform involved.
fn metric_gram_predict(x: &DMatrix<f64>, y: &[f64], m: &DMatrix<f64>, delta: f64, u: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows();
    let k = x * m * x.transpose() + DMatrix::identity(n, n) * delta;
    let c = k.lu().solve(&DVector::from_column_slice(y)).unwrap();
    let cross = u * m * x.transpose();
    (cross * c).iter().copied().collect()
}

#[test]
fn linear_krr_on_transformed_rows_matches_metric_gram() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for (order, lambda) in [(Order::One, 1e-3), (Order::Two, 1e-2), (Order::Two, 1e-6)] {
        let grid = SamplingGrid::uniform(40).unwrap();
        let sys = SplineSystem::build(&grid, order, lambda).unwrap();
        let x = curves(&mut rng, 25, &grid);
        let y: Vec<f64> = (0..25).map(|i| (i as f64 * 0.2).cos()).collect();
        let u = curves(&mut rng, 7, &grid);

        let z = sys.transform_rows(&x).unwrap();
        let model = KrrModel::fit(&z, &y, KernelSpec::Linear, 0.5, false).unwrap();
        let via_transform = model.predict_rows(&sys.transform_rows(&u).unwrap()).unwrap();
        let direct = metric_gram_predict(&x, &y, sys.metric(), 0.5, &u);
        for (a, b) in via_transform.iter().zip(&direct) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn gaussian_krr_sees_only_metric_distances() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let grid = SamplingGrid::uniform(30).unwrap();
    let sys = SplineSystem::build(&grid, Order::Two, 1e-3).unwrap();
    let x = curves(&mut rng, 15, &grid);
    let y: Vec<f64> = (0..15).map(|i| i as f64).collect();
    let z = sys.transform_rows(&x).unwrap();
    let gamma = 0.05;
    let model = KrrModel::fit(&z, &y, KernelSpec::gaussian(gamma).unwrap(), 0.1, false).unwrap();

    let dist2 = |a: usize, b: usize| {
        let d = (x.row(a) - x.row(b)).transpose();
        (d.transpose() * sys.metric() * &d)[0]
    };
    let k = DMatrix::from_fn(15, 15, |a, b| (-gamma * dist2(a, b)).exp() + if a == b { 0.1 } else { 0.0 });
    let c = k.lu().solve(&DVector::from_column_slice(&y)).unwrap();
    for (a, b) in model.coefficients().iter().zip(c.iter()) {
        assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()));
    }
}

fn sorted_grid() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.02f64..0.98, 6..30).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cholesky_identity(points in sorted_grid(), m in 1usize..=2, log_l in -6.0f64..1.0) {
        prop_assume!(points.len() >= 4);
        let grid = SamplingGrid::new(points).unwrap();
        let sys = SplineSystem::build(&grid, Order::new(m).unwrap(), 10f64.powf(log_l)).unwrap();
        let r = sys.cholesky_factor();
        let err = (r.transpose() * r - sys.metric()).amax();
        prop_assert!(err <= 1e-9 * sys.metric().amax().max(1.0));
    }

    #[test]
    fn transform_is_an_isometry(points in sorted_grid(), seed in 0u64..1000) {
        prop_assume!(points.len() >= 4);
        let grid = SamplingGrid::new(points).unwrap();
        let sys = SplineSystem::build(&grid, Order::Two, 1e-2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = grid.len();
        let u = DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
        let v = DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
        let x = DMatrix::from_rows(&[u.transpose(), v.transpose()]);
        let z = sys.transform_rows(&x).unwrap();
        let lhs = z.row(0).dot(&z.row(1));
        let rhs = (u.transpose() * sys.metric() * &v)[0];
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        let back = sys.invert_rows(&z).unwrap();
        prop_assert!((back - x).amax() < 1e-7);
    }

    #[test]
    fn metric_is_symmetric_positive(points in sorted_grid(), m in 1usize..=2) {
        prop_assume!(points.len() >= 4);
        let grid = SamplingGrid::new(points).unwrap();
        let sys = SplineSystem::build(&grid, Order::new(m).unwrap(), 1e-3).unwrap();
        let mat = sys.metric();
        prop_assert!((mat - mat.transpose()).amax() <= 1e-12 * mat.amax());
        let eig = mat.clone().symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|e| *e > 0.0));
    }
}
