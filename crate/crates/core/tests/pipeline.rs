use splinemetric::data::{load_dataset, save_dataset, synthesize, LoadOptions, SynthSpec, TargetRule, TrigFamily};
use splinemetric::harness::{run_benchmark, write_summary, BenchmarkSpec, LearnerSpec, PreprocessingVariant, SplitPlan};
use splinemetric::learners::{Learner, ParamsGrid, Scheme};
use splinemetric::spline::default_lambda_grid;
use splinemetric::{SamplingGrid, Task};

/// CSV round trip followed by a classification benchmark on the reloaded data.
#[test]
fn saved_dataset_benchmarks_like_the_original() {
    let grid = SamplingGrid::uniform(24).unwrap();
    let spec = SynthSpec {
        n: 60,
        family: TrigFamily::Random { terms: 3 },
        rule: TargetRule::SignOfDerivEnergy,
        noise_sd: 0.0,
        seed: 17,
    };
    let ds = synthesize(&grid, &spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curves.csv");
    save_dataset(&path, &ds).unwrap();
    let opts = LoadOptions { task: Task::Classification, ..Default::default() };
    let back = load_dataset(&path, &opts).unwrap();
    assert_eq!(back.rows(), ds.rows());
    assert_eq!(back.targets(), ds.targets());
    assert_eq!(back.grid().points(), ds.grid().points());

    let bench = BenchmarkSpec {
        variants: vec![PreprocessingVariant::O, PreprocessingVariant::S1, PreprocessingVariant::FD2],
        learner: LearnerSpec { learner: Learner::Knn, grid: ParamsGrid::default(), scheme: Scheme::KFold { k: 4 }, center: false },
        lambda_grid: default_lambda_grid(),
        plan: SplitPlan { n_splits: 6, train_size: 36, test_size: 20, stratified: true, seed: 5 },
        level: 0.01,
    };
    let a = run_benchmark(&ds, &bench).unwrap();
    let b = run_benchmark(&back, &bench).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    assert_eq!(a.pairwise.len(), 3);
    for v in &a.variants {
        assert!(v.metric.iter().all(|m| (0.0..=1.0).contains(m)));
        assert!(v.params.iter().all(|p| p.k.is_some()));
    }
    let mut buf = Vec::new();
    write_summary(&a, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
}
