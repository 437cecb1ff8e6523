use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use splinemetric::data::{self, load_dataset, write_dataset, LoadOptions, SynthSpec, TargetRule, TrigFamily};
use splinemetric::harness::{run_benchmark, write_summary};
use splinemetric::rng::{self, stream};
use splinemetric::spline::{default_lambda_grid, select_lambda};
use splinemetric::{Error, FunctionalDataset, Order, SamplingGrid, SplineSystem, Task};

use crate::config::{self, Overrides, Source};
use crate::output::write_atomic;
use crate::{
    BenchmarkArgs, InputArgs, LambdaArg, NoiseArgs, RuleArg, SmoothArgs, SplineArgs, SynthArgs, TaskArg,
    TransformArgs,
};

pub enum Failure {
    /// Bad input, configuration or I/O (exit code 2).
    Usage(String),
    /// Valid input that failed during computation (exit code 1).
    Compute(String),
}

type Outcome = Result<(), Failure>;

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn compute(e: impl ToString) -> Failure {
    Failure::Compute(e.to_string())
}

fn load(args: &InputArgs) -> Result<FunctionalDataset, Failure> {
    let opts = LoadOptions {
        target: config::parse_target(&args.target),
        task: match args.task {
            TaskArg::Regression => Task::Regression,
            TaskArg::Classification => Task::Classification,
        },
        rescale: !args.no_rescale,
        grid_file: args.grid_file.clone(),
    };
    load_dataset(&args.input, &opts).map_err(|e| match e {
        Error::Io(_) => Failure::Usage(e.to_string()),
        other => Failure::Usage(format!("{}: {other}", args.input.display())),
    })
}

fn save(path: &Path, ds: &FunctionalDataset) -> Outcome {
    write_atomic(path, |w| write_dataset(w, ds).map_err(|e| e.to_string())).map_err(usage)
}

fn candidates(spline: &SplineArgs) -> Result<Vec<f64>, Failure> {
    let c = spline.lambda_grid.clone().unwrap_or_else(default_lambda_grid);
    if c.is_empty() || c.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(usage("--lambda-grid values must be finite and > 0"));
    }
    Ok(c)
}

/// Resolves `--lambda` (selecting over all rows for `auto`) and builds the
/// spline system.
fn system(ds: &FunctionalDataset, spline: &SplineArgs) -> Result<SplineSystem, Failure> {
    let order = Order::new(spline.m).map_err(usage)?;
    let lambda = match spline.lambda {
        LambdaArg::Value(v) => v,
        LambdaArg::Auto => {
            let cands = candidates(spline)?;
            let sel = select_lambda(ds.grid(), order, ds.rows(), &cands).map_err(compute)?;
            log::info!("leave-one-out criterion {:e} at lambda {:e}", sel.criterion, sel.lambda);
            sel.lambda
        }
    };
    let sys = SplineSystem::build(ds.grid(), order, lambda).map_err(compute)?;
    println!("lambda\t{lambda}");
    Ok(sys)
}

pub fn smooth(a: &SmoothArgs) -> Outcome {
    if let Some(probe) = &a.probe {
        if probe.is_empty() || probe.iter().any(|t| !t.is_finite()) {
            return Err(usage("--probe needs finite evaluation points"));
        }
    }
    if a.deriv > a.spline.m {
        return Err(usage(format!("--deriv {} exceeds --m {}", a.deriv, a.spline.m)));
    }
    if let LambdaArg::Auto = a.spline.lambda {
        candidates(&a.spline)?;
    }
    let ds = load(&a.input)?;
    let sys = system(&ds, &a.spline)?;
    let fitted = ds.rows() * sys.hat().transpose();
    let out = FunctionalDataset::new(ds.grid().clone(), fitted, ds.targets().to_vec(), ds.task()).map_err(compute)?;

    let probes = match (&a.probe, &a.probe_output) {
        (Some(points), Some(path)) => {
            let mut values = DMatrix::zeros(ds.n(), points.len());
            for i in 0..ds.n() {
                let row: Vec<f64> = ds.rows().row(i).iter().copied().collect();
                let fit = sys.fit_values(&row).map_err(compute)?;
                for (l, &t) in points.iter().enumerate() {
                    values[(i, l)] = fit.evaluate(t, a.deriv).map_err(compute)?;
                }
            }
            Some((path, points, values))
        }
        _ => None,
    };

    save(&a.output, &out)?;
    if let Some((path, points, values)) = probes {
        write_atomic(path, |w| write_matrix(w, points, &values)).map_err(usage)?;
    }
    Ok(())
}

fn write_matrix(w: &mut dyn Write, head: &[f64], m: &DMatrix<f64>) -> Result<(), String> {
    let line = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    writeln!(w, "{}", line(&mut head.iter().copied())).map_err(|e| e.to_string())?;
    for i in 0..m.nrows() {
        writeln!(w, "{}", line(&mut m.row(i).iter().copied())).map_err(|e| e.to_string())?;
    }
    Ok(())
}

pub fn transform(a: &TransformArgs) -> Outcome {
    if a.invert && a.spline.lambda == LambdaArg::Auto {
        return Err(usage("--invert needs the numeric --lambda used by the forward transform"));
    }
    if let LambdaArg::Auto = a.spline.lambda {
        candidates(&a.spline)?;
    }
    let ds = load(&a.input)?;
    let sys = system(&ds, &a.spline)?;
    let rows = if a.invert { sys.invert_rows(ds.rows()) } else { sys.transform_rows(ds.rows()) }.map_err(compute)?;
    let out = FunctionalDataset::new(ds.grid().clone(), rows, ds.targets().to_vec(), ds.task()).map_err(compute)?;
    save(&a.output, &out)
}

pub fn synth(a: &SynthArgs) -> Outcome {
    let family = match (&a.sin, &a.cos) {
        (None, None) => TrigFamily::Random { terms: a.terms },
        (s, c) => {
            let len = s.as_ref().or(c.as_ref()).map_or(0, |v| v.len());
            TrigFamily::Fixed {
                sin: s.clone().unwrap_or_else(|| vec![0.0; len]),
                cos: c.clone().unwrap_or_else(|| vec![0.0; len]),
            }
        }
    };
    let spec = SynthSpec {
        n: a.n,
        family,
        rule: match a.rule {
            RuleArg::Mean => TargetRule::Mean,
            RuleArg::DerivEnergy => TargetRule::DerivEnergy,
            RuleArg::SignOfDerivEnergy => TargetRule::SignOfDerivEnergy,
        },
        noise_sd: a.noise_sd,
        seed: a.seed,
    };
    let grid = SamplingGrid::uniform(a.p).map_err(usage)?;
    let ds = data::synthesize(&grid, &spec).map_err(usage)?;
    save(&a.output, &ds)
}

pub fn noise(a: &NoiseArgs) -> Outcome {
    if !(a.sd.is_finite() && a.sd >= 0.0) {
        return Err(usage(format!("--sd must be finite and >= 0, got {}", a.sd)));
    }
    let ds = load(&a.input)?;
    let noisy = data::add_noise(&ds, a.sd, a.seed).map_err(compute)?;
    save(&a.output, &noisy)
}

pub fn benchmark(a: &BenchmarkArgs) -> Outcome {
    let text = std::fs::read_to_string(&a.config).map_err(|e| usage(format!("{}: {e}", a.config.display())))?;
    let cfg = config::parse(&text).map_err(|e| usage(format!("{}: {e}", a.config.display())))?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let ov = Overrides { seed: a.seed, splits: a.splits, json: a.output.clone(), csv: a.summary.clone() };
    let run = config::resolve(cfg, base, ov).map_err(|problems| {
        let mut msg = format!("{}: {} problem(s)", a.config.display(), problems.len());
        for p in problems {
            msg.push_str("\n  - ");
            msg.push_str(&p);
        }
        Failure::Usage(msg)
    })?;

    let ds = match &run.source {
        Source::File(path, opts) => load_dataset(path, opts).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        Source::Synthetic(spec, p) => {
            let grid = SamplingGrid::uniform(*p).map_err(usage)?;
            data::synthesize(&grid, spec).map_err(usage)?
        }
    };
    let ds = match run.threshold {
        Some(t) => ds.thresholded(t).map_err(usage)?,
        None => ds,
    };
    let ds = data::add_noise(&ds, run.noise_sd, rng::sub_seed(run.spec.plan.seed, stream::NOISE, 0)).map_err(usage)?;
    run.spec.validate(&ds).map_err(usage)?;

    let report = run_benchmark(&ds, &run.spec).map_err(compute)?;
    let mut json = serde_json::to_string_pretty(&report).map_err(compute)?;
    json.push('\n');
    match &run.json {
        Some(path) => write_atomic(path, |w| w.write_all(json.as_bytes()).map_err(|e| e.to_string())).map_err(usage)?,
        None => print!("{json}"),
    }
    if let Some(path) = &run.csv {
        write_atomic(path, |w| write_summary(&report, w).map_err(|e| e.to_string())).map_err(usage)?;
    }
    for v in &report.variants {
        eprintln!("{:<4} {} mean {:.6} sd {:.6}", v.variant.tag(), report.metric, v.mean, v.sd);
    }
    println!("{}", report.ranking);
    Ok(())
}
