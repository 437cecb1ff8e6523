//! Synthetic curves: random trigonometric polynomials
//! `x(t) = sum_j a_j sin(2 pi j t) + b_j cos(2 pi j t)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{add_noise, FunctionalDataset, Task};
use crate::error::{Error, Result};
use crate::grid::SamplingGrid;
use crate::rng::{self, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TrigFamily {
    /// `a_j, b_j ~ N(0, j^-2)` independently for `j = 1..=terms`.
    Random { terms: usize },
    /// The same coefficients for every curve.
    Fixed { sin: Vec<f64>, cos: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetRule {
    /// Mean of the clean sampled values.
    Mean,
    /// `integral_0^1 x'(t)^2 dt = sum_j (2 pi j)^2 (a_j^2 + b_j^2) / 2`.
    DerivEnergy,
    /// `+1` when the derivative energy is at or above the sample median, `-1`
    /// otherwise.
    SignOfDerivEnergy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub family: TrigFamily,
    pub rule: TargetRule,
    pub noise_sd: f64,
    pub seed: u64,
}

struct Coefficients {
    sin: Vec<f64>,
    cos: Vec<f64>,
}

impl Coefficients {
    fn eval(&self, t: f64) -> f64 {
        let mut s = 0.0;
        for (j, (a, b)) in self.sin.iter().zip(&self.cos).enumerate() {
            let w = 2.0 * PI * (j + 1) as f64 * t;
            s += a * w.sin() + b * w.cos();
        }
        s
    }

    fn deriv_energy(&self) -> f64 {
        self.sin
            .iter()
            .zip(&self.cos)
            .enumerate()
            .map(|(j, (a, b))| {
                let w = 2.0 * PI * (j + 1) as f64;
                w * w * (a * a + b * b) / 2.0
            })
            .sum()
    }
}

/// Generates `spec.n` curves on `grid`. Coefficients and noise come from
/// separate streams derived from `spec.seed`; targets use the clean curves.
pub fn synthesize(grid: &SamplingGrid, spec: &SynthSpec) -> Result<FunctionalDataset> {
    if spec.n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 curves, got {}", spec.n)));
    }
    let coefs: Vec<Coefficients> = match &spec.family {
        TrigFamily::Random { terms } => {
            if *terms == 0 {
                return Err(Error::InvalidArgument("trigonometric family needs at least one term".into()));
            }
            let mut rng = rng::rng(rng::sub_seed(spec.seed, stream::SYNTH, 0));
            let normals: Vec<Normal<f64>> =
                (1..=*terms).map(|j| Normal::new(0.0, 1.0 / j as f64).unwrap()).collect();
            (0..spec.n)
                .map(|_| {
                    let mut sin = Vec::with_capacity(*terms);
                    let mut cos = Vec::with_capacity(*terms);
                    for d in &normals {
                        sin.push(d.sample(&mut rng));
                        cos.push(d.sample(&mut rng));
                    }
                    Coefficients { sin, cos }
                })
                .collect()
        }
        TrigFamily::Fixed { sin, cos } => {
            if sin.is_empty() || sin.len() != cos.len() {
                return Err(Error::InvalidArgument(
                    "fixed family needs equally many (>= 1) sine and cosine coefficients".into(),
                ));
            }
            (0..spec.n).map(|_| Coefficients { sin: sin.clone(), cos: cos.clone() }).collect()
        }
    };

    let p = grid.len();
    let rows = DMatrix::from_fn(spec.n, p, |i, l| coefs[i].eval(grid.points()[l]));
    let (targets, task) = match spec.rule {
        TargetRule::Mean => {
            let y = (0..spec.n).map(|i| rows.row(i).sum() / p as f64).collect();
            (y, Task::Regression)
        }
        TargetRule::DerivEnergy => (coefs.iter().map(Coefficients::deriv_energy).collect(), Task::Regression),
        TargetRule::SignOfDerivEnergy => {
            let e: Vec<f64> = coefs.iter().map(Coefficients::deriv_energy).collect();
            let mut sorted = e.clone();
            sorted.sort_by(f64::total_cmp);
            let k = sorted.len();
            let median = 0.5 * (sorted[(k - 1) / 2] + sorted[k / 2]);
            (e.iter().map(|&v| if v >= median { 1.0 } else { -1.0 }).collect(), Task::Classification)
        }
    };
    let clean = FunctionalDataset::new(grid.clone(), rows, targets, task)?;
    add_noise(&clean, spec.noise_sd, rng::sub_seed(spec.seed, stream::NOISE, 0))
}
