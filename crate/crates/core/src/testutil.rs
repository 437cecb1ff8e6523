//! Independent numerical oracles shared by unit tests.

/// 5-point Gauss–Legendre nodes and weights on `[-1, 1]`; exact for
/// polynomials of degree <= 9.
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_47),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

pub fn gauss_legendre(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL5.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Integrates a piecewise-smooth function over `[0, 1]`, splitting at every
/// breakpoint and subdividing each piece `sub` times.
pub fn piecewise_integral(breaks: &[f64], sub: usize, f: impl Fn(f64) -> f64) -> f64 {
    let mut knots: Vec<f64> = breaks.iter().copied().filter(|&b| b > 0.0 && b < 1.0).collect();
    knots.push(0.0);
    knots.push(1.0);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut total = 0.0;
    for w in knots.windows(2) {
        let h = (w[1] - w[0]) / sub as f64;
        for k in 0..sub {
            let a = w[0] + k as f64 * h;
            total += gauss_legendre(a, a + h, &f);
        }
    }
    total
}
