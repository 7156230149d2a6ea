//! Test-only oracles, kept independent of the closed-form derivative code.
#![allow(dead_code)]

use termrisk::numerics::{integrate_finite, integrate_semi_infinite, QuadratureSpec};
use termrisk::ModelParams;

pub fn published() -> ModelParams {
    ModelParams::new(0.5596, 35.5837, 0.5587, 385.6361, 0.48300).unwrap()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

/// Central difference with two levels of Richardson extrapolation.
pub fn richardson<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let (d1, d2, d3) = (d(h), d(h / 2.0), d(h / 4.0));
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d3 - d2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

/// Fourth-order five-point gradient.
pub fn gradient_4th<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let h = 1e-3 * x[i].abs().max(1.0);
            let at = |s: f64| {
                let mut p = x.to_vec();
                p[i] += s * h;
                f(&p)
            };
            (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h)
        })
        .collect()
}

/// ∫_{x_lo}^{x_hi} ∫_{y_lo(x)}^{y_hi(x)} f(x, y) dy dx with an infinite
/// upper bound allowed on either level.
pub fn double_integral(
    f: impl Fn(f64, f64) -> f64,
    x_lo: f64,
    x_hi: f64,
    y_lo: impl Fn(f64) -> f64,
    y_hi: impl Fn(f64) -> f64,
) -> f64 {
    let inner_spec = QuadratureSpec::new(1e-11, 1e-15, 4000).unwrap();
    let outer_spec = QuadratureSpec::new(1e-9, 1e-14, 4000).unwrap();
    let inner = |x: f64| {
        let (a, b) = (y_lo(x), y_hi(x));
        if b.is_infinite() {
            integrate_semi_infinite(|y| f(x, y), a, &inner_spec).unwrap()
        } else if b <= a {
            0.0
        } else {
            integrate_finite(|y| f(x, y), a, b, &inner_spec).unwrap()
        }
    };
    if x_hi.is_infinite() {
        integrate_semi_infinite(inner, x_lo, &outer_spec).unwrap()
    } else {
        integrate_finite(inner, x_lo, x_hi, &outer_spec).unwrap()
    }
}

/// Censored univariate Weibull log-likelihood.
pub fn weibull_censored_loglik(events: &[f64], censored: &[f64], scale: f64, shape: f64) -> f64 {
    let ev: f64 = events
        .iter()
        .map(|&t| (shape / scale).ln() + (shape - 1.0) * (t / scale).ln() - (t / scale).powf(shape))
        .sum();
    let ce: f64 = censored.iter().map(|&t| -(t / scale).powf(shape)).sum();
    ev + ce
}

/// Complete-sample Weibull MLE (profile equation in the shape solved by bisection).
pub fn weibull_mle(times: &[f64]) -> (f64, f64) {
    let n = times.len() as f64;
    let mean_log = times.iter().map(|t| t.ln()).sum::<f64>() / n;
    let score = |k: f64| {
        let s: f64 = times.iter().map(|t| t.powf(k)).sum();
        let sl: f64 = times.iter().map(|t| t.powf(k) * t.ln()).sum();
        1.0 / k + mean_log - sl / s
    };
    let (mut lo, mut hi) = (1e-3, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    let scale = (times.iter().map(|t| t.powf(k)).sum::<f64>() / n).powf(1.0 / k);
    (scale, k)
}

/// One-sample Kolmogorov–Smirnov statistic against `cdf`.
pub fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance 0.001.
pub fn ks_critical_001(n: usize) -> f64 {
    (-(0.0005_f64).ln() / 2.0).sqrt() / (n as f64).sqrt()
}
