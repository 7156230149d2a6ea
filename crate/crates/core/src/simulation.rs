//! Exact sampling from the bivariate Weibull and termination-scheme data
//! generation.
//!
//! For α < 1 the pair is a positive-stable frailty mixture: with Z having
//! Laplace transform `exp(-s^α)` and E1, E2 unit exponentials,
//! `X = λ1 (E1/Z)^(α/γ1)`, `Y = λ2 (E2/Z)^(α/γ2)` has exactly the model's
//! joint survival function.
//!
//! Seeding: every stochastic routine takes its RNG explicitly. The parallel
//! Monte-Carlo helpers split work into chunks, chunk `k` drawing from
//! [`chunk_rng`]`(seed, k)`; results are fixed by `(seed, chunks)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{Dataset, SubjectRecord};
use crate::model::ModelParams;

/// Smallest draw count accepted by the Monte-Carlo tail-probability oracle.
pub const MIN_TAIL_DRAWS: usize = 10_000;

/// Independent stream `chunk` of the ChaCha8 generator seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn open_unit_exp<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let e: f64 = rng.sample(Exp1);
        if e > 0.0 {
            return e;
        }
    }
}

/// Positive stable variate with `E[exp(-sZ)] = exp(-s^α)`, 0 < α < 1
/// (Chambers–Mallows–Stuck).
pub fn sample_positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "positive stable index must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(log_positive_stable(alpha, rng).exp())
}

fn log_positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u = loop {
        let u = PI * rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let e = open_unit_exp(rng);
    let b = 1.0 - alpha;
    (alpha * u).sin().ln() - (u.sin().ln()) / alpha + (b / alpha) * ((b * u).sin().ln() - e.ln())
}

/// One latent (X, Y) draw.
pub fn sample_pair<R: Rng + ?Sized>(theta: &ModelParams, rng: &mut R) -> (f64, f64) {
    let ModelParams {
        alpha,
        lambda1,
        gamma1,
        lambda2,
        gamma2,
    } = *theta;
    let ln_z = if alpha < 1.0 { log_positive_stable(alpha, rng) } else { 0.0 };
    let e1 = open_unit_exp(rng).ln();
    let e2 = open_unit_exp(rng).ln();
    let x = lambda1 * ((alpha / gamma1) * (e1 - ln_z)).exp();
    let y = lambda2 * ((alpha / gamma2) * (e2 - ln_z)).exp();
    (x, y)
}

/// How each subject's last-seen time is drawn; the censoring time is
/// `min(last_seen, end_time)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Censoring {
    AtEnd,
    UniformLastSeen { low: f64, high: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyDesign {
    pub n_subjects: usize,
    pub end_time: f64,
    pub censoring: Censoring,
}

impl StudyDesign {
    /// Everyone followed to `end_time`.
    pub fn new(n_subjects: usize, end_time: f64) -> Result<Self> {
        Self::with_censoring(n_subjects, end_time, Censoring::AtEnd)
    }

    pub fn with_censoring(n_subjects: usize, end_time: f64, censoring: Censoring) -> Result<Self> {
        if n_subjects < 1 {
            return Err(Error::Config("n_subjects must be >= 1".into()));
        }
        if !(end_time > 0.0) {
            return Err(Error::Config(format!("end_time must be > 0, got {end_time}")));
        }
        if let Censoring::UniformLastSeen { low, high } = censoring {
            if !(low > 0.0 && low <= high && high.is_finite()) {
                return Err(Error::Config(format!("invalid last-seen range [{low}, {high}]")));
            }
        }
        Ok(Self {
            n_subjects,
            end_time,
            censoring,
        })
    }

    /// Four-year study with uniform last-seen times on [1, 1460] days, a
    /// rough stand-in for staggered entry.
    pub fn staggered_four_years(n_subjects: usize) -> Result<Self> {
        Self::with_censoring(
            n_subjects,
            1460.0,
            Censoring::UniformLastSeen {
                low: 1.0,
                high: 1460.0,
            },
        )
    }

    fn censor_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.censoring {
            Censoring::AtEnd => self.end_time,
            Censoring::UniformLastSeen { low, high } => {
                let last = if high > low { rng.random_range(low..high) } else { low };
                last.min(self.end_time)
            }
        }
    }
}

/// Applies the termination observation scheme to a latent pair.
pub fn observe(x: f64, y: f64, c: f64) -> SubjectRecord {
    if y <= c {
        if x < y {
            SubjectRecord::both_observed(x, y)
        } else {
            SubjectRecord::b_observed(y)
        }
    } else if x <= c {
        SubjectRecord::a_observed(x, c)
    } else {
        SubjectRecord::censored(c)
    }
}

/// Simulated study: one latent pair and one censoring time per subject.
pub fn generate_dataset<R: Rng + ?Sized>(theta: &ModelParams, design: &StudyDesign, rng: &mut R) -> Result<Dataset> {
    theta.validate()?;
    let records = (0..design.n_subjects)
        .map(|_| {
            let (x, y) = sample_pair(theta, rng);
            let c = design.censor_time(rng);
            observe(x, y, c)
        })
        .collect();
    Dataset::new(records)
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub draws: usize,
}

impl McEstimate {
    fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = ((sum_sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
        Self {
            estimate: mean,
            std_error: (var / nf).sqrt(),
            draws: n,
        }
    }

    /// Number of standard errors between the estimate and `value`.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.estimate - value) / self.std_error
    }
}

/// Fraction of draws with `t < X < Y`, with its binomial standard error.
pub fn mc_tail_prob<R: Rng + ?Sized>(t: f64, theta: &ModelParams, n_draws: usize, rng: &mut R) -> Result<McEstimate> {
    if n_draws < MIN_TAIL_DRAWS {
        return Err(Error::InsufficientDraws {
            required: MIN_TAIL_DRAWS,
            got: n_draws,
        });
    }
    theta.validate()?;
    let hits = (0..n_draws)
        .filter(|_| {
            let (x, y) = sample_pair(theta, rng);
            t < x && x < y
        })
        .count();
    let p = hits as f64 / n_draws as f64;
    Ok(McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / n_draws as f64).sqrt(),
        draws: n_draws,
    })
}

/// Chunked parallel Monte-Carlo over latent pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSampler {
    pub seed: u64,
    pub chunks: usize,
}

impl McSampler {
    pub fn new(seed: u64) -> Self {
        Self { seed, chunks: 64 }
    }

    fn chunk_sizes(&self, n: usize) -> Vec<usize> {
        let k = self.chunks.max(1);
        (0..k).map(|i| n / k + usize::from(i < n % k)).collect()
    }

    fn per_chunk<T, F>(&self, n: usize, work: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
    {
        self.chunk_sizes(n)
            .into_par_iter()
            .enumerate()
            .map(|(k, size)| work(&mut chunk_rng(self.seed, k as u64), size))
            .collect()
    }

    /// Mean of `stat(X, Y)` over `n` draws.
    pub fn mean<F>(&self, theta: &ModelParams, n: usize, stat: F) -> McEstimate
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let parts = self.per_chunk(n, |rng, size| {
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..size {
                let (x, y) = sample_pair(theta, rng);
                let v = stat(x, y);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        });
        let (s, s2) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        McEstimate::from_sums(s, s2, n)
    }

    /// Probability of the event `pred(X, Y)`.
    pub fn probability<F>(&self, theta: &ModelParams, n: usize, pred: F) -> McEstimate
    where
        F: Fn(f64, f64) -> bool + Sync,
    {
        self.mean(theta, n, |x, y| if pred(x, y) { 1.0 } else { 0.0 })
    }

    pub fn tail_prob(&self, t: f64, theta: &ModelParams, n: usize) -> McEstimate {
        self.probability(theta, n, |x, y| t < x && x < y)
    }

    /// Sample correlation of (X, Y); the standard error is a delete-one-chunk
    /// jackknife.
    pub fn correlation(&self, theta: &ModelParams, n: usize) -> McEstimate {
        let parts: Vec<[f64; 6]> = self.per_chunk(n, |rng, size| {
            let mut acc = [0.0; 6];
            for _ in 0..size {
                let (x, y) = sample_pair(theta, rng);
                acc[0] += x;
                acc[1] += y;
                acc[2] += x * x;
                acc[3] += y * y;
                acc[4] += x * y;
            }
            acc[5] = size as f64;
            acc
        });
        let corr = |a: &[f64; 6]| {
            let m = a[5];
            let (mx, my) = (a[0] / m, a[1] / m);
            let cov = a[4] / m - mx * my;
            cov / ((a[2] / m - mx * mx) * (a[3] / m - my * my)).sqrt()
        };
        let total = parts.iter().fold([0.0; 6], |mut acc, p| {
            for i in 0..6 {
                acc[i] += p[i];
            }
            acc
        });
        let estimate = corr(&total);
        let k = parts.len() as f64;
        let leave_out: Vec<f64> = parts
            .iter()
            .map(|p| {
                let mut rest = total;
                for i in 0..6 {
                    rest[i] -= p[i];
                }
                corr(&rest)
            })
            .collect();
        let mean_lo = leave_out.iter().sum::<f64>() / k;
        let var = (k - 1.0) / k * leave_out.iter().map(|v| (v - mean_lo).powi(2)).sum::<f64>();
        McEstimate {
            estimate,
            std_error: var.sqrt(),
            draws: n,
        }
    }

    /// `n` latent pairs, in chunk order.
    pub fn pairs(&self, theta: &ModelParams, n: usize) -> Vec<(f64, f64)> {
        self.per_chunk(n, |rng, size| (0..size).map(|_| sample_pair(theta, rng)).collect::<Vec<_>>())
            .into_iter()
            .flatten()
            .collect()
    }
}
