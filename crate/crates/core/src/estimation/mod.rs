//! Maximum-likelihood fitting of the termination-scheme likelihood and
//! observed-information standard errors.
//!
//! The optimizer works on unconstrained coordinates (logit α, ln λ, ln γ)
//! and reports in the original parameterization. Standard errors come from
//! the finite-difference Hessian of the negative log-likelihood in the
//! original parameters.

mod nelder_mead;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use nelder_mead::{Minimum, Simplex};

use crate::error::{Error, Result};
use crate::likelihood::{loglik_termination, Category, Dataset};
use crate::model::{ModelParams, Param};
use crate::numerics::{central_diff_grad, central_diff_hessian};

/// Gradient max-norm (transformed coordinates) required to report convergence.
pub const GRADIENT_TOL: f64 = 1e-4;

/// α above this is treated as the independence boundary.
pub const ALPHA_BOUNDARY: f64 = 1.0 - 1e-4;

const RESTART_JITTER: f64 = 0.2;
const SIMPLEX_STEP: f64 = 0.25;

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn transform(p: Param, value: f64) -> f64 {
    match p {
        Param::Alpha => logit(value),
        _ => value.ln(),
    }
}

fn untransform(p: Param, v: f64) -> f64 {
    match p {
        Param::Alpha => logistic(v).clamp(f64::MIN_POSITIVE, 1.0),
        _ => v.exp().clamp(f64::MIN_POSITIVE, f64::MAX),
    }
}

/// (logit α, ln λ1, ln γ1, ln λ2, ln γ2). α = 1 has no preimage; nudge it
/// to `1 - 1e-8` first.
pub fn to_unconstrained(theta: &ModelParams) -> Result<[f64; 5]> {
    theta.validate()?;
    if theta.alpha >= 1.0 {
        return Err(Error::Domain(
            "alpha = 1 lies on the boundary and has no unconstrained image".into(),
        ));
    }
    Ok(Param::ALL.map(|p| transform(p, theta.get(p))))
}

/// Inverse of [`to_unconstrained`]; every input maps into the constraint set.
pub fn from_unconstrained(v: &[f64; 5]) -> ModelParams {
    let [alpha, lambda1, gamma1, lambda2, gamma2] = Param::ALL.map(|p| untransform(p, v[p.index()]));
    ModelParams {
        alpha,
        lambda1,
        gamma1,
        lambda2,
        gamma2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub init: ModelParams,
    pub max_iter: usize,
    pub f_tol: f64,
    pub x_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Parameters held at a fixed value during the fit.
    #[serde(default)]
    pub fixed: Vec<(Param, f64)>,
}

impl FitConfig {
    /// Default configuration with a data-driven starting point: α = 0.8,
    /// shapes 1, and each scale from the exponential median relation
    /// `λ = median / ln 2`.
    pub fn for_dataset(data: &Dataset) -> Self {
        Self {
            init: default_init(data),
            max_iter: 5000,
            f_tol: 1e-9,
            x_tol: 1e-7,
            restarts: 5,
            seed: 0,
            fixed: Vec::new(),
        }
    }

    pub fn with_fixed(mut self, p: Param, value: f64) -> Self {
        self.fixed.retain(|(q, _)| *q != p);
        self.fixed.push((p, value));
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.init.validate()?;
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        if !(self.f_tol > 0.0) || !(self.x_tol > 0.0) {
            return Err(Error::Config("tolerances must be > 0".into()));
        }
        let mut probe = self.init;
        for &(p, v) in &self.fixed {
            probe = probe.with(p, v)?;
        }
        Ok(())
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn default_init(data: &Dataset) -> ModelParams {
    let recs = data.records();
    let transplant_times: Vec<f64> = recs
        .iter()
        .filter(|r| matches!(r.category, Category::BothObserved | Category::AObservedBCensored))
        .map(|r| r.t_x)
        .collect();
    let mx = median(transplant_times)
        .or_else(|| median(recs.iter().map(|r| r.t_x).collect()))
        .unwrap_or(1.0);
    let my = median(recs.iter().map(|r| r.t_y).collect()).unwrap_or(1.0);
    let ln2 = std::f64::consts::LN_2;
    ModelParams {
        alpha: 0.8,
        lambda1: mx / ln2,
        gamma1: 1.0,
        lambda2: my / ln2,
        gamma2: 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimate: ModelParams,
    /// Same order as the parameters; fixed parameters report 0.
    pub std_errors: Option<[f64; 5]>,
    pub loglik: f64,
    pub converged: bool,
    pub n_iter: usize,
    pub hessian_ok: bool,
    pub gradient_max_norm: f64,
    pub fixed: Vec<Param>,
    /// Free parameters along which the likelihood is flat.
    pub non_identified: Vec<Param>,
    pub at_alpha_boundary: bool,
    /// Refit with α = 1, present only when the free fit reached the boundary.
    pub independence_refit: Option<Box<FitResult>>,
}

/// The optimization problem restricted to the free parameters.
struct Problem<'a> {
    data: &'a Dataset,
    base: ModelParams,
    free: Vec<Param>,
}

impl<'a> Problem<'a> {
    fn new(data: &'a Dataset, cfg: &FitConfig) -> Result<Self> {
        let mut base = cfg.init;
        for &(p, v) in &cfg.fixed {
            base = base.with(p, v)?;
        }
        let free: Vec<Param> = Param::ALL
            .into_iter()
            .filter(|p| !cfg.fixed.iter().any(|(q, _)| q == p))
            .collect();
        if free.contains(&Param::Alpha) && base.alpha >= 1.0 {
            base.alpha = 1.0 - 1e-8;
        }
        Ok(Self { data, base, free })
    }

    fn start(&self) -> Vec<f64> {
        self.free.iter().map(|&p| transform(p, self.base.get(p))).collect()
    }

    fn params(&self, v: &[f64]) -> ModelParams {
        let mut arr = self.base.to_array();
        for (p, &vi) in self.free.iter().zip(v) {
            arr[p.index()] = untransform(*p, vi);
        }
        ModelParams {
            alpha: arr[0],
            lambda1: arr[1],
            gamma1: arr[2],
            lambda2: arr[3],
            gamma2: arr[4],
        }
    }

    fn objective(&self, v: &[f64]) -> f64 {
        loglik_termination(self.data, &self.params(v)).map_or(f64::NAN, |ll| -ll)
    }
}

/// Maximizes the termination-scheme log-likelihood over the free parameters.
pub fn fit(data: &Dataset, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let problem = Problem::new(data, cfg)?;
    loglik_termination(data, &problem.base)?;

    let simplex = Simplex {
        step: SIMPLEX_STEP,
        max_iter: cfg.max_iter,
        f_tol: cfg.f_tol,
        x_tol: cfg.x_tol,
    };
    let v0 = problem.start();
    let starts: Vec<Vec<f64>> = (0..=cfg.restarts)
        .map(|k| {
            if k == 0 {
                return v0.clone();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            v0.iter()
                .map(|v| v + rng.random_range(-RESTART_JITTER..=RESTART_JITTER))
                .collect()
        })
        .collect();

    let runs: Vec<Minimum> = starts
        .par_iter()
        .map(|s| simplex.minimize(|v| problem.objective(v), s))
        .collect();
    let mut n_iter: usize = runs.iter().map(|m| m.iterations).sum();
    let mut best = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.fx.total_cmp(&b.fx).then(i.cmp(j)))
        .map(|(_, m)| m)
        .expect("at least one start");

    // Restart from the incumbent until the simplex stops finding improvement.
    for _ in 0..5 {
        let again = simplex.minimize(|v| problem.objective(v), &best.x);
        n_iter += again.iterations;
        let gain = best.fx - again.fx;
        let converged = again.converged;
        if again.fx <= best.fx {
            best = again;
        }
        if gain <= cfg.f_tol && converged {
            break;
        }
    }

    let x = newton_polish(&problem, best.x.clone(), best.fx);
    let fx = problem.objective(&x);
    let x = if fx <= best.fx { x } else { best.x.clone() };

    let estimate = problem.params(&x);
    let loglik = loglik_termination(data, &estimate)?;
    let grad = central_diff_grad(|v| problem.objective(v), &x).unwrap_or_else(|_| vec![f64::NAN; x.len()]);
    let gradient_max_norm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    let converged = best.converged && gradient_max_norm <= GRADIENT_TOL;

    let non_identified = flat_directions(&problem, &x);
    let se = standard_errors_for(data, &estimate, &problem.free)?;

    let fixed: Vec<Param> = cfg.fixed.iter().map(|(p, _)| *p).collect();
    let at_alpha_boundary = problem.free.contains(&Param::Alpha) && estimate.alpha > ALPHA_BOUNDARY;
    let independence_refit = if at_alpha_boundary {
        let refit_cfg = cfg.clone().with_fixed(Param::Alpha, 1.0);
        Some(Box::new(fit(data, &refit_cfg)?))
    } else {
        None
    };

    Ok(FitResult {
        estimate,
        std_errors: se.values,
        loglik,
        converged,
        n_iter,
        hessian_ok: se.hessian_ok,
        gradient_max_norm,
        fixed,
        non_identified,
        at_alpha_boundary,
        independence_refit,
    })
}

// Damped Newton steps on the finite-difference Hessian; a step is kept only
// when it lowers the objective.
fn newton_polish(problem: &Problem<'_>, mut x: Vec<f64>, mut fx: f64) -> Vec<f64> {
    let f = |v: &[f64]| problem.objective(v);
    for _ in 0..8 {
        let Ok(g) = central_diff_grad(f, &x) else { break };
        if g.iter().all(|gi| gi.abs() < 1e-7) {
            break;
        }
        let Ok(h) = central_diff_hessian(f, &x) else { break };
        let Some(chol) = h.cholesky() else { break };
        let dir = chol.solve(&(-DVector::from_vec(g)));
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..20 {
            let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, d)| a + t * d).collect();
            let ft = f(&trial);
            if ft.is_finite() && ft <= fx {
                x = trial;
                fx = ft;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    x
}

fn flat_directions(problem: &Problem<'_>, x: &[f64]) -> Vec<Param> {
    let Ok(h) = central_diff_hessian(|v| problem.objective(v), x) else {
        return Vec::new();
    };
    let scale = (0..h.nrows()).map(|i| h[(i, i)].abs()).fold(0.0_f64, f64::max);
    problem
        .free
        .iter()
        .enumerate()
        .filter(|(i, _)| h[(*i, *i)].abs() <= 1e-8 * scale.max(1.0))
        .map(|(_, p)| *p)
        .collect()
}

/// Observed-information standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardErrors {
    /// Square roots of diag(H⁻¹), 0 for parameters not in the free set.
    pub values: Option<[f64; 5]>,
    pub hessian_ok: bool,
    /// Hessian of the negative log-likelihood over the free parameters.
    pub hessian: DMatrix<f64>,
    pub covariance: Option<DMatrix<f64>>,
    /// The free parameters, in the row order of `hessian`.
    pub free: Vec<Param>,
}

impl StandardErrors {
    /// max |H H⁻¹ − I|, when the inverse exists.
    pub fn inverse_residual(&self) -> Option<f64> {
        let cov = self.covariance.as_ref()?;
        let n = self.hessian.nrows();
        let r = &self.hessian * cov - DMatrix::<f64>::identity(n, n);
        Some(r.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    }
}

/// Standard errors of all five parameters at `theta_hat`.
pub fn standard_errors(data: &Dataset, theta_hat: &ModelParams) -> Result<StandardErrors> {
    standard_errors_for(data, theta_hat, &Param::ALL)
}

/// Standard errors over a subset of free parameters; the others are held
/// at their values in `theta_hat`.
pub fn standard_errors_for(data: &Dataset, theta_hat: &ModelParams, free: &[Param]) -> Result<StandardErrors> {
    loglik_termination(data, theta_hat)?;
    let base = theta_hat.to_array();
    let point: Vec<f64> = free.iter().map(|p| base[p.index()]).collect();
    let negll = |v: &[f64]| {
        let mut arr = base;
        for (p, &vi) in free.iter().zip(v) {
            arr[p.index()] = vi;
        }
        ModelParams::from_array(arr)
            .and_then(|th| loglik_termination(data, &th))
            .map_or(f64::NAN, |ll| -ll)
    };

    let n = free.len();
    let hessian = match central_diff_hessian(negll, &point) {
        Ok(h) => h,
        Err(_) => {
            return Ok(StandardErrors {
                values: None,
                hessian_ok: false,
                hessian: DMatrix::from_element(n, n, f64::NAN),
                covariance: None,
                free: free.to_vec(),
            })
        }
    };

    let covariance = hessian.clone().cholesky().map(|c| c.inverse());
    let values = covariance.as_ref().and_then(|cov| {
        let mut out = [0.0; 5];
        for (i, p) in free.iter().enumerate() {
            let d = cov[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            out[p.index()] = d.sqrt();
        }
        Some(out)
    });
    Ok(StandardErrors {
        hessian_ok: values.is_some(),
        values,
        hessian,
        covariance,
        free: free.to_vec(),
    })
}
