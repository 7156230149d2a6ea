//! Means, variances and correlation of (X, Y).
//!
//! Marginal moments are closed-form Weibull moments. The cross moment uses
//! `E[XY] = ∫∫ S(x, y) dx dy` (valid for nonnegative variables), evaluated
//! as an iterated semi-infinite quadrature in scale-free coordinates.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::{gamma_fn, integrate_semi_infinite, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalMoments {
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_y: f64,
    pub var_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentsReport {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub corr_xy: f64,
}

fn weibull_moments(scale: f64, shape: f64) -> Result<(f64, f64)> {
    let g1 = gamma_fn(1.0 + 1.0 / shape)?;
    let g2 = gamma_fn(1.0 + 2.0 / shape)?;
    Ok((scale * g1, scale * scale * (g2 - g1 * g1)))
}

pub fn marginal_moments(theta: &ModelParams) -> Result<MarginalMoments> {
    theta.validate()?;
    let (mean_x, var_x) = weibull_moments(theta.lambda1, theta.gamma1)?;
    let (mean_y, var_y) = weibull_moments(theta.lambda2, theta.gamma2)?;
    Ok(MarginalMoments {
        mean_x,
        var_x,
        mean_y,
        var_y,
    })
}

/// Default outer tolerance for the cross moment.
pub fn cross_moment_spec() -> QuadratureSpec {
    QuadratureSpec {
        rel_tol: 1e-6,
        abs_tol: 0.0,
        max_subdivisions: 2000,
    }
}

/// E[XY] by iterated quadrature of the joint survival function. The inner
/// integral runs at a tolerance ten times tighter than `spec`.
pub fn cross_moment(theta: &ModelParams, spec: &QuadratureSpec) -> Result<f64> {
    theta.validate()?;
    // Substituting x = λ1 a, y = λ2 b removes the scales:
    // E[XY] = λ1 λ2 ∫∫ exp(-(a^(γ1/α) + b^(γ2/α))^α) da db.
    let kx = theta.gamma1 / theta.alpha;
    let ky = theta.gamma2 / theta.alpha;
    let alpha = theta.alpha;
    let survival = move |a: f64, b: f64| (-(a.powf(kx) + b.powf(ky)).powf(alpha)).exp();

    let inner = spec.with_rel_tol(spec.rel_tol / 10.0);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let outer = integrate_semi_infinite(
        |a| match integrate_semi_infinite(|b| survival(a, b), 0.0, &inner) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        spec,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(theta.lambda1 * theta.lambda2 * outer?)
}

/// Corr(X, Y) with the default cross-moment tolerance.
pub fn correlation(theta: &ModelParams) -> Result<f64> {
    let m = marginal_moments(theta)?;
    correlation_from(theta, &m, &cross_moment_spec())
}

fn correlation_from(theta: &ModelParams, m: &MarginalMoments, spec: &QuadratureSpec) -> Result<f64> {
    let exy = cross_moment(theta, spec)?;
    let corr = (exy - m.mean_x * m.mean_y) / (m.var_x * m.var_y).sqrt();
    if !(-1e-6..=1.0 + 1e-6).contains(&corr) {
        return Err(Error::Domain(format!("correlation {corr} outside [0, 1]")));
    }
    Ok(corr.clamp(-1.0, 1.0))
}

pub fn moments_report(theta: &ModelParams) -> Result<MomentsReport> {
    let m = marginal_moments(theta)?;
    let corr_xy = correlation_from(theta, &m, &cross_moment_spec())?;
    Ok(MomentsReport {
        mean_x: m.mean_x,
        mean_y: m.mean_y,
        var_x: m.var_x,
        var_y: m.var_y,
        corr_xy,
    })
}
