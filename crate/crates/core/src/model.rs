//! Bivariate Weibull survival model of the pair (X, Y), X the time to the
//! non-fatal event and Y the time to the fatal one:
//!
//! ```text
//! S(x, y) = exp(-[(x/λ1)^(γ1/α) + (y/λ2)^(γ2/α)]^α),   0 < α ≤ 1
//! ```
//!
//! Marginals are Weibull(λ1, γ1) and Weibull(λ2, γ2); α = 1 is independence.
//! Every density is computed in closed form in log space, the linear-space
//! accessors exponentiate those.

use std::cell::RefCell;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_finite, integrate_semi_infinite, log_add_exp, QuadratureSpec};

/// Quadrature values this far below zero are treated as zero.
const CLAMP_TOL: f64 = 1e-9;

/// One of the five model parameters, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Alpha,
    Lambda1,
    Gamma1,
    Lambda2,
    Gamma2,
}

impl Param {
    pub const ALL: [Param; 5] = [Param::Alpha, Param::Lambda1, Param::Gamma1, Param::Lambda2, Param::Gamma2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::Alpha => "alpha",
            Param::Lambda1 => "lambda1",
            Param::Gamma1 => "gamma1",
            Param::Lambda2 => "lambda2",
            Param::Gamma2 => "gamma2",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters (α, λ1, γ1, λ2, γ2). Scales are in days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub lambda1: f64,
    pub gamma1: f64,
    pub lambda2: f64,
    pub gamma2: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, lambda1: f64, gamma1: f64, lambda2: f64, gamma2: f64) -> Result<Self> {
        let p = Self {
            alpha,
            lambda1,
            gamma1,
            lambda2,
            gamma2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Independent Weibull margins (α = 1).
    pub fn independent(lambda1: f64, gamma1: f64, lambda2: f64, gamma2: f64) -> Result<Self> {
        Self::new(1.0, lambda1, gamma1, lambda2, gamma2)
    }

    pub fn from_array(v: [f64; 5]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.alpha, self.lambda1, self.gamma1, self.lambda2, self.gamma2]
    }

    pub fn get(&self, p: Param) -> f64 {
        self.to_array()[p.index()]
    }

    pub fn with(&self, p: Param, value: f64) -> Result<Self> {
        let mut v = self.to_array();
        v[p.index()] = value;
        Self::from_array(v)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: self.alpha,
                reason: "must satisfy 0 < alpha <= 1",
            });
        }
        for (name, value) in [
            ("lambda1", self.lambda1),
            ("gamma1", self.gamma1),
            ("lambda2", self.lambda2),
            ("gamma2", self.gamma2),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        Ok(())
    }

    fn exponent_x(&self) -> f64 {
        self.gamma1 / self.alpha
    }

    fn exponent_y(&self) -> f64 {
        self.gamma2 / self.alpha
    }

    fn terms(&self, x: f64, y: f64) -> Result<Terms> {
        check_time("x", x)?;
        check_time("y", y)?;
        let ln_u = power_log(x, self.lambda1, self.exponent_x());
        let ln_v = power_log(y, self.lambda2, self.exponent_y());
        let ln_s = log_add_exp(ln_u, ln_v);
        let w = (self.alpha * ln_s).exp();
        Ok(Terms { ln_s, w })
    }

    /// ln S(x, y).
    pub fn log_joint_survival(&self, x: f64, y: f64) -> Result<f64> {
        Ok(-self.terms(x, y)?.w)
    }

    /// S(x, y) = Pr(X > x, Y > y).
    pub fn joint_survival(&self, x: f64, y: f64) -> Result<f64> {
        self.log_joint_survival(x, y).map(f64::exp)
    }

    /// Pr(X > x); identical to `joint_survival(x, 0)`.
    pub fn marginal_survival_x(&self, x: f64) -> Result<f64> {
        self.joint_survival(x, 0.0)
    }

    /// Pr(Y > y); identical to `joint_survival(0, y)`.
    pub fn marginal_survival_y(&self, y: f64) -> Result<f64> {
        self.joint_survival(0.0, y)
    }

    /// ln of −∂S/∂x at (x, y).
    pub fn log_neg_ds_dx(&self, x: f64, y: f64) -> Result<f64> {
        let t = self.terms(x, y)?;
        let ln_du = power_log_derivative(x, self.lambda1, self.exponent_x());
        let v = -t.w + self.alpha.ln() + self.s_power_log(t.ln_s, 1.0) + ln_du;
        finish(v, x == 0.0, "-dS/dx")
    }

    /// −∂S/∂x: sub-density of X observed at x while Y exceeds y.
    pub fn neg_ds_dx(&self, x: f64, y: f64) -> Result<f64> {
        self.log_neg_ds_dx(x, y).map(f64::exp)
    }

    /// ln of −∂S/∂y at (x, y).
    pub fn log_neg_ds_dy(&self, x: f64, y: f64) -> Result<f64> {
        let t = self.terms(x, y)?;
        let ln_dv = power_log_derivative(y, self.lambda2, self.exponent_y());
        let v = -t.w + self.alpha.ln() + self.s_power_log(t.ln_s, 1.0) + ln_dv;
        finish(v, y == 0.0, "-dS/dy")
    }

    /// −∂S/∂y: sub-density of Y observed at y while X exceeds x.
    pub fn neg_ds_dy(&self, x: f64, y: f64) -> Result<f64> {
        self.log_neg_ds_dy(x, y).map(f64::exp)
    }

    /// ln f(x, y).
    pub fn log_joint_density(&self, x: f64, y: f64) -> Result<f64> {
        let t = self.terms(x, y)?;
        let ln_du = power_log_derivative(x, self.lambda1, self.exponent_x());
        let ln_dv = power_log_derivative(y, self.lambda2, self.exponent_y());
        let a = self.alpha;
        let v = if a == 1.0 {
            -t.w + ln_du + ln_dv
        } else {
            // ∂²S/∂x∂y = S u' v' α s^(α-2) (α w + 1 - α)
            -t.w + ln_du + ln_dv + a.ln() + (a - 2.0) * t.ln_s + (a * t.w + 1.0 - a).ln()
        };
        finish(v, x == 0.0 || y == 0.0, "joint density")
    }

    /// Joint density f(x, y) = ∂²S/∂x∂y.
    pub fn joint_density(&self, x: f64, y: f64) -> Result<f64> {
        self.log_joint_density(x, y).map(f64::exp)
    }

    /// ln of the Weibull(λ2, γ2) density of Y.
    pub fn log_marginal_density_y(&self, y: f64) -> Result<f64> {
        check_time("y", y)?;
        let ln_dv = power_log_derivative(y, self.lambda2, self.gamma2);
        let v = ln_dv - (power_log(y, self.lambda2, self.gamma2)).exp();
        finish(v, y == 0.0, "marginal density of Y")
    }

    pub fn marginal_density_y(&self, y: f64) -> Result<f64> {
        self.log_marginal_density_y(y).map(f64::exp)
    }

    /// ln of the Weibull(λ1, γ1) density of X.
    pub fn log_marginal_density_x(&self, x: f64) -> Result<f64> {
        check_time("x", x)?;
        let ln_du = power_log_derivative(x, self.lambda1, self.gamma1);
        let v = ln_du - (power_log(x, self.lambda1, self.gamma1)).exp();
        finish(v, x == 0.0, "marginal density of X")
    }

    pub fn marginal_density_x(&self, x: f64) -> Result<f64> {
        self.log_marginal_density_x(x).map(f64::exp)
    }

    /// Pr(t < X < Y), the probability that a subject censored at `t` would
    /// still see the non-fatal event before the fatal one:
    ///
    /// `S(t, t) + ∫_t^∞ [∂S/∂y]_{x=y} dy`.
    pub fn tail_prob(&self, t: f64) -> Result<f64> {
        self.tail_prob_with(t, &QuadratureSpec::default())
    }

    pub fn tail_prob_with(&self, t: f64, spec: &QuadratureSpec) -> Result<f64> {
        check_time("t", t)?;
        let diag = |y: f64| self.neg_ds_dy(y, y).unwrap_or(f64::NAN);
        let leaving = integrate_semi_infinite(diag, t, spec)?;
        let p = self.joint_survival(t, t)? - leaving;
        clamp_probability(p)
    }

    /// `Pr(t < X < Y)` as the iterated integral of the joint density over
    /// `t < x < y`, outer in y. Much slower than [`Self::tail_prob`]; used
    /// as a cross-check. The inner integral runs 100 times tighter.
    pub fn tail_prob_double(&self, t: f64, spec: &QuadratureSpec) -> Result<f64> {
        check_time("t", t)?;
        let inner = spec.with_rel_tol(spec.rel_tol / 100.0);
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let slice = |y: f64| {
            if y <= t {
                return 0.0;
            }
            let r = integrate_finite(|x| self.joint_density(x, y).unwrap_or(f64::NAN), t, y, &inner);
            r.unwrap_or_else(|e| {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            })
        };
        let outer = integrate_semi_infinite(slice, t, spec);
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        clamp_probability(outer?)
    }

    pub fn log_tail_prob(&self, t: f64) -> Result<f64> {
        self.tail_prob(t).map(f64::ln)
    }

    // (α - k) ln s with the α = k, s = 0 case defined as 0.
    fn s_power_log(&self, ln_s: f64, k: f64) -> f64 {
        let e = self.alpha - k;
        if e == 0.0 {
            0.0
        } else {
            e * ln_s
        }
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "alpha={} lambda1={} gamma1={} lambda2={} gamma2={}",
            self.alpha, self.lambda1, self.gamma1, self.lambda2, self.gamma2
        )
    }
}

struct Terms {
    ln_s: f64,
    w: f64,
}

fn check_time(name: &str, t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be a finite time >= 0, got {t}")))
    }
}

// ln((t/λ)^k); -inf at t = 0.
fn power_log(t: f64, lambda: f64, k: f64) -> f64 {
    if t == 0.0 {
        f64::NEG_INFINITY
    } else {
        k * (t.ln() - lambda.ln())
    }
}

// ln(d/dt (t/λ)^k) = ln k + (k - 1) ln t - k ln λ.
fn power_log_derivative(t: f64, lambda: f64, k: f64) -> f64 {
    let e = k - 1.0;
    let t_part = if e == 0.0 { 0.0 } else { e * t.ln() };
    k.ln() + t_part - k * lambda.ln()
}

fn finish(v: f64, at_axis: bool, what: &'static str) -> Result<f64> {
    if v.is_nan() || v == f64::INFINITY {
        if at_axis {
            Err(Error::SingularAtOrigin(what))
        } else {
            Err(Error::Domain(format!("{what} evaluated to {v}")))
        }
    } else {
        Ok(v)
    }
}

pub(crate) fn clamp_probability(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else if (-CLAMP_TOL..0.0).contains(&p) {
        Ok(0.0)
    } else if p > 1.0 && p <= 1.0 + CLAMP_TOL {
        Ok(1.0)
    } else {
        Err(Error::ProbabilityOutOfRange { value: p })
    }
}
