//! Numerical kernels shared by the model, likelihood and moment code: the
//! gamma function, adaptive Gauss–Kronrod quadrature on finite and
//! semi-infinite ranges, and central finite differences.
//!
//! Everything here is a pure function of its arguments.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and work limit for one adaptive quadrature call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(rel_tol > 0.0) || !rel_tol.is_finite() {
            return Err(Error::Config(format!("rel_tol must be > 0, got {rel_tol}")));
        }
        if !(abs_tol >= 0.0) || !abs_tol.is_finite() {
            return Err(Error::Config(format!("abs_tol must be >= 0, got {abs_tol}")));
        }
        if max_subdivisions < 1 {
            return Err(Error::Config("max_subdivisions must be >= 1".into()));
        }
        Ok(Self {
            rel_tol,
            abs_tol,
            max_subdivisions,
        })
    }

    /// Looser tolerances used for iterated double integrals.
    pub fn double() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }

    /// Same spec with a different relative tolerance.
    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        Self { rel_tol, ..self }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(z) for real z > 0 (Lanczos, g = 7).
pub fn gamma_fn(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("gamma_fn requires z > 0, got {z}")));
    }
    if z < 0.5 {
        // Γ(z) = Γ(z + 1) / z keeps the Lanczos sum in its accurate range.
        return Ok(lanczos(z + 1.0) / z);
    }
    let g = lanczos(z);
    if g.is_finite() {
        Ok(g)
    } else {
        Err(Error::Domain(format!("gamma_fn overflows at z = {z}")))
    }
}

fn lanczos(z: f64) -> f64 {
    let z = z - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * ((z + 0.5) * t.ln() - t).exp() * acc
}

// 15-point Kronrod rule with its embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteIntegrand { at: x })
        }
    };

    let fc = eval(center)?;
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Segment { a, b, value, error })
}

/// Adaptive Gauss–Kronrod (15-point) quadrature of `f` over `[a, b]`.
///
/// Bisects the segment with the largest error estimate until the summed
/// error falls below `max(abs_tol, rel_tol * |result|)`. Running out of
/// subdivisions is an error, the estimate is never returned silently.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(a <= b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("integrate_finite requires finite a <= b, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }

    let first = kronrod15(&f, a, b)?;
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 1;

    while error > spec.target(value) {
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::QuadratureNonConvergence {
                estimate: value,
                error,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::QuadratureNonConvergence {
                estimate: value,
                error,
                subdivisions,
            });
        }
        let left = kronrod15(&f, worst.a, mid)?;
        let right = kronrod15(&f, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;

        // Re-sum occasionally so the running totals do not drift.
        if subdivisions % 64 == 0 {
            value = neumaier_sum(heap.iter().map(|s| s.value));
            error = heap.iter().map(|s| s.error).sum();
        }
    }

    Ok(neumaier_sum(heap.iter().map(|s| s.value)))
}

/// Integral of `f` over `[a, ∞)` through the map `y = a + u / (1 - u)`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, a: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::Domain(format!("integrate_semi_infinite requires finite a, got {a}")));
    }
    let mapped = |u: f64| {
        let one_minus = 1.0 - u;
        let y = a + u / one_minus;
        let fy = f(y);
        if fy == 0.0 {
            0.0
        } else {
            fy / (one_minus * one_minus)
        }
    };
    integrate_finite(mapped, 0.0, 1.0, spec)
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `ln(e^a + e^b)` without overflow; `-inf` arguments are handled.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn step(x: f64, scale: f64) -> f64 {
    let h = scale * x.abs().max(1.0);
    // Make x + h exactly representable so the divisor matches the offset.
    (x + h) - x
}

fn checked<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], coordinate: Option<usize>) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteEvaluation { coordinate })
    }
}

/// Central-difference gradient with per-coordinate step `cbrt(eps) * max(1, |x_i|)`.
pub fn central_diff_grad<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Result<Vec<f64>> {
    let scale = f64::EPSILON.cbrt();
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = step(x[i], scale);
        probe[i] = x[i] + h;
        let fp = checked(&f, &probe, Some(i))?;
        probe[i] = x[i] - h;
        let fm = checked(&f, &probe, Some(i))?;
        probe[i] = x[i];
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

/// Central-difference Hessian with per-coordinate step `eps^(1/4) * max(1, |x_i|)`,
/// symmetrized as `(H + Hᵀ) / 2`.
pub fn central_diff_hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = x.len();
    let scale = f64::EPSILON.powf(0.25);
    let h: Vec<f64> = x.iter().map(|&xi| step(xi, scale)).collect();
    let f0 = checked(&f, x, None)?;
    let mut probe = x.to_vec();
    let mut hess = DMatrix::zeros(n, n);

    for i in 0..n {
        probe[i] = x[i] + h[i];
        let fp = checked(&f, &probe, Some(i))?;
        probe[i] = x[i] - h[i];
        let fm = checked(&f, &probe, Some(i))?;
        probe[i] = x[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);

        for j in (i + 1)..n {
            let mut corner = |si: f64, sj: f64| -> Result<f64> {
                probe[i] = x[i] + si * h[i];
                probe[j] = x[j] + sj * h[j];
                let v = checked(&f, &probe, Some(i));
                probe[i] = x[i];
                probe[j] = x[j];
                v
            };
            let fpp = corner(1.0, 1.0)?;
            let fpm = corner(1.0, -1.0)?;
            let fmp = corner(-1.0, 1.0)?;
            let fmm = corner(-1.0, -1.0)?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok((&hess + hess.transpose()) * 0.5)
}
