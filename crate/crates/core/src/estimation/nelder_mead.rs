//! Derivative-free simplex minimizer (standard reflection/expansion/
//! contraction/shrink coefficients 1, 2, 1/2, 1/2).

#[derive(Debug, Clone)]
pub struct Simplex {
    pub step: f64,
    pub max_iter: usize,
    pub f_tol: f64,
    pub x_tol: f64,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Simplex {
    /// Minimizes `f` from `x0`. Non-finite values are treated as +inf so the
    /// simplex backs away from invalid regions.
    pub fn minimize<F: Fn(&[f64]) -> f64>(&self, f: F, x0: &[f64]) -> Minimum {
        let n = x0.len();
        let eval = |x: &[f64]| {
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };
        if n == 0 {
            return Minimum {
                x: vec![],
                fx: eval(x0),
                iterations: 0,
                converged: true,
            };
        }

        let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        pts.push(x0.to_vec());
        for i in 0..n {
            let mut p = x0.to_vec();
            p[i] += self.step;
            pts.push(p);
        }
        let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();

        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iter {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            pts = order.iter().map(|&i| pts[i].clone()).collect();
            vals = order.iter().map(|&i| vals[i]).collect();

            let f_spread = (vals[n] - vals[0]).abs();
            let x_spread = pts[1..]
                .iter()
                .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0_f64, f64::max);
            if vals[0].is_finite() && f_spread <= self.f_tol && x_spread <= self.x_tol {
                converged = true;
                break;
            }
            iterations += 1;

            let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (pts[n][j] - centroid[j])).collect() };

            let reflected = along(-1.0);
            let fr = eval(&reflected);
            if fr < vals[0] {
                let expanded = along(-2.0);
                let fe = eval(&expanded);
                if fe < fr {
                    pts[n] = expanded;
                    vals[n] = fe;
                } else {
                    pts[n] = reflected;
                    vals[n] = fr;
                }
                continue;
            }
            if fr < vals[n - 1] {
                pts[n] = reflected;
                vals[n] = fr;
                continue;
            }
            let (contracted, fc) = if fr < vals[n] {
                let c = along(-0.5);
                let fc = eval(&c);
                (c, fc)
            } else {
                let c = along(0.5);
                let fc = eval(&c);
                (c, fc)
            };
            if fc < vals[n].min(fr) {
                pts[n] = contracted;
                vals[n] = fc;
                continue;
            }
            for i in 1..=n {
                let shrunk: Vec<f64> = (0..n).map(|j| pts[0][j] + 0.5 * (pts[i][j] - pts[0][j])).collect();
                vals[i] = eval(&shrunk);
                pts[i] = shrunk;
            }
        }

        let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
        Minimum {
            x: pts[best].clone(),
            fx: vals[best],
            iterations,
            converged,
        }
    }
}
