mod common;

use common::*;
use termrisk::simulation::McSampler;
use termrisk::ModelParams;

#[test]
fn marginals_pass_ks() {
    for (i, alpha) in [0.3, 0.5596, 0.9].into_iter().enumerate() {
        let th = published().with(termrisk::Param::Alpha, alpha).unwrap();
        let pairs = McSampler::new(100 + i as u64).pairs(&th, 100_000);
        let crit = ks_critical_001(pairs.len());
        let dx = ks_statistic(pairs.iter().map(|p| p.0).collect(), |x| 1.0 - th.marginal_survival_x(x).unwrap());
        let dy = ks_statistic(pairs.iter().map(|p| p.1).collect(), |y| 1.0 - th.marginal_survival_y(y).unwrap());
        assert!(dx < crit && dy < crit, "alpha {alpha}: D_x {dx}, D_y {dy}, critical {crit}");
    }
}

#[test]
fn joint_survival_grid() {
    let n = 1_000_000;
    for (i, alpha) in [0.3, 0.5596, 0.9].into_iter().enumerate() {
        let th: ModelParams = published().with(termrisk::Param::Alpha, alpha).unwrap();
        let sampler = McSampler::new(200 + i as u64);
        let pairs = sampler.pairs(&th, n);
        for x in [10.0, 40.0, 120.0] {
            for y in [100.0, 400.0, 1200.0] {
                let hits = pairs.iter().filter(|p| p.0 > x && p.1 > y).count() as f64;
                let est = hits / n as f64;
                let want = th.joint_survival(x, y).unwrap();
                let sigma = (want * (1.0 - want) / n as f64).sqrt();
                assert!((est - want).abs() < 3.0 * sigma, "alpha {alpha} ({x}, {y}): {est} vs {want}");
            }
        }
    }
}
