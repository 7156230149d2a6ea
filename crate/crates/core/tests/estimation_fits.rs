mod common;

use common::*;
use rand::Rng;
use termrisk::data::{classify, parse_csv_path};
use termrisk::estimation::{standard_errors, GRADIENT_TOL};
use termrisk::likelihood::{Dataset, SubjectRecord};
use termrisk::simulation::{chunk_rng, generate_dataset, StudyDesign};
use termrisk::{fit, loglik_termination, FitConfig, ModelParams, Param};

fn stanford() -> Dataset {
    classify(&parse_csv_path(termrisk::STANFORD_CSV).unwrap()).unwrap().0
}

#[test]
fn stanford_fit_is_a_local_maximum() {
    let data = stanford();
    let res = fit(&data, &FitConfig::for_dataset(&data)).unwrap();
    assert!(res.converged && res.hessian_ok);
    assert!(res.gradient_max_norm <= GRADIENT_TOL);
    assert!(res.non_identified.is_empty() && !res.at_alpha_boundary);
    assert!(res.loglik >= loglik_termination(&data, &published()).unwrap());

    // No parameter draw in a broad box may beat the fitted maximum.
    let mut rng = chunk_rng(99, 0);
    for _ in 0..100 {
        let th = ModelParams::new(
            rng.random_range(0.2..1.0),
            rng.random_range(5.0..200.0),
            rng.random_range(0.2..2.0),
            rng.random_range(50.0..2000.0),
            rng.random_range(0.2..2.0),
        )
        .unwrap();
        // An underflowed factor is reported as an error; treat it as -inf.
        let ll = loglik_termination(&data, &th).unwrap_or(f64::NEG_INFINITY);
        assert!(ll <= res.loglik, "{th:?}");
    }

    let se = standard_errors(&data, &res.estimate).unwrap();
    assert!(se.inverse_residual().unwrap() <= 1e-8);
    for (p, s) in Param::ALL.iter().zip(res.std_errors.unwrap()) {
        assert!(s > 0.0 && s < res.estimate.get(*p), "{p}: {s}");
    }
}

#[test]
fn fit_is_deterministic() {
    let data = stanford();
    let cfg = FitConfig {
        seed: 7,
        ..FitConfig::for_dataset(&data)
    };
    assert_eq!(fit(&data, &cfg).unwrap(), fit(&data, &cfg).unwrap());
}

#[test]
fn deaths_only_reduce_to_a_weibull_fit() {
    let mut rng = chunk_rng(3, 0);
    let times: Vec<f64> = (0..150)
        .map(|_| {
            let u: f64 = rng.random();
            300.0 * (-u.ln()).powf(1.0 / 0.7)
        })
        .collect();
    let data = Dataset::new(times.iter().map(|&t| SubjectRecord::b_observed(t)).collect()).unwrap();
    let res = fit(&data, &FitConfig::for_dataset(&data)).unwrap();
    let (scale, shape) = weibull_mle(&times);
    assert!(rel_err(res.estimate.lambda2, scale) < 1e-4, "{} vs {scale}", res.estimate.lambda2);
    assert!(rel_err(res.estimate.gamma2, shape) < 1e-4, "{} vs {shape}", res.estimate.gamma2);
    for p in [Param::Alpha, Param::Lambda1, Param::Gamma1] {
        assert!(res.non_identified.contains(&p), "{:?}", res.non_identified);
    }
    assert!(!res.hessian_ok && res.std_errors.is_none());
}

#[test]
fn simulated_fits_beat_the_truth() {
    let truth = published();
    let design = StudyDesign::staggered_four_years(300).unwrap();
    for seed in 0..6 {
        let data = generate_dataset(&truth, &design, &mut chunk_rng(seed, 0)).unwrap();
        let res = fit(&data, &FitConfig::for_dataset(&data)).unwrap();
        assert!(res.converged, "seed {seed}");
        assert!(res.loglik >= loglik_termination(&data, &truth).unwrap() - 1e-9, "seed {seed}");
    }
}

#[test]
fn fixed_parameters_are_held() {
    let data = stanford();
    let cfg = FitConfig::for_dataset(&data).with_fixed(Param::Alpha, 0.7);
    let res = fit(&data, &cfg).unwrap();
    assert_eq!(res.estimate.alpha, 0.7);
    assert_eq!(res.fixed, vec![Param::Alpha]);
    assert_eq!(res.std_errors.unwrap()[Param::Alpha.index()], 0.0);
}

// Consistency check at a larger sample than the acceptance replicates. The
// estimator is biased under the latent-pair simulator, so this is expected
// to fail; see the README.
#[test]
#[ignore = "slow; estimator is inconsistent for the simulator's data"]
fn recovers_truth_at_n_2000() {
    let truth = published();
    let data = generate_dataset(&truth, &StudyDesign::new(2000, 1460.0).unwrap(), &mut chunk_rng(11, 0)).unwrap();
    let res = fit(&data, &FitConfig::for_dataset(&data)).unwrap();
    let se = res.std_errors.unwrap();
    for p in Param::ALL {
        let z = (res.estimate.get(p) - truth.get(p)) / se[p.index()];
        assert!(z.abs() < 3.0, "{p}: z = {z}");
    }
}
