//! Fits the bundled Stanford heart transplant data and prints the estimates.

use termrisk::{data, fit, FitConfig, Param};

fn main() -> termrisk::Result<()> {
    let raw = data::parse_csv_path(termrisk::STANFORD_CSV)?;
    let (dataset, report) = data::classify(&raw)?;
    println!("counts: {:?}, dropped: {}", report.counts, report.dropped.len());

    let result = fit(&dataset, &FitConfig::for_dataset(&dataset))?;
    for p in Param::ALL {
        let se = result.std_errors.map_or(f64::NAN, |s| s[p.index()]);
        println!("{:>8} {:>12.5} ({se:.5})", p.name(), result.estimate.get(p));
    }
    println!("loglik {:.4}, converged {}", result.loglik, result.converged);
    Ok(())
}
