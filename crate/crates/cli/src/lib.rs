//! Command-line surface: `fit`, `simulate`, `moments` and `verify`.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 the command ran but the
//! fit did not converge or a verification check failed.

pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use termrisk::data::{classify, parse_csv, write_csv};
use termrisk::numerics::QuadratureSpec;
use termrisk::simulation::{chunk_rng, generate_dataset, McSampler, StudyDesign, MIN_TAIL_DRAWS};
use termrisk::moments::moments_report;
use termrisk::{fit, CategoryCounts, Error, FitConfig, ModelParams, Param, Result};

pub use report::{RunReport, VerifyReport, VERSION};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_FAILED: u8 = 2;

/// Acceptance thresholds for `verify`.
pub const VERIFY_MAX_SIGMA: f64 = 3.0;
pub const VERIFY_MAX_GAP: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "termrisk", version, about = "Bivariate Weibull competing risks with a terminating event")]
pub struct Cli {
    /// Print the JSON report instead of the table.
    #[arg(long, global = true)]
    pub json_only: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model to a subject CSV by maximum likelihood.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Starting point α,λ1,γ1,λ2,γ2 (default: derived from the data).
        #[arg(long, value_parser = parse_params)]
        init: Option<ModelParams>,
        /// Jittered restarts in addition to the starting point.
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate a study and write it as a subject CSV.
    Simulate {
        #[arg(long, value_parser = parse_params)]
        params: ModelParams,
        #[arg(long)]
        n: usize,
        /// Administrative end of follow-up, in days.
        #[arg(long)]
        end_time: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Means, variances and correlation of the two event times.
    Moments {
        #[arg(long, value_parser = parse_params)]
        params: ModelParams,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check Pr(t < X < Y) by single quadrature, double quadrature and
    /// Monte Carlo.
    Verify {
        #[arg(long, value_parser = parse_params)]
        params: ModelParams,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `α,λ1,γ1,λ2,γ2`.
pub fn parse_params(s: &str) -> std::result::Result<ModelParams, String> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("not a number: {v:?}")))
        .collect::<std::result::Result<_, _>>()?;
    let arr: [f64; 5] = vals
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 5 comma-separated values, got {}", v.len()))?;
    ModelParams::from_array(arr).map_err(|e| e.to_string())
}

fn params_digest(value: &serde_json::Value) -> String {
    report::sha256_hex(value.to_string().as_bytes())
}

/// Input to `cmd_fit`.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub data: PathBuf,
    pub init: Option<ModelParams>,
    pub restarts: Option<usize>,
    pub seed: u64,
}

pub fn cmd_fit(opts: &FitOptions, command: Vec<String>) -> Result<RunReport> {
    let start = Instant::now();
    let bytes = fs::read(&opts.data).map_err(|e| Error::Io(format!("{}: {e}", opts.data.display())))?;
    let raw = parse_csv(bytes.as_slice())?;
    let (data, cleaning) = classify(&raw)?;

    let mut cfg = FitConfig::for_dataset(&data);
    if let Some(init) = opts.init {
        cfg.init = init;
    }
    if let Some(r) = opts.restarts {
        cfg.restarts = r;
    }
    cfg.seed = opts.seed;
    let result = fit(&data, &cfg)?;

    let mut report = RunReport::new(command, report::sha256_hex(&bytes));
    report.counts = Some(cleaning.counts);
    report.cleaning = Some(cleaning);
    report.fit = Some(result);
    report.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Simulated study as CSV bytes, with its category counts. Censoring is at
/// `end_time` for every subject.
pub fn cmd_simulate(params: &ModelParams, n: usize, end_time: f64, seed: u64) -> Result<(Vec<u8>, CategoryCounts)> {
    let design = StudyDesign::new(n, end_time)?;
    let data = generate_dataset(params, &design, &mut chunk_rng(seed, 0))?;
    let mut buf = Vec::new();
    write_csv(&data, "s", &mut buf)?;
    Ok((buf, data.counts()))
}

pub fn cmd_moments(params: &ModelParams, command: Vec<String>) -> Result<RunReport> {
    let start = Instant::now();
    let moments = moments_report(params)?;
    let mut report = RunReport::new(command, params_digest(&serde_json::json!({ "params": params })));
    report.params = Some(*params);
    report.moments = Some(moments);
    report.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

pub fn cmd_verify(params: &ModelParams, t: f64, draws: usize, seed: u64, command: Vec<String>) -> Result<RunReport> {
    let start = Instant::now();
    if draws == 0 {
        return Err(Error::Config("draws must be >= 1".into()));
    }
    let quadrature = params.tail_prob(t)?;
    let double_quadrature = params.tail_prob_double(t, &QuadratureSpec::double())?;
    let mc = McSampler::new(seed).tail_prob(t, params, draws);

    let mut notes = Vec::new();
    let quadrature_gap = (quadrature - double_quadrature).abs();
    let quadrature_pass = quadrature_gap <= VERIFY_MAX_GAP;
    let z_score = mc.z_score(quadrature);
    let mut monte_carlo_pass = z_score.abs() <= VERIFY_MAX_SIGMA;
    if draws < MIN_TAIL_DRAWS {
        notes.push(format!("insufficient draws: {draws} < {MIN_TAIL_DRAWS}; Monte-Carlo check not counted"));
        monte_carlo_pass = false;
    }

    let verify = VerifyReport {
        t,
        quadrature,
        double_quadrature,
        monte_carlo: mc,
        quadrature_gap,
        z_score,
        quadrature_pass,
        monte_carlo_pass,
        pass: quadrature_pass && monte_carlo_pass,
        notes,
    };
    let digest = params_digest(&serde_json::json!({ "params": params, "t": t, "draws": draws, "seed": seed }));
    let mut report = RunReport::new(command, digest);
    report.params = Some(*params);
    report.verify = Some(verify);
    report.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn table(rows: &[(String, String)]) -> String {
    let w = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect()
}

fn row(k: impl Into<String>, v: impl ToString) -> (String, String) {
    (k.into(), v.to_string())
}

fn fit_table(report: &RunReport) -> String {
    let mut out = String::new();
    let Some(f) = &report.fit else { return out };
    out.push_str(&format!("{:<8}  {:>14}  {:>12}\n", "param", "estimate", "std.err"));
    for p in Param::ALL {
        let se = f.std_errors.map_or("-".to_string(), |s| format!("{:.6}", s[p.index()]));
        out.push_str(&format!("{:<8}  {:>14.6}  {:>12}\n", p.name(), f.estimate.get(p), se));
    }
    let mut rows = vec![
        row("loglik", format!("{:.6}", f.loglik)),
        row("converged", f.converged),
        row("gradient", format!("{:.2e}", f.gradient_max_norm)),
    ];
    if let Some(c) = &report.counts {
        rows.push(row("counts", format!("p={} q={} r={} censored={}", c.p, c.q, c.r, c.censored)));
    }
    if let Some(c) = &report.cleaning {
        rows.push(row("dropped", c.dropped.len()));
    }
    if !f.non_identified.is_empty() {
        let names: Vec<&str> = f.non_identified.iter().map(|p| p.name()).collect();
        rows.push(row("non-identified", names.join(",")));
    }
    if f.at_alpha_boundary {
        rows.push(row("note", "alpha at the independence boundary; refit with alpha = 1 included"));
    }
    out.push('\n');
    out.push_str(&table(&rows));
    out
}

fn moments_table(report: &RunReport) -> String {
    let Some(m) = &report.moments else { return String::new() };
    table(&[
        row("E(X)", format!("{:.4}", m.mean_x)),
        row("E(Y)", format!("{:.4}", m.mean_y)),
        row("Var(X)", format!("{:.4}", m.var_x)),
        row("Var(Y)", format!("{:.4}", m.var_y)),
        row("Corr(X,Y)", format!("{:.4}", m.corr_xy)),
    ])
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn verify_table(report: &RunReport) -> String {
    let Some(v) = &report.verify else { return String::new() };
    let mut rows = vec![
        row("t", v.t),
        row("quadrature", format!("{:.10}", v.quadrature)),
        row("double quadrature", format!("{:.10}", v.double_quadrature)),
        row(
            "monte carlo",
            format!("{:.10} ± {:.2e} ({} draws)", v.monte_carlo.estimate, v.monte_carlo.std_error, v.monte_carlo.draws),
        ),
        row("quadrature gap", format!("{:.2e} <= {VERIFY_MAX_GAP:e}: {}", v.quadrature_gap, verdict(v.quadrature_pass))),
        row("mc z-score", format!("{:.3} within {VERIFY_MAX_SIGMA} sigma: {}", v.z_score, verdict(v.monte_carlo_pass))),
    ];
    for n in &v.notes {
        rows.push(row("note", n));
    }
    rows.push(row("result", verdict(v.pass)));
    table(&rows)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn emit(report: &RunReport, out: Option<&Path>, json_only: bool, table: fn(&RunReport) -> String) -> Result<()> {
    let json = report.to_json();
    if let Some(path) = out {
        write_file(path, json.as_bytes())?;
    }
    if json_only {
        println!("{json}");
    } else {
        print!("{}", table(report));
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Errors go to stderr.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let command: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(cli, command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn dispatch(cli: Cli, command: Vec<String>) -> Result<u8> {
    let json_only = cli.json_only;
    match cli.command {
        Command::Fit {
            data,
            out,
            init,
            restarts,
            seed,
        } => {
            let opts = FitOptions {
                data,
                init,
                restarts,
                seed,
            };
            let report = cmd_fit(&opts, command)?;
            emit(&report, Some(&out), json_only, fit_table)?;
            let converged = report.fit.as_ref().is_some_and(|f| f.converged);
            if !converged {
                eprintln!("warning: optimizer did not converge");
            }
            Ok(if converged { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Simulate {
            params,
            n,
            end_time,
            seed,
            out,
        } => {
            let (csv, counts) = cmd_simulate(&params, n, end_time, seed)?;
            write_file(&out, &csv)?;
            if !json_only {
                print!(
                    "{}",
                    table(&[
                        row("subjects", n),
                        row("p", counts.p),
                        row("q", counts.q),
                        row("r", counts.r),
                        row("censored", counts.censored),
                        row("written", out.display()),
                    ])
                );
            } else {
                println!("{}", serde_json::to_string_pretty(&counts).expect("counts serialize"));
            }
            Ok(EXIT_OK)
        }
        Command::Moments { params, out } => {
            let report = cmd_moments(&params, command)?;
            emit(&report, out.as_deref(), json_only, moments_table)?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            params,
            t,
            draws,
            seed,
            out,
        } => {
            let report = cmd_verify(&params, t, draws, seed, command)?;
            emit(&report, out.as_deref(), json_only, verify_table)?;
            let pass = report.verify.as_ref().is_some_and(|v| v.pass);
            Ok(if pass { EXIT_OK } else { EXIT_FAILED })
        }
    }
}
