//! Command-line front end. The `rise-flock` binary is a one-line wrapper around [`main_with_args`].
//!
//! Exit codes: 0 ok, 1 validation error, 2 divergence, 3 certificate failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{certificate_from_log, certify, CertificateReport, StabilizingStatus};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::io::{save_json, save_trajectory_csv, TrajectoryTable, CERTIFICATE_JSON, METRICS_JSON, TRAJECTORY_CSV};
use crate::plot::{render, PlotKind};
use crate::sim::{compute_metrics, seed_sweep, simulate, Metrics, SweepReport, TrajectoryLog};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_DIVERGENCE: i32 = 2;
pub const EXIT_CERTIFICATE: i32 = 3;

/// Caps the number of concurrent runs in `sweep`.
pub const THREADS_ENV: &str = "RISE_FLOCK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "rise-flock", version, about = "Decentralized RISE target tracking: simulate, certify, sweep, plot")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ConfigArgs {
    /// Scenario JSON; the bundled eight-agent benchmark when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set gains.k4=0`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    pub fn load(&self) -> Result<ScenarioConfig> {
        let base = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::benchmark(),
        };
        if self.overrides.is_empty() {
            Ok(base)
        } else {
            base.with_overrides(&self.overrides)
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write trajectory.csv, metrics.json and certificate.json.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Check the sufficient gain conditions on a short noise-free run.
    Certify {
        #[command(flatten)]
        config: ConfigArgs,
        /// Also write certificate.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the scenario once per seed and aggregate the metrics.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        /// Also write sweep.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render an SVG figure from a trajectory CSV.
    Plot {
        /// Path to a trajectory.csv written by `run`.
        trajectory: PathBuf,
        #[arg(long)]
        kind: PlotKind,
        /// Output file; `<kind>.svg` next to the CSV when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        _ => EXIT_VALIDATION,
    }
}

/// What `run` writes as certificate.json.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum CertificateOutput {
    Report(Box<CertificateReport>),
    Unavailable { unavailable: String },
}

#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub log: TrajectoryLog,
    pub metrics: Metrics,
    pub certificate: CertificateOutput,
}

/// Simulates `config` and writes the three run outputs into `out`.
///
/// On divergence the partial trajectory is still written before the error is returned.
pub fn run(config: &ScenarioConfig, out: &Path) -> Result<RunOutputs> {
    std::fs::create_dir_all(out)?;
    let scenario = config.build()?;
    let log = match simulate(&scenario) {
        Ok(log) => log,
        Err(Error::Divergence { agent, t, partial }) => {
            save_trajectory_csv(out.join(TRAJECTORY_CSV), &partial, None)?;
            return Err(Error::Divergence { agent, t, partial });
        }
        Err(e) => return Err(e),
    };
    let metrics = compute_metrics(&log, config.analysis.rms_window, config.analysis.convergence_threshold)?;
    let (certificate, pv) = match certificate_from_log(&scenario, &log, &config.analysis) {
        Ok((report, traces)) => (CertificateOutput::Report(Box::new(report)), Some((traces.p.p, traces.v))),
        Err(e @ (Error::InsufficientData(_) | Error::Singular { .. } | Error::Numerical(_))) => {
            (CertificateOutput::Unavailable { unavailable: e.to_string() }, None)
        }
        Err(e) => return Err(e),
    };
    save_trajectory_csv(
        out.join(TRAJECTORY_CSV),
        &log,
        pv.as_ref().map(|(p, v)| (p.as_slice(), v.as_slice())),
    )?;
    save_json(out.join(METRICS_JSON), &metrics)?;
    save_json(out.join(CERTIFICATE_JSON), &certificate)?;
    Ok(RunOutputs {
        log,
        metrics,
        certificate,
    })
}

/// Whether every verdict in the report passes.
pub fn certificate_passes(report: &CertificateReport) -> bool {
    report.all_gains_pass && report.stabilizing_set.status != StabilizingStatus::Fail
}

pub fn format_certificate(r: &CertificateReport) -> String {
    let verdict = |pass: bool| if pass { "pass" } else { "FAIL" };
    let c = &r.gain_conditions;
    let mut s = String::new();
    s.push_str(&format!("k1 = {} > {}: {}\n", c.k1.value, c.k1.threshold, verdict(c.k1.pass)));
    s.push_str(&format!("k2 = {} > {}: {}\n", c.k2.value, c.k2.threshold, verdict(c.k2.pass)));
    s.push_str(&format!("k3 = {} > {:.6}: {}\n", c.k3.value, c.k3.threshold, verdict(c.k3.pass)));
    s.push_str(&format!(
        "k4 = {} > chi1 + chi2/(k2 - lambda_P) = {:.6} (chi1 = {:.6}, chi2 = {:.6}): {}\n",
        c.k4.value,
        c.k4.threshold,
        r.chi.chi1,
        r.chi.chi2,
        verdict(c.k4.pass)
    ));
    s.push_str(&format!("k_min = {:.6}\n", r.k_min));
    s.push_str(&format!("W(z0) = {:.6}\n", r.w_z0));
    let budget = r.stabilizing_set.budget;
    match (r.stabilizing_set.status, r.stabilizing_set.rho_at_w) {
        (StabilizingStatus::RhoUnavailable, _) => s.push_str(&format!(
            "rho budget (k_min - lambda_V)/lambda_max_H = {budget:.6}: rho unavailable\n"
        )),
        (status, rho) => s.push_str(&format!(
            "rho(W(z0)) = {:.6} <= {budget:.6}: {}\n",
            rho.unwrap_or(f64::NAN),
            verdict(status == StabilizingStatus::Pass)
        )),
    }
    let env = &r.envelope;
    s.push_str(&format!(
        "envelope at rate {:.6}: {}, at rate {:.6}: {}\n",
        env.rate_conservative,
        verdict(env.pass_conservative),
        env.rate_stated,
        verdict(env.pass_stated)
    ));
    let frac = |f: Option<f64>| f.map_or_else(|| "n/a".to_string(), |f| format!("{f:.4}"));
    s.push_str(&format!(
        "V descent fraction: {} after transient, {} on decay window [{:.3}, {:.3}]\n",
        frac(r.lyapunov_descent_fraction),
        frac(r.lyapunov_descent_fraction_decay),
        r.decay_window[0],
        r.decay_window[1]
    ));
    if let Some(fit) = &r.exponential_fit {
        s.push_str(&format!("exp fit of |z|: rate {:.4}, R^2 {:.4}\n", fit.rate, fit.r_squared));
    }
    s
}

fn sweep_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::validation(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
    }
}

pub fn sweep(config: &ScenarioConfig, seeds: &[u64]) -> Result<SweepReport> {
    seed_sweep(config, seeds, sweep_threads()?)
}

/// Renders `kind` from the CSV at `trajectory` into `out` and returns the written path.
pub fn plot(trajectory: &Path, kind: PlotKind, out: Option<&Path>) -> Result<PathBuf> {
    let table = TrajectoryTable::load(trajectory)?;
    let svg = render(&table, kind)?;
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => trajectory
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(format!("{}.svg", kind.name())),
    };
    std::fs::write(&path, svg)?;
    Ok(path)
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = config.load()?;
            let res = run(&cfg, &out)?;
            let m = &res.metrics;
            println!("cumulative_rms_e = {:.6} m", m.cumulative_rms_e);
            match m.convergence_time_005 {
                Some(t) => println!("convergence_time_005 = {t:.3} s"),
                None => println!("convergence_time_005 = none"),
            }
            println!("max_u_norm = {:.6}", m.max_u_norm);
            println!("wrote {}", out.display());
            Ok(EXIT_OK)
        }
        Command::Certify { config, out } => {
            let cfg = config.load()?;
            let report = certify(&cfg)?;
            print!("{}", format_certificate(&report));
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                save_json(dir.join(CERTIFICATE_JSON), &report)?;
            }
            Ok(if certificate_passes(&report) { EXIT_OK } else { EXIT_CERTIFICATE })
        }
        Command::Sweep { config, seeds, out } => {
            let cfg = config.load()?;
            let report = sweep(&cfg, &seeds)?;
            for r in &report.runs {
                match (&r.metrics, &r.error) {
                    (Some(m), _) => println!(
                        "seed {}: rms {:.6} m, converged at {}",
                        r.seed,
                        m.cumulative_rms_e,
                        m.convergence_time_005.map_or("never".to_string(), |t| format!("{t:.3} s"))
                    ),
                    (None, e) => println!("seed {}: failed: {}", r.seed, e.as_deref().unwrap_or("unknown")),
                }
            }
            let a = &report.aggregate;
            println!(
                "{} runs, {:.0}% converged by {} s, median rms {}",
                a.runs,
                100.0 * a.fraction_converged,
                a.convergence_deadline,
                a.median_rms.map_or("n/a".to_string(), |m| format!("{m:.6} m"))
            );
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                save_json(dir.join("sweep.json"), &report)?;
            }
            Ok(EXIT_OK)
        }
        Command::Plot { trajectory, kind, out } => {
            let path = plot(&trajectory, kind, out.as_deref())?;
            println!("wrote {}", path.display());
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name) and runs the command. Returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
