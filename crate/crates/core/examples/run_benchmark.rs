//! Simulates the eight-agent benchmark and writes trajectory.csv, metrics.json and
//! certificate.json.
//!
//! `cargo run --release --example run_benchmark -- [out_dir] [key=value ...]`

use std::path::PathBuf;

use rise_flock::cli::{run, CertificateOutput};
use rise_flock::config::ScenarioConfig;

fn main() -> rise_flock::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/example-out/benchmark".into()));
    let overrides: Vec<String> = args.collect();
    let config = ScenarioConfig::benchmark().with_overrides(&overrides)?;

    let outputs = run(&config, &out)?;
    let m = &outputs.metrics;
    println!("{} samples written to {}", outputs.log.len(), out.display());
    println!("rms ‖e‖ over {:?} s: {:.4} m", config.analysis.rms_window, m.cumulative_rms_e);
    match m.convergence_time_005 {
        Some(t) => println!("all agents within 0.05 m from t = {t:.3} s"),
        None => println!("not converged within 0.05 m"),
    }
    println!("peak ‖u‖: {:.1}", m.max_u_norm);
    if let CertificateOutput::Report(r) = &outputs.certificate {
        println!("gain conditions pass: {}", r.all_gains_pass);
    }
    Ok(())
}
