//! Runs the benchmark across seeds in parallel and prints the aggregate.
//!
//! `cargo run --release --example seed_sweep -- [first_seed] [last_seed]`

use rise_flock::config::ScenarioConfig;
use rise_flock::sim::seed_sweep;

fn main() -> rise_flock::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("seed"));
    let first = args.next().unwrap_or(1);
    let last = args.next().unwrap_or(first + 9);
    let seeds: Vec<u64> = (first..=last).collect();

    let config = ScenarioConfig::benchmark().with_overrides(&["t_end=5"])?;
    let report = seed_sweep(&config, &seeds, None)?;
    for run in &report.runs {
        match (&run.metrics, &run.error) {
            (Some(m), _) => println!(
                "seed {:>3}: rms {:.4} m, converged at {}",
                run.seed,
                m.cumulative_rms_e,
                m.convergence_time_005.map_or("never".into(), |t| format!("{t:.2} s"))
            ),
            (None, Some(e)) => println!("seed {:>3}: failed: {e}", run.seed),
            (None, None) => unreachable!(),
        }
    }
    let a = &report.aggregate;
    println!(
        "{} runs, {:.0}% converged by {} s, median rms {:.4?} m",
        a.runs,
        100.0 * a.fraction_converged,
        a.convergence_deadline,
        a.median_rms
    );
    Ok(())
}
