//! Computes the P-function and Lyapunov function along a noise-free benchmark run and checks
//! `P ≥ 0` and the share of steps where `V` decreases.

use rise_flock::analysis::{
    descent_fraction, disturbance_signals, lyapunov_trace, p_function_from_log, p_initial,
};
use rise_flock::config::ScenarioConfig;
use rise_flock::graph::interaction_matrix;
use rise_flock::sim::simulate;

fn main() -> rise_flock::Result<()> {
    let config = ScenarioConfig::benchmark().with_overrides(&[
        "t_end=5",
        "noise_sigma.position=0",
        "noise_sigma.velocity=0",
    ])?;
    let scenario = config.build()?;
    let log = simulate(&scenario)?;
    let h = interaction_matrix(&scenario.topology);
    let signals = disturbance_signals(scenario.model.as_ref(), &log)?;
    let p = p_function_from_log(&log, &h, &signals, &scenario.gains)?;
    let v = lyapunov_trace(&log, &p, &h)?;

    let first = &log.samples[0];
    println!("P(0) = {:.4} (closed form {:.4})", p.p[0], p_initial(&h, &first.errors.r1, &signals.h_b[0], scenario.gains.k4));
    println!("min P {:.4e}, max P {:.4e}", p.min(), p.max());
    let t = log.times();
    for window in [[0.1, 1.0], [0.1, 5.0]] {
        println!("ΔV < 0 on {:.3} of steps in {window:?} s", descent_fraction(&t, &v, window)?);
    }
    for k in (0..log.len()).step_by(log.len() / 10) {
        println!("t = {:.2}: V = {:.4e}, P = {:.4e}", t[k], v[k], p.p[k]);
    }
    Ok(())
}
