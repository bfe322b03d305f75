//! Estimates the disturbance bounds `χ₁`, `χ₂` two ways: along the simulated target
//! trajectory, and by sampling a declared bounds box.

use rise_flock::analysis::{chi_box_sampling, chi_estimates, disturbance_signals};
use rise_flock::config::ScenarioConfig;
use rise_flock::dynamics::Bounds;
use rise_flock::sim::simulate;

fn main() -> rise_flock::Result<()> {
    let config = ScenarioConfig::benchmark().with_overrides(&["t_end=5"])?;
    let scenario = config.build()?;
    let log = simulate(&scenario)?;
    let signals = disturbance_signals(scenario.model.as_ref(), &log)?;
    let along = chi_estimates(&signals, 1.0)?;
    println!("trajectory: sup‖h_B‖ {:.4}, sup‖ḣ_B‖ {:.4}", along.sup_h_b, along.sup_h_b_dot);

    let bounds = Bounds {
        d_bar: vec![1.0; 8],
        ddot_bar: vec![1.0; 8],
        dddot_bar: vec![1.0; 8],
        q0_bar: 5.0,
        q0dot_bar: 3.0,
        q0ddot_bar: 5.0,
        q0dddot_bar: 5.0,
    };
    let boxed = chi_box_sampling(scenario.model.as_ref(), &bounds, 20_000, config.t_end, config.seed, 1.0)?;
    println!("box:        sup‖h_B‖ {:.4}, sup‖ḣ_B‖ {:.4}", boxed.sup_h_b, boxed.sup_h_b_dot);
    Ok(())
}
