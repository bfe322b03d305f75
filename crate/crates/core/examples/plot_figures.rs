//! Renders all three SVG figures for a short benchmark run.

use std::path::Path;

use rise_flock::cli::{plot, run};
use rise_flock::config::ScenarioConfig;
use rise_flock::plot::PlotKind;

fn main() -> rise_flock::Result<()> {
    let out = Path::new("target/example-out/figures");
    let config = ScenarioConfig::benchmark().with_overrides(&["t_end=5", "log_stride=10"])?;
    run(&config, out)?;
    let csv = out.join("trajectory.csv");
    for kind in [PlotKind::ErrorNorms, PlotKind::Traj3dProjection, PlotKind::Lyapunov] {
        let svg = plot(&csv, kind, Some(&out.join(format!("{}.svg", kind.name()))))?;
        println!("{}", svg.display());
    }
    Ok(())
}
