//! Deterministic fixed-step closed-loop simulation.

mod closed_loop;
pub mod integrator;
mod log;
mod metrics;
pub mod noise;
mod sweep;

use std::sync::Arc;

pub use closed_loop::{ClosedLoop, SimState, StageOutputs};
pub use log::{Sample, TrajectoryLog};
pub use metrics::{compute_metrics, Metrics};
pub use noise::{AgentNoise, NoiseSigma, NoiseSource};
pub use sweep::{seed_sweep, SeedRun, SweepAggregate, SweepReport};

use crate::config::ScenarioConfig;
use crate::controller::{ControllerGains, ControllerMemory};
use crate::dynamics::{AgentState, DynamicsModel, TargetState};
use crate::error::{Error, Result};
use crate::graph::GraphTopology;

/// A fully resolved scenario: every random draw except measurement noise already made.
#[derive(Clone)]
pub struct Scenario {
    pub topology: GraphTopology,
    pub model: Arc<dyn DynamicsModel>,
    pub gains: ControllerGains,
    pub t_end: f64,
    pub dt: f64,
    pub log_stride: usize,
    pub noise: NoiseSigma,
    pub seed: u64,
    pub initial_agents: Vec<AgentState>,
    pub target: TargetState,
    pub control_enabled: bool,
}

impl Scenario {
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn initial_state(&self) -> SimState {
        SimState {
            t: 0.0,
            target: self.target.clone(),
            agents: self.initial_agents.clone(),
            memory: ControllerMemory::zeros(self.topology.agent_count(), self.topology.state_dim()),
        }
    }

    pub fn closed_loop(&self) -> Result<ClosedLoop<'_>> {
        Ok(ClosedLoop::new(&self.topology, self.model.as_ref(), self.gains)?
            .with_control_enabled(self.control_enabled))
    }
}

/// Runs a resolved scenario to `t_end`.
pub fn simulate(scenario: &Scenario) -> Result<TrajectoryLog> {
    if !(scenario.dt > 0.0 && scenario.t_end >= scenario.dt) {
        return Err(Error::validation("dt must be positive and t_end at least dt"));
    }
    let lp = scenario.closed_loop()?;
    let mut source = NoiseSource::new(&scenario.topology, scenario.noise, scenario.seed);
    let noise_free = scenario.noise.is_zero();
    let agents = scenario.topology.agent_count();
    lp.integrate(
        scenario.initial_state(),
        scenario.dt,
        scenario.steps(),
        scenario.log_stride,
        &scenario.gains,
        || {
            if noise_free {
                Vec::new()
            } else {
                let draw = source.draw();
                debug_assert_eq!(draw.len(), agents);
                draw
            }
        },
    )
}

/// Builds and runs a scenario from its configuration, then computes the default metrics.
pub fn run_scenario(config: &ScenarioConfig) -> Result<(TrajectoryLog, Metrics)> {
    let scenario = config.build()?;
    let log = simulate(&scenario)?;
    let metrics = compute_metrics(
        &log,
        config.analysis.rms_window,
        config.analysis.convergence_threshold,
    )?;
    Ok((log, metrics))
}
