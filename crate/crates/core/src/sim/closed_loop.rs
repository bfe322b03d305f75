use nalgebra::DVector;

use crate::analysis::{ensemble_errors, Snapshot};
use crate::controller::{
    neighborhood_error, neighborhood_error_rate, ControllerGains, ControllerMemory,
    LocalMeasurements, NeighborMeasurement, RiseController, TargetMeasurement,
};
use crate::dynamics::{g_pinv, AgentState, DynamicsModel, TargetState};
use crate::error::{Error, Result};
use crate::graph::GraphTopology;
use crate::sim::log::{Sample, TrajectoryLog};
use crate::sim::noise::AgentNoise;

/// Target, agents, and controller integrators at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub target: TargetState,
    pub agents: Vec<AgentState>,
    pub memory: ControllerMemory,
}

impl SimState {
    /// Layout: `[q₀, q̇₀, (qᵢ, q̇ᵢ, ν̂ᵢ) for each agent]`.
    pub fn pack(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(2 * self.target.q0.len() * (1 + 3 * self.agents.len()));
        y.extend(self.target.q0.iter());
        y.extend(self.target.q0dot.iter());
        for (a, nu) in self.agents.iter().zip(&self.memory.nu_hat) {
            y.extend(a.q.iter());
            y.extend(a.qdot.iter());
            y.extend(nu.iter());
        }
        y
    }

    pub fn unpack(t: f64, y: &[f64], agents: usize, dim: usize) -> Self {
        let v = |off: usize| DVector::from_column_slice(&y[off..off + dim]);
        let target = TargetState::new(v(0), v(dim));
        let mut states = Vec::with_capacity(agents);
        let mut nu_hat = Vec::with_capacity(agents);
        for i in 0..agents {
            let off = 2 * dim + 3 * dim * i;
            states.push(AgentState::new(v(off), v(off + dim)));
            nu_hat.push(v(off + 2 * dim));
        }
        Self {
            t,
            target,
            agents: states,
            memory: ControllerMemory { nu_hat },
        }
    }

    /// First non-finite component: `Some(None)` for the target, `Some(Some(i))` for agent `i`.
    fn first_non_finite(y: &[f64], dim: usize) -> Option<Option<usize>> {
        let k = y.iter().position(|x| !x.is_finite())?;
        if k < 2 * dim {
            Some(None)
        } else {
            Some(Some((k - 2 * dim) / (3 * dim)))
        }
    }
}

/// Everything the closed loop computes at one evaluation of the right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutputs {
    pub q0ddot: DVector<f64>,
    pub qddot: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    pub command: Vec<DVector<f64>>,
    pub eta: Vec<DVector<f64>>,
    pub eta_dot: Vec<DVector<f64>>,
}

/// Target, agents, and decentralized controllers wired together.
pub struct ClosedLoop<'a> {
    model: &'a dyn DynamicsModel,
    controller: RiseController,
    neighbors: Vec<Vec<(usize, f64)>>,
    pinned: Vec<bool>,
    dim: usize,
    control_enabled: bool,
}

impl<'a> ClosedLoop<'a> {
    pub fn new(
        topology: &GraphTopology,
        model: &'a dyn DynamicsModel,
        gains: ControllerGains,
    ) -> Result<Self> {
        if model.agent_count() != topology.agent_count() || model.state_dim() != topology.state_dim()
        {
            return Err(Error::validation(format!(
                "model has {} agents of dimension {}, topology has {} of dimension {}",
                model.agent_count(),
                model.state_dim(),
                topology.agent_count(),
                topology.state_dim()
            )));
        }
        Ok(Self {
            model,
            controller: RiseController::new(gains),
            neighbors: (0..topology.agent_count()).map(|i| topology.neighbors(i)).collect(),
            pinned: topology.pinning().to_vec(),
            dim: topology.state_dim(),
            control_enabled: true,
        })
    }

    /// Forces every input to zero. The controller integrators still run.
    pub fn with_control_enabled(mut self, enabled: bool) -> Self {
        self.control_enabled = enabled;
        self
    }

    pub fn agent_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Builds agent `i`'s measurements from the true state, plus optional noise.
    pub fn measurements(
        &self,
        agent: usize,
        state: &SimState,
        noise: Option<&AgentNoise>,
    ) -> LocalMeasurements {
        let me = &state.agents[agent];
        let neighbors = self.neighbors[agent]
            .iter()
            .enumerate()
            .map(|(k, &(j, weight))| {
                let other = &state.agents[j];
                let mut rel_pos = &other.q - &me.q;
                let mut rel_vel = &other.qdot - &me.qdot;
                if let Some(n) = noise {
                    rel_pos += &n.neighbor_pos[k];
                    rel_vel += &n.neighbor_vel[k];
                }
                NeighborMeasurement {
                    weight,
                    rel_pos,
                    rel_vel,
                }
            })
            .collect();
        let target = self.pinned[agent].then(|| {
            let mut rel_pos = &state.target.q0 - &me.q;
            let mut rel_vel = &state.target.q0dot - &me.qdot;
            if let Some(n) = noise {
                if let (Some(p), Some(v)) = (&n.target_pos, &n.target_vel) {
                    rel_pos += p;
                    rel_vel += v;
                }
            }
            TargetMeasurement { rel_pos, rel_vel }
        });
        LocalMeasurements {
            dim: self.dim,
            neighbors,
            target,
        }
    }

    /// Right-hand side of the stacked ODE together with the per-agent controller outputs.
    pub fn evaluate(&self, state: &SimState, noise: &[AgentNoise]) -> Result<(Vec<f64>, StageOutputs)> {
        let t = state.t;
        let q0ddot = self.model.target_drift(&state.target.q0, &state.target.q0dot, t);
        let mut deriv = Vec::with_capacity(2 * self.dim * (1 + 3 * self.agent_count()));
        deriv.extend(state.target.q0dot.iter());
        deriv.extend(q0ddot.iter());

        let n_agents = self.agent_count();
        let mut out = StageOutputs {
            q0ddot,
            qddot: Vec::with_capacity(n_agents),
            u: Vec::with_capacity(n_agents),
            command: Vec::with_capacity(n_agents),
            eta: Vec::with_capacity(n_agents),
            eta_dot: Vec::with_capacity(n_agents),
        };
        for i in 0..n_agents {
            let me = &state.agents[i];
            let meas = self.measurements(i, state, noise.get(i));
            let nu_hat = &state.memory.nu_hat[i];
            let command = self.controller.command(&meas, nu_hat);
            let u = if self.control_enabled {
                g_pinv(self.model, i, me, t)? * &command
            } else {
                DVector::zeros(self.model.input_dim(i))
            };
            let g = self.model.input_gain(i, &me.q, &me.qdot, t);
            let applied = &g * &u;
            let qddot = self.model.drift(i, &me.q, &me.qdot, t) + &applied + self.model.disturbance(i, t);
            let nu_rate = self.controller.nu_hat_rate(&meas);

            deriv.extend(me.qdot.iter());
            deriv.extend(qddot.iter());
            deriv.extend(nu_rate.iter());

            out.eta.push(neighborhood_error(&meas));
            out.eta_dot.push(neighborhood_error_rate(&meas));
            out.command.push(applied);
            out.u.push(u);
            out.qddot.push(qddot);
        }
        Ok((deriv, out))
    }

    fn rhs(&self, t: f64, y: &[f64], noise: &[AgentNoise]) -> Result<Vec<f64>> {
        if y.iter().any(|x| !x.is_finite()) {
            return Ok(vec![f64::NAN; y.len()]);
        }
        let state = SimState::unpack(t, y, self.agent_count(), self.dim);
        Ok(self.evaluate(&state, noise)?.0)
    }

    /// One RK4 step with the input recomputed at every stage and noise held across the step.
    pub fn step(&self, state: &SimState, dt: f64, noise: &[AgentNoise]) -> Result<SimState> {
        self.step_with(state, dt, noise, None)
    }

    fn step_with(
        &self,
        state: &SimState,
        dt: f64,
        noise: &[AgentNoise],
        k1: Option<Vec<f64>>,
    ) -> Result<SimState> {
        let y = state.pack();
        let next = super::integrator::rk4_step(state.t, &y, dt, k1, |t, y| self.rhs(t, y, noise))?;
        let t = state.t + dt;
        if let Some(agent) = SimState::first_non_finite(&next, self.dim) {
            return Err(Error::Divergence {
                agent,
                t,
                partial: Box::new(TrajectoryLog::new(self.agent_count(), self.dim, dt)),
            });
        }
        Ok(SimState::unpack(t, &next, self.agent_count(), self.dim))
    }

    /// Integrates from `initial` for `steps` steps of `dt`, logging every `stride` steps.
    ///
    /// `noise` is called once per step for that step's measurement noise. Time is computed as
    /// `t₀ + k·dt` to avoid drift. On divergence the error carries the partial log.
    pub fn integrate(
        &self,
        initial: SimState,
        dt: f64,
        steps: usize,
        stride: usize,
        gains: &ControllerGains,
        mut noise: impl FnMut() -> Vec<AgentNoise>,
    ) -> Result<TrajectoryLog> {
        let stride = stride.max(1);
        let t0 = initial.t;
        let mut log = TrajectoryLog::new(self.agent_count(), self.dim, dt * stride as f64);
        let mut state = initial;
        for k in 0..=steps {
            let draw = noise();
            let (deriv, out) = self.evaluate(&state, &draw)?;
            if k % stride == 0 {
                log.samples.push(self.sample(&state, &out, gains));
            }
            if k == steps {
                break;
            }
            match self.step_with(&state, dt, &draw, Some(deriv)) {
                Ok(mut next) => {
                    next.t = t0 + (k + 1) as f64 * dt;
                    state = next;
                }
                Err(Error::Divergence { agent, t, .. }) => {
                    return Err(Error::Divergence {
                        agent,
                        t,
                        partial: Box::new(log),
                    })
                }
                Err(e) => return Err(e),
            }
        }
        Ok(log)
    }

    fn sample(&self, state: &SimState, out: &StageOutputs, gains: &ControllerGains) -> Sample {
        let stack = |vs: &mut dyn Iterator<Item = &DVector<f64>>| -> Vec<f64> {
            vs.flat_map(|v| v.iter().copied()).collect()
        };
        let q = stack(&mut state.agents.iter().map(|a| &a.q));
        let qdot = stack(&mut state.agents.iter().map(|a| &a.qdot));
        let qddot = stack(&mut out.qddot.iter());
        let q0: Vec<f64> = state.target.q0.iter().copied().collect();
        let q0dot: Vec<f64> = state.target.q0dot.iter().copied().collect();
        let q0ddot: Vec<f64> = out.q0ddot.iter().copied().collect();
        let errors = ensemble_errors(
            &Snapshot {
                q0: &q0,
                q0dot: &q0dot,
                q0ddot: &q0ddot,
                q: &q,
                qdot: &qdot,
                qddot: &qddot,
            },
            gains,
        );
        Sample {
            t: state.t,
            u: out.u.iter().map(|u| u.iter().copied().collect()).collect(),
            command: stack(&mut out.command.iter()),
            nu_hat: stack(&mut state.memory.nu_hat.iter()),
            eta: stack(&mut out.eta.iter()),
            eta_dot: stack(&mut out.eta_dot.iter()),
            q0,
            q0dot,
            q0ddot,
            q,
            qdot,
            qddot,
            errors,
        }
    }
}
