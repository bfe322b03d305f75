use serde::{Deserialize, Serialize};

use crate::analysis::EnsembleErrorState;

/// One logged instant. Stacked quantities are agent-major vectors of length `nN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub q0: Vec<f64>,
    pub q0dot: Vec<f64>,
    pub q0ddot: Vec<f64>,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub qddot: Vec<f64>,
    /// Applied inputs, one vector of length `mᵢ` per agent.
    pub u: Vec<Vec<f64>>,
    /// Commanded accelerations `gᵢuᵢ`, stacked.
    pub command: Vec<f64>,
    pub nu_hat: Vec<f64>,
    /// `ηᵢ` and `η̇ᵢ` as the controllers computed them (including measurement noise).
    pub eta: Vec<f64>,
    pub eta_dot: Vec<f64>,
    /// True ensemble errors.
    pub errors: EnsembleErrorState,
}

/// Samples on a uniform grid with spacing `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub agents: usize,
    pub dim: usize,
    pub dt: f64,
    pub samples: Vec<Sample>,
}

impl TrajectoryLog {
    pub fn new(agents: usize, dim: usize, dt: f64) -> Self {
        Self {
            agents,
            dim,
            dt,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// `‖eᵢ‖` for each agent at sample `k`.
    pub fn error_norms(&self, k: usize) -> Vec<f64> {
        self.samples[k]
            .errors
            .e
            .chunks(self.dim)
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }

    pub fn z_norms(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.errors.z_norm()).collect()
    }

    /// Keeps every `stride`-th sample.
    pub fn decimate(&self, stride: usize) -> TrajectoryLog {
        let stride = stride.max(1);
        TrajectoryLog {
            agents: self.agents,
            dim: self.dim,
            dt: self.dt * stride as f64,
            samples: self.samples.iter().step_by(stride).cloned().collect(),
        }
    }
}
