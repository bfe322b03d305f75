use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::controller::ControllerGains;

/// Omniscient snapshot of the whole system, stacked agent-major (`[q₁; q₂; …]`).
///
/// Accelerations are the true ones under the applied input, not finite differences.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub q0: &'a [f64],
    pub q0dot: &'a [f64],
    pub q0ddot: &'a [f64],
    pub q: &'a [f64],
    pub qdot: &'a [f64],
    pub qddot: &'a [f64],
}

/// `e`, `r₁ = ė + k₁e`, `r₂ = ṙ₁ + k₂r₁ + e`, each in `R^{nN}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleErrorState {
    pub e: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
}

impl EnsembleErrorState {
    /// `z = [e; r₁; r₂]`.
    pub fn z(&self) -> DVector<f64> {
        DVector::from_iterator(
            3 * self.e.len(),
            self.e.iter().chain(&self.r1).chain(&self.r2).copied(),
        )
    }

    pub fn z_norm(&self) -> f64 {
        self.e
            .iter()
            .chain(&self.r1)
            .chain(&self.r2)
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

/// Differences `target − agent` stacked over agents.
fn target_minus(target: &[f64], agents: &[f64]) -> Vec<f64> {
    let n = target.len();
    agents
        .iter()
        .enumerate()
        .map(|(k, a)| target[k % n] - a)
        .collect()
}

pub fn ensemble_errors(s: &Snapshot<'_>, gains: &ControllerGains) -> EnsembleErrorState {
    let e = target_minus(s.q0, s.q);
    let e_dot = target_minus(s.q0dot, s.qdot);
    let e_ddot = target_minus(s.q0ddot, s.qddot);
    let r1: Vec<f64> = e_dot.iter().zip(&e).map(|(ed, e)| ed + gains.k1 * e).collect();
    let r2 = (0..e.len())
        .map(|k| (e_ddot[k] + gains.k1 * e_dot[k]) + gains.k2 * r1[k] + e[k])
        .collect();
    EnsembleErrorState { e, r1, r2 }
}
