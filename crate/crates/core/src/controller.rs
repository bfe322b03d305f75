//! Decentralized RISE control law.
//!
//! Agent `i` only sees [`LocalMeasurements`]: relative position and velocity to each graph
//! neighbor, relative state to the target when it is pinned, and its own integrator `ν̂ᵢ`.
//! Nothing in this module has access to global state.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerGains {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Weight of the signum term. Zero disables the robust term.
    pub k4: f64,
    /// Decay rate of the P-function convolutions; must lie in `(0, k2)`.
    #[serde(rename = "lambda_P")]
    pub lambda_p: f64,
    /// Desired convergence rate used by the stabilizing-set and envelope checks.
    #[serde(rename = "lambda_V")]
    pub lambda_v: f64,
}

impl ControllerGains {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k1", self.k1), ("k2", self.k2), ("k3", self.k3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("gains.{name} must be positive, got {v}")));
            }
        }
        if !(self.k4.is_finite() && self.k4 >= 0.0) {
            return Err(Error::validation(format!(
                "gains.k4 must be non-negative, got {}",
                self.k4
            )));
        }
        if !(self.lambda_v.is_finite() && self.lambda_v > 0.0) {
            return Err(Error::validation(format!(
                "gains.lambda_V must be positive, got {}",
                self.lambda_v
            )));
        }
        if !(self.lambda_p.is_finite() && self.lambda_p > 0.0 && self.lambda_p < self.k2) {
            return Err(Error::validation(format!(
                "gains.lambda_P must lie in (0, k2 = {}), got {}",
                self.k2, self.lambda_p
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborMeasurement {
    /// Link weight `a_ij`.
    pub weight: f64,
    /// `q_j − q_i`.
    pub rel_pos: DVector<f64>,
    /// `q̇_j − q̇_i`.
    pub rel_vel: DVector<f64>,
}

/// Relative state to the target, `eᵢ = q₀ − qᵢ` and `ėᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMeasurement {
    pub rel_pos: DVector<f64>,
    pub rel_vel: DVector<f64>,
}

/// Everything agent `i` is allowed to know about the rest of the system.
///
/// `target` is `Some` exactly when the agent is pinned.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMeasurements {
    pub dim: usize,
    pub neighbors: Vec<NeighborMeasurement>,
    pub target: Option<TargetMeasurement>,
}

impl LocalMeasurements {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            neighbors: Vec::new(),
            target: None,
        }
    }

    pub fn is_pinned(&self) -> bool {
        self.target.is_some()
    }
}

/// Per-agent `ν̂ᵢ` integrator state.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerMemory {
    pub nu_hat: Vec<DVector<f64>>,
}

impl ControllerMemory {
    /// All integrators start at zero.
    pub fn zeros(agents: usize, dim: usize) -> Self {
        Self {
            nu_hat: vec![DVector::zeros(dim); agents],
        }
    }
}

/// Element-wise signum with `sgn(0) = 0`.
pub fn sgn(v: &DVector<f64>) -> DVector<f64> {
    v.map(|x| {
        if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        }
    })
}

/// `ηᵢ = bᵢeᵢ + Σⱼ a_ij q_ij`.
pub fn neighborhood_error(meas: &LocalMeasurements) -> DVector<f64> {
    let mut eta = DVector::zeros(meas.dim);
    if let Some(target) = &meas.target {
        eta += &target.rel_pos;
    }
    for nb in &meas.neighbors {
        eta.axpy(nb.weight, &nb.rel_pos, 1.0);
    }
    eta
}

/// `η̇ᵢ = bᵢėᵢ + Σⱼ a_ij q̇_ij`.
pub fn neighborhood_error_rate(meas: &LocalMeasurements) -> DVector<f64> {
    let mut eta_dot = DVector::zeros(meas.dim);
    if let Some(target) = &meas.target {
        eta_dot += &target.rel_vel;
    }
    for nb in &meas.neighbors {
        eta_dot.axpy(nb.weight, &nb.rel_vel, 1.0);
    }
    eta_dot
}

/// The RISE law for one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiseController {
    pub gains: ControllerGains,
}

impl RiseController {
    pub fn new(gains: ControllerGains) -> Self {
        Self { gains }
    }

    /// The bracket that `gᵢ⁺` multiplies, i.e. the commanded acceleration `gᵢuᵢ`:
    /// `k₃η̇ + ((k₁+k₂)k₃+1)η + (k₁+k₂)bė + (1+k₁k₂)be + ν̂`.
    pub fn command(&self, meas: &LocalMeasurements, nu_hat: &DVector<f64>) -> DVector<f64> {
        let ControllerGains { k1, k2, k3, .. } = self.gains;
        let eta = neighborhood_error(meas);
        let eta_dot = neighborhood_error_rate(meas);
        let mut x = eta_dot * k3 + eta * ((k1 + k2) * k3 + 1.0) + nu_hat;
        if let Some(target) = &meas.target {
            x.axpy(k1 + k2, &target.rel_vel, 1.0);
            x.axpy(1.0 + k1 * k2, &target.rel_pos, 1.0);
        }
        x
    }

    /// `uᵢ = gᵢ⁺ · command`.
    pub fn control(
        &self,
        meas: &LocalMeasurements,
        nu_hat: &DVector<f64>,
        g_plus: &DMatrix<f64>,
    ) -> Result<DVector<f64>> {
        if g_plus.ncols() != meas.dim || nu_hat.len() != meas.dim {
            return Err(Error::validation(format!(
                "g⁺ is {}x{} and ν̂ has length {}, expected {} columns/entries",
                g_plus.nrows(),
                g_plus.ncols(),
                nu_hat.len(),
                meas.dim
            )));
        }
        Ok(g_plus * self.command(meas, nu_hat))
    }

    /// `ν̂̇ᵢ = (k₁ + (1+k₁k₂)k₃)ηᵢ + k₄ sgn(η̇ᵢ + k₁ηᵢ)`.
    pub fn nu_hat_rate(&self, meas: &LocalMeasurements) -> DVector<f64> {
        let ControllerGains { k1, k2, k3, k4, .. } = self.gains;
        let eta = neighborhood_error(meas);
        let eta_dot = neighborhood_error_rate(meas);
        let switching = sgn(&(eta_dot + &eta * k1)) * k4;
        eta * (k1 + (1.0 + k1 * k2) * k3) + switching
    }
}
