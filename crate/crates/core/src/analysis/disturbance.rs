use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{right_pseudo_inverse, Bounds, DynamicsModel};
use crate::error::{Error, Result};
use crate::sim::noise::stream;
use crate::sim::TrajectoryLog;

/// Stream id used by box sampling.
pub const BOX_STREAM: u64 = 2;
const OUTER_EPS: f64 = 1e-3;
const INNER_EPS: f64 = 1e-5;

/// `h_B`, its time derivative, and optionally `h̃`, sampled on a uniform grid.
///
/// Each entry is a stacked vector of length `nN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSignals {
    pub t0: f64,
    pub dt: f64,
    pub h_b: Vec<Vec<f64>>,
    pub h_b_dot: Vec<Vec<f64>>,
    /// Empty unless computed from a full log.
    pub h_tilde: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiMode {
    /// Supremum along the simulated target trajectory.
    Trajectory,
    /// Monte-Carlo supremum over the declared bounds box.
    BoxSampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiEstimates {
    pub chi1: f64,
    pub chi2: f64,
    pub sup_h_b: f64,
    pub sup_h_b_dot: f64,
    pub safety: f64,
    pub mode: ChiMode,
}

/// Second-order finite differences on a uniform grid: central inside, one-sided at the ends.
pub fn fd_derivative<T>(values: &[T], h: f64) -> Result<Vec<T>>
where
    T: Clone + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = values.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "finite differences need at least 3 samples, got {n}"
        )));
    }
    let c = 1.0 / (2.0 * h);
    let mut out = Vec::with_capacity(n);
    out.push(
        (values[1].clone() * 4.0 - values[0].clone() * 3.0 - values[2].clone()) * c,
    );
    for k in 1..n - 1 {
        out.push((values[k + 1].clone() - values[k - 1].clone()) * c);
    }
    out.push(
        (values[n - 1].clone() * 3.0 - values[n - 2].clone() * 4.0 + values[n - 3].clone()) * c,
    );
    Ok(out)
}

fn stacked_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `h_B(t)` along a target trajectory `(q₀, q̇₀)` logged every `dt` from `t0`.
///
/// `hᵢ = ḟ₀ − ḟᵢ − ḋᵢ − ġᵢgᵢ⁺(q̈₀ − fᵢ − dᵢ)` with every function evaluated at the target
/// state and every total derivative taken by finite differences along the grid.
pub fn h_b_trace(
    model: &dyn DynamicsModel,
    t0: f64,
    dt: f64,
    q0: &[DVector<f64>],
    q0dot: &[DVector<f64>],
) -> Result<DisturbanceSignals> {
    let len = q0.len();
    if q0dot.len() != len {
        return Err(Error::validation("q0 and q0dot traces differ in length"));
    }
    if len < 3 {
        return Err(Error::InsufficientData(format!(
            "h_B needs at least 3 target samples, got {len}"
        )));
    }
    let times: Vec<f64> = (0..len).map(|k| t0 + k as f64 * dt).collect();
    let f0: Vec<DVector<f64>> = (0..len)
        .map(|k| model.target_drift(&q0[k], &q0dot[k], times[k]))
        .collect();
    let f0_dot = fd_derivative(&f0, dt)?;
    let n = model.state_dim();
    let agents = model.agent_count();
    let mut h_b = vec![Vec::with_capacity(n * agents); len];

    for i in 0..agents {
        let f: Vec<DVector<f64>> = (0..len)
            .map(|k| model.drift(i, &q0[k], &q0dot[k], times[k]))
            .collect();
        let g: Vec<DMatrix<f64>> = (0..len)
            .map(|k| model.input_gain(i, &q0[k], &q0dot[k], times[k]))
            .collect();
        let d: Vec<DVector<f64>> = (0..len).map(|k| model.disturbance(i, times[k])).collect();
        let f_dot = fd_derivative(&f, dt)?;
        let g_dot = fd_derivative(&g, dt)?;
        let d_dot = fd_derivative(&d, dt)?;
        for k in 0..len {
            let g_plus = right_pseudo_inverse(&g[k], i, times[k])?;
            let mismatch = &f0[k] - &f[k] - &d[k];
            let h = &f0_dot[k] - &f_dot[k] - &d_dot[k] - &g_dot[k] * (g_plus * mismatch);
            h_b[k].extend(h.iter());
        }
    }
    let h_b_dot = fd_derivative(
        &h_b.iter().map(|v| DVector::from_column_slice(v)).collect::<Vec<_>>(),
        dt,
    )?
    .into_iter()
    .map(|v| v.as_slice().to_vec())
    .collect();
    Ok(DisturbanceSignals {
        t0,
        dt,
        h_b,
        h_b_dot,
        h_tilde: Vec::new(),
    })
}

fn target_trace(log: &TrajectoryLog) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let q0 = log.samples.iter().map(|s| DVector::from_column_slice(&s.q0)).collect();
    let q0dot = log.samples.iter().map(|s| DVector::from_column_slice(&s.q0dot)).collect();
    (q0, q0dot)
}

/// `h_B`, `ḣ_B` and `h̃` from a closed-loop log.
pub fn disturbance_signals(model: &dyn DynamicsModel, log: &TrajectoryLog) -> Result<DisturbanceSignals> {
    let t0 = log.samples.first().map_or(0.0, |s| s.t);
    let (q0, q0dot) = target_trace(log);
    let mut signals = h_b_trace(model, t0, log.dt, &q0, &q0dot)?;
    signals.h_tilde = h_tilde_trace(model, log)?;
    Ok(signals)
}

/// The state-dependent mismatch `h̃ᵢ = [ḟᵢ + ġᵢgᵢ⁺(q̈ − fᵢ − dᵢ)]` evaluated along the target
/// minus the same along agent `i`'s own path.
pub fn h_tilde_trace(model: &dyn DynamicsModel, log: &TrajectoryLog) -> Result<Vec<Vec<f64>>> {
    let len = log.len();
    if len < 3 {
        return Err(Error::InsufficientData(format!(
            "h̃ needs at least 3 samples, got {len}"
        )));
    }
    let n = log.dim;
    let dt = log.dt;
    let mut out = vec![Vec::with_capacity(n * log.agents); len];
    let part = |i: usize, path: &dyn Fn(usize) -> (DVector<f64>, DVector<f64>, DVector<f64>)| -> Result<Vec<DVector<f64>>> {
        let mut f = Vec::with_capacity(len);
        let mut g = Vec::with_capacity(len);
        for (k, s) in log.samples.iter().enumerate() {
            let (q, qd, _) = path(k);
            f.push(model.drift(i, &q, &qd, s.t));
            g.push(model.input_gain(i, &q, &qd, s.t));
        }
        let f_dot = fd_derivative(&f, dt)?;
        let g_dot = fd_derivative(&g, dt)?;
        let mut terms = Vec::with_capacity(len);
        for (k, s) in log.samples.iter().enumerate() {
            let (_, _, qdd) = path(k);
            let g_plus = right_pseudo_inverse(&g[k], i, s.t)?;
            let rest = qdd - &f[k] - model.disturbance(i, s.t);
            terms.push(&f_dot[k] + &g_dot[k] * (g_plus * rest));
        }
        Ok(terms)
    };
    for i in 0..log.agents {
        let slice = |v: &[f64]| DVector::from_column_slice(&v[i * n..(i + 1) * n]);
        let along_target = part(i, &|k| {
            let s = &log.samples[k];
            (
                DVector::from_column_slice(&s.q0),
                DVector::from_column_slice(&s.q0dot),
                DVector::from_column_slice(&s.q0ddot),
            )
        })?;
        let along_agent = part(i, &|k| {
            let s = &log.samples[k];
            (slice(&s.q), slice(&s.qdot), slice(&s.qddot))
        })?;
        for k in 0..len {
            out[k].extend((&along_target[k] - &along_agent[k]).iter());
        }
    }
    Ok(out)
}

/// `χ₁ = safety·sup‖h_B‖`, `χ₂ = safety·sup‖ḣ_B‖`.
pub fn chi_estimates(signals: &DisturbanceSignals, safety: f64) -> Result<ChiEstimates> {
    if !(safety >= 1.0 && safety.is_finite()) {
        return Err(Error::validation(format!("chi safety factor must be at least 1, got {safety}")));
    }
    let sup = |vs: &[Vec<f64>]| vs.iter().map(|v| stacked_norm(v)).fold(0.0, f64::max);
    let sup_h_b = sup(&signals.h_b);
    let sup_h_b_dot = sup(&signals.h_b_dot);
    Ok(ChiEstimates {
        chi1: safety * sup_h_b,
        chi2: safety * sup_h_b_dot,
        sup_h_b,
        sup_h_b_dot,
        safety,
        mode: ChiMode::Trajectory,
    })
}

/// Target-flow derivative of `φ` at `x = (q₀, q̇₀, t)`: `(φ(x + εF) − φ(x − εF)) / 2ε`
/// with `F = (q̇₀, f₀, 1)`.
fn flow_derivative<T, P>(
    model: &dyn DynamicsModel,
    q0: &DVector<f64>,
    q0dot: &DVector<f64>,
    t: f64,
    eps: f64,
    phi: P,
) -> Result<T>
where
    T: Sub<Output = T> + Mul<f64, Output = T>,
    P: Fn(&DVector<f64>, &DVector<f64>, f64) -> Result<T>,
{
    let acc = model.target_drift(q0, q0dot, t);
    let plus = phi(&(q0 + q0dot * eps), &(q0dot + &acc * eps), t + eps)?;
    let minus = phi(&(q0 - q0dot * eps), &(q0dot - &acc * eps), t - eps)?;
    Ok((plus - minus) * (0.5 / eps))
}

/// `h_B` at a single point of target state space.
fn h_b_at(model: &dyn DynamicsModel, q0: &DVector<f64>, q0dot: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
    let n = model.state_dim();
    let f0 = model.target_drift(q0, q0dot, t);
    let f0_dot = flow_derivative(model, q0, q0dot, t, INNER_EPS, |q, v, s| {
        Ok(model.target_drift(q, v, s))
    })?;
    let mut out = DVector::zeros(n * model.agent_count());
    for i in 0..model.agent_count() {
        let f = model.drift(i, q0, q0dot, t);
        let g = model.input_gain(i, q0, q0dot, t);
        let d = model.disturbance(i, t);
        let f_dot = flow_derivative(model, q0, q0dot, t, INNER_EPS, |q, v, s| Ok(model.drift(i, q, v, s)))?;
        let g_dot = flow_derivative(model, q0, q0dot, t, INNER_EPS, |q, v, s| {
            Ok(model.input_gain(i, q, v, s))
        })?;
        let d_dot = flow_derivative(model, q0, q0dot, t, INNER_EPS, |_, _, s| Ok(model.disturbance(i, s)))?;
        let g_plus = right_pseudo_inverse(&g, i, t)?;
        let h = &f0_dot - f_dot - d_dot - g_dot * (g_plus * (&f0 - f - d));
        out.rows_mut(i * n, n).copy_from(&h);
    }
    Ok(out)
}

/// Monte-Carlo `χ` over `|q₀ₖ| ≤ q0_bar`, `|q̇₀ₖ| ≤ q0dot_bar`, `t ∈ [0, t_span]`.
pub fn chi_box_sampling(
    model: &dyn DynamicsModel,
    bounds: &Bounds,
    samples: usize,
    t_span: f64,
    seed: u64,
    safety: f64,
) -> Result<ChiEstimates> {
    bounds.validate(model.agent_count())?;
    if samples == 0 {
        return Err(Error::validation("box sampling needs at least one sample"));
    }
    if !(safety >= 1.0 && safety.is_finite()) {
        return Err(Error::validation(format!("chi safety factor must be at least 1, got {safety}")));
    }
    let n = model.state_dim();
    let mut rng = stream(seed, BOX_STREAM);
    let (mut sup_h, mut sup_hd) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let q0 = DVector::from_fn(n, |_, _| rng.random_range(-bounds.q0_bar..=bounds.q0_bar));
        let q0dot = DVector::from_fn(n, |_, _| rng.random_range(-bounds.q0dot_bar..=bounds.q0dot_bar));
        let t = rng.random_range(0.0..=t_span.max(0.0));
        let h = h_b_at(model, &q0, &q0dot, t)?;
        let h_dot = flow_derivative(model, &q0, &q0dot, t, OUTER_EPS, |q, v, s| h_b_at(model, q, v, s))?;
        sup_h = sup_h.max(h.norm());
        sup_hd = sup_hd.max(h_dot.norm());
    }
    Ok(ChiEstimates {
        chi1: safety * sup_h,
        chi2: safety * sup_hd,
        sup_h_b: sup_h,
        sup_h_b_dot: sup_hd,
        safety,
        mode: ChiMode::BoxSampling,
    })
}
