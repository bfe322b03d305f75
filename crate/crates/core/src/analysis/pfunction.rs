use serde::{Deserialize, Serialize};

use crate::analysis::DisturbanceSignals;
use crate::controller::ControllerGains;
use crate::error::{Error, Result};
use crate::graph::InteractionMatrix;
use crate::sim::TrajectoryLog;

/// `P(t) = k₄‖Hr₁‖₁ − r₁ᵀHh_B + conv₁ + conv₂` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PFunctionTrace {
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    /// `e^{−λ_P t} ∗ r₁ᵀHḣ_B`.
    pub conv1: Vec<f64>,
    /// `e^{−λ_P t} ∗ (k₂−λ_P)(k₄‖Hr₁‖₁ − r₁ᵀHh_B)`.
    pub conv2: Vec<f64>,
}

impl PFunctionTrace {
    pub fn min(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

/// The value of `P` at the first sample: `k₄‖Hr₁‖₁ − r₁ᵀHh_B`.
pub fn p_initial(h: &InteractionMatrix, r1: &[f64], h_b: &[f64], k4: f64) -> f64 {
    let hr1 = h.apply(r1);
    k4 * norm1(&hr1) - dot(&hr1, h_b)
}

const GRID_RTOL: f64 = 1e-9;

/// Checks that `t` is uniform and returns its step.
pub fn uniform_step(t: &[f64]) -> Result<f64> {
    if t.len() < 2 {
        return Ok(0.0);
    }
    let h = t[1] - t[0];
    if !(h > 0.0) {
        return Err(Error::validation("time grid must be strictly increasing"));
    }
    let tol = GRID_RTOL * h + 4.0 * f64::EPSILON * t[t.len() - 1].abs();
    for (k, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > tol {
            return Err(Error::validation(format!(
                "time grid is not uniform at sample {k}: step {} vs {h}",
                w[1] - w[0]
            )));
        }
    }
    Ok(h)
}

/// Evaluates `P` from traces of `r₁`, `h_B`, `ḣ_B` on the grid `t`.
///
/// Convolutions use the exact decay recursion with trapezoidal quadrature:
/// `acc_{k+1} = e^{−λh}acc_k + (h/2)(e^{−λh}α_k + α_{k+1})`, with `acc₀ = 0`.
pub fn p_function_trace(
    t: &[f64],
    h: &InteractionMatrix,
    r1: &[Vec<f64>],
    h_b: &[Vec<f64>],
    h_b_dot: &[Vec<f64>],
    gains: &ControllerGains,
) -> Result<PFunctionTrace> {
    let len = t.len();
    if r1.len() != len || h_b.len() != len || h_b_dot.len() != len {
        return Err(Error::validation(format!(
            "P-function inputs differ in length: t {len}, r1 {}, h_B {}, ḣ_B {}",
            r1.len(),
            h_b.len(),
            h_b_dot.len()
        )));
    }
    if len == 0 {
        return Err(Error::InsufficientData("P-function needs at least one sample".into()));
    }
    let lp = gains.lambda_p;
    if !(lp > 0.0 && lp < gains.k2) {
        return Err(Error::validation(format!(
            "lambda_P must lie in (0, k2 = {}), got {lp}",
            gains.k2
        )));
    }
    let step = uniform_step(t)?;
    let decay = (-lp * step).exp();
    let half = 0.5 * step;

    let mut inst = Vec::with_capacity(len);
    let mut alpha1 = Vec::with_capacity(len);
    for k in 0..len {
        let hr1 = h.apply(&r1[k]);
        inst.push(gains.k4 * norm1(&hr1) - dot(&hr1, &h_b[k]));
        alpha1.push(dot(&hr1, &h_b_dot[k]));
    }
    let alpha2: Vec<f64> = inst.iter().map(|x| (gains.k2 - lp) * x).collect();

    let mut conv1 = vec![0.0; len];
    let mut conv2 = vec![0.0; len];
    for k in 0..len - 1 {
        conv1[k + 1] = decay * conv1[k] + half * (decay * alpha1[k] + alpha1[k + 1]);
        conv2[k + 1] = decay * conv2[k] + half * (decay * alpha2[k] + alpha2[k + 1]);
    }
    let p = (0..len).map(|k| inst[k] + conv1[k] + conv2[k]).collect();
    Ok(PFunctionTrace {
        t: t.to_vec(),
        p,
        conv1,
        conv2,
    })
}

/// [`p_function_trace`] on a closed-loop log and its disturbance signals.
pub fn p_function_from_log(
    log: &TrajectoryLog,
    h: &InteractionMatrix,
    signals: &DisturbanceSignals,
    gains: &ControllerGains,
) -> Result<PFunctionTrace> {
    let r1: Vec<Vec<f64>> = log.samples.iter().map(|s| s.errors.r1.clone()).collect();
    p_function_trace(&log.times(), h, &r1, &signals.h_b, &signals.h_b_dot, gains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{interaction_matrix, GraphTopology};

    fn scalar_h() -> InteractionMatrix {
        interaction_matrix(&GraphTopology::new(1, 1, vec![], vec![true]).unwrap())
    }

    fn gains() -> ControllerGains {
        ControllerGains { k1: 1.0, k2: 10.0, k3: 1.0, k4: 3.0, lambda_p: 5.0, lambda_v: 1.0 }
    }

    fn grid(len: usize, h: f64) -> Vec<f64> {
        (0..len).map(|k| k as f64 * h).collect()
    }

    #[test]
    fn zero_r1_gives_zero() {
        let h = scalar_h();
        let t = grid(50, 0.01);
        let zeros = vec![vec![0.0]; 50];
        let hb: Vec<Vec<f64>> = t.iter().map(|s| vec![s.cos()]).collect();
        let p = p_function_trace(&t, &h, &zeros, &hb, &hb, &gains()).unwrap();
        assert!(p.p.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn initial_value_is_exact() {
        let h = scalar_h();
        let t = grid(5, 0.1);
        let r1 = vec![vec![0.7]; 5];
        let hb = vec![vec![0.3]; 5];
        let p = p_function_trace(&t, &h, &r1, &hb, &hb, &gains()).unwrap();
        assert_eq!(p.p[0], p_initial(&h, &[0.7], &[0.3], 3.0));
        assert_eq!(p.p[0], 3.0 * 0.7 - 0.7 * 0.3);
    }

    #[test]
    fn constant_inputs_match_closed_form() {
        let h = scalar_h();
        let g = gains();
        let len = 2001;
        let t = grid(len, 1e-3);
        let r1 = vec![vec![0.5]; len];
        let hb = vec![vec![0.25]; len];
        let hbd = vec![vec![0.0]; len];
        let p = p_function_trace(&t, &h, &r1, &hb, &hbd, &g).unwrap();
        let c = g.k4 * 0.5 - 0.5 * 0.25;
        for (k, &tk) in t.iter().enumerate() {
            let exact = c * (1.0 + (g.k2 - g.lambda_p) * (1.0 - (-g.lambda_p * tk).exp()) / g.lambda_p);
            // Trapezoidal error is about h²λ_P²/12 relative.
            assert!((p.p[k] - exact).abs() < 4e-6 * c, "t={tk}: {} vs {exact}", p.p[k]);
        }
    }

    #[test]
    fn rejects_nonuniform_grid_and_bad_lambda() {
        let h = scalar_h();
        let r = vec![vec![1.0]; 3];
        assert!(p_function_trace(&[0.0, 0.1, 0.3], &h, &r, &r, &r, &gains()).is_err());
        let bad = ControllerGains { lambda_p: 10.0, ..gains() };
        assert!(p_function_trace(&[0.0, 0.1, 0.2], &h, &r, &r, &r, &bad).is_err());
    }
}
