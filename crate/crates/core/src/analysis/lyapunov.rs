use crate::analysis::PFunctionTrace;
use crate::error::{Error, Result};
use crate::graph::InteractionMatrix;
use crate::sim::TrajectoryLog;

const GRID_ATOL: f64 = 1e-9;

/// `V = ½(‖e‖² + ‖r₁‖² + r₂ᵀHr₂) + P`, one value per logged sample.
pub fn lyapunov_trace(log: &TrajectoryLog, p: &PFunctionTrace, h: &InteractionMatrix) -> Result<Vec<f64>> {
    if p.t.len() != log.len() {
        return Err(Error::validation(format!(
            "P trace has {} samples, log has {}",
            p.t.len(),
            log.len()
        )));
    }
    log.samples
        .iter()
        .zip(p.t.iter().zip(&p.p))
        .map(|(s, (&tp, &pk))| {
            if (s.t - tp).abs() > GRID_ATOL * s.t.abs().max(1.0) {
                return Err(Error::validation(format!(
                    "P trace time {tp} does not match log time {}",
                    s.t
                )));
            }
            let e = &s.errors;
            let hr2 = h.apply(&e.r2);
            let quad = e.e.iter().map(|x| x * x).sum::<f64>()
                + e.r1.iter().map(|x| x * x).sum::<f64>()
                + e.r2.iter().zip(&hr2).map(|(a, b)| a * b).sum::<f64>();
            Ok(0.5 * quad + pk)
        })
        .collect()
}

/// Share of grid steps `k → k+1` inside `window` with `V(t_{k+1}) < V(t_k)`.
pub fn descent_fraction(t: &[f64], v: &[f64], window: [f64; 2]) -> Result<f64> {
    if t.len() != v.len() {
        return Err(Error::validation("descent fraction needs matching t and V traces"));
    }
    let (mut down, mut total) = (0usize, 0usize);
    for k in 0..t.len().saturating_sub(1) {
        if t[k] >= window[0] && t[k + 1] <= window[1] {
            total += 1;
            if v[k + 1] < v[k] {
                down += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::InsufficientData(format!(
            "no grid steps inside [{}, {}]",
            window[0], window[1]
        )));
    }
    Ok(down as f64 / total as f64)
}
