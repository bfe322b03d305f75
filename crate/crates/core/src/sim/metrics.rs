use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::TrajectoryLog;

/// Summary statistics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `√(mean over window samples and agents of ‖eᵢ‖²)`, metres.
    pub cumulative_rms_e: f64,
    /// Earliest logged time after which every `‖eᵢ‖` stays within the threshold.
    pub convergence_time_005: Option<f64>,
    pub max_u_norm: f64,
    pub final_e_norms: Vec<f64>,
}

const WINDOW_SLACK: f64 = 1e-9;

pub fn compute_metrics(log: &TrajectoryLog, window: [f64; 2], threshold: f64) -> Result<Metrics> {
    let (first, last) = match (log.samples.first(), log.samples.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(Error::validation("no samples")),
    };
    let [w0, w1] = window;
    if !(w0 <= w1 && w0 >= first - WINDOW_SLACK && w1 <= last + WINDOW_SLACK) {
        return Err(Error::validation(format!(
            "metrics window [{w0}, {w1}] is outside the logged range [{first}, {last}]"
        )));
    }

    let (mut sum, mut count) = (0.0, 0usize);
    for (k, s) in log.samples.iter().enumerate() {
        if s.t >= w0 - WINDOW_SLACK && s.t <= w1 + WINDOW_SLACK {
            sum += log.error_norms(k).iter().map(|e| e * e).sum::<f64>();
            count += log.agents;
        }
    }
    let cumulative_rms_e = if count == 0 { 0.0 } else { (sum / count as f64).sqrt() };

    let worst: Vec<f64> = (0..log.len())
        .map(|k| log.error_norms(k).into_iter().fold(0.0, f64::max))
        .collect();
    let convergence_time_005 = match worst.iter().rposition(|&w| !(w <= threshold)) {
        None => Some(first),
        Some(k) if k + 1 < log.len() => Some(log.samples[k + 1].t),
        Some(_) => None,
    };

    let max_u_norm = log
        .samples
        .iter()
        .flat_map(|s| s.u.iter())
        .map(|u| u.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);

    Ok(Metrics {
        cumulative_rms_e,
        convergence_time_005,
        max_u_norm,
        final_e_norms: log.error_norms(log.len() - 1),
    })
}
