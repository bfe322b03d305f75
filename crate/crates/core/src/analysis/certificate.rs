use serde::{Deserialize, Serialize};

use crate::analysis::{
    chi_box_sampling, chi_estimates, descent_fraction, disturbance_signals,
    lyapunov_trace, p_function_trace, ChiEstimates, ChiMode, PFunctionTrace,
};
use crate::config::{AnalysisConfig, ScenarioConfig};
use crate::controller::ControllerGains;
use crate::error::{Error, Result};
use crate::graph::{interaction_matrix, spectral_summary, InteractionMatrix, SpectralSummary};
use crate::sim::{simulate, NoiseSigma, Scenario, TrajectoryLog};

/// `min{k₁−½, k₂−½, 2(k₁+k₂)(λ̲_H λ̲_{B−I} + k₃λ̲_H²) − (λ̄_{I−H²} + (1+2k₁²+k₁k₂)λ̄_H λ̄_{B−I})²
/// − (k₁(2−k₁²)+k₂)² λ̄_H² λ̄_{B−I}²}`.
pub fn k_min_value(s: &SpectralSummary, g: &ControllerGains) -> f64 {
    let (k1, k2, k3) = (g.k1, g.k2, g.k3);
    let third = 2.0 * (k1 + k2) * (s.lambda_min_h * s.lambda_min_b_minus_i + k3 * s.lambda_min_h.powi(2))
        - (s.lambda_max_i_minus_h2 + (1.0 + 2.0 * k1 * k1 + k1 * k2) * s.lambda_max_h * s.lambda_max_b_minus_i)
            .powi(2)
        - (k1 * (2.0 - k1 * k1) + k2).powi(2) * s.lambda_max_h.powi(2) * s.lambda_max_b_minus_i.powi(2);
    (k1 - 0.5).min(k2 - 0.5).min(third)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainVerdict {
    pub value: f64,
    /// The gain must strictly exceed this.
    pub threshold: f64,
    pub pass: bool,
}

impl GainVerdict {
    fn new(value: f64, threshold: f64) -> Self {
        Self {
            value,
            threshold,
            pass: value > threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainConditions {
    pub k1: GainVerdict,
    pub k2: GainVerdict,
    pub k3: GainVerdict,
    pub k4: GainVerdict,
}

impl GainConditions {
    pub fn all_pass(&self) -> bool {
        self.k1.pass && self.k2.pass && self.k3.pass && self.k4.pass
    }
}

/// Sufficient gain conditions: `k₁, k₂ > ½`,
/// `k₃ > (λ̄_{I−H²} + λ̄_H λ̄_{B−I})² + 2λ̄_H²λ̄_{B−I}²`, `k₄ > χ₁ + χ₂/(k₂−λ_P)`.
pub fn gain_conditions(s: &SpectralSummary, g: &ControllerGains, chi: &ChiEstimates) -> Result<GainConditions> {
    if !(g.lambda_p > 0.0 && g.lambda_p < g.k2) {
        return Err(Error::validation(format!(
            "gains.lambda_P must lie in (0, k2 = {}), got {}",
            g.k2, g.lambda_p
        )));
    }
    let k3_threshold = (s.lambda_max_i_minus_h2 + s.lambda_max_h * s.lambda_max_b_minus_i).powi(2)
        + 2.0 * s.lambda_max_h.powi(2) * s.lambda_max_b_minus_i.powi(2);
    Ok(GainConditions {
        k1: GainVerdict::new(g.k1, 0.5),
        k2: GainVerdict::new(g.k2, 0.5),
        k3: GainVerdict::new(g.k3, k3_threshold),
        k4: GainVerdict::new(g.k4, chi.chi1 + chi.chi2 / (g.k2 - g.lambda_p)),
    })
}

/// `W(z₀) = λ̲_Q^{−½}·√(λ̄_Q‖z₀‖² + 2(k₄+χ₁)‖H‖₁‖z₀‖₁)`.
pub fn w_value(z0: &[f64], s: &SpectralSummary, k4: f64, chi1: f64, h_norm1: f64) -> f64 {
    let sq: f64 = z0.iter().map(|x| x * x).sum();
    let l1: f64 = z0.iter().map(|x| x.abs()).sum();
    (s.lambda_max_q * sq + 2.0 * (k4 + chi1) * h_norm1 * l1).sqrt() / s.lambda_min_q.sqrt()
}

/// Comparison of `‖z(t)‖` with `W(z₀)e^{−rate(t−t₀)} + atol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub w_z0: f64,
    pub atol: f64,
    /// `λ̲_Q·λ_V`, the rate implied for `‖z‖` by the decay of `V`.
    pub rate_conservative: f64,
    /// `2λ̲_Q·λ_V`, the exponent as stated for `‖z‖`.
    pub rate_stated: f64,
    pub pass_conservative: bool,
    pub pass_stated: bool,
    /// `min_t (W e^{−rate_conservative(t−t₀)} + atol − ‖z(t)‖)`.
    pub worst_margin: f64,
    /// Whether the bound holds with zero rate.
    pub holds_at_zero_rate: bool,
    /// Largest `λ_V` (through `rate = λ̲_Q λ_V`) for which the bound holds; `None` when no sample
    /// constrains it.
    pub max_lambda_v: Option<f64>,
}

fn envelope_margin(t: &[f64], z: &[f64], w: f64, rate: f64, atol: f64) -> f64 {
    t.iter()
        .zip(z)
        .map(|(&tk, &zk)| w * (-rate * (tk - t[0])).exp() + atol - zk)
        .fold(f64::INFINITY, f64::min)
}

pub fn envelope_check(
    t: &[f64],
    z_norms: &[f64],
    w_z0: f64,
    s: &SpectralSummary,
    lambda_v: f64,
    atol: f64,
) -> Result<EnvelopeCheck> {
    if t.len() != z_norms.len() || t.is_empty() {
        return Err(Error::validation("envelope check needs matching, nonempty t and ‖z‖ traces"));
    }
    let rate_conservative = s.lambda_min_q * lambda_v;
    let rate_stated = 2.0 * rate_conservative;
    let worst_margin = envelope_margin(t, z_norms, w_z0, rate_conservative, atol);
    let stated_margin = envelope_margin(t, z_norms, w_z0, rate_stated, atol);
    let holds_at_zero_rate = z_norms.iter().all(|&zk| zk <= w_z0 + atol);
    let max_rate = if holds_at_zero_rate {
        t.iter()
            .zip(z_norms)
            .filter(|(&tk, &zk)| tk > t[0] && zk > atol)
            .map(|(&tk, &zk)| -((zk - atol) / w_z0).ln() / (tk - t[0]))
            .reduce(f64::min)
    } else {
        None
    };
    Ok(EnvelopeCheck {
        w_z0,
        atol,
        rate_conservative,
        rate_stated,
        pass_conservative: worst_margin >= 0.0,
        pass_stated: stated_margin >= 0.0,
        worst_margin,
        holds_at_zero_rate,
        max_lambda_v: max_rate.map(|r| r / s.lambda_min_q),
    })
}

/// Least-squares line through `(t, ln‖z‖)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    /// Slope of `ln‖z‖`; negative means decay.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: [f64; 2],
    pub samples: usize,
}

pub fn exponential_fit(t: &[f64], z_norms: &[f64], window: [f64; 2]) -> Result<ExpFit> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(z_norms)
        .filter(|(&tk, &zk)| tk >= window[0] && tk <= window[1] && zk > 0.0)
        .map(|(&tk, &zk)| (tk, zk.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "exponential fit over [{}, {}] has {} usable samples, need 3",
            window[0],
            window[1],
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let stt: f64 = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let rate = sty / stt;
    let intercept = mean_y - rate * mean_t;
    let r_squared = if syy > 0.0 { sty * sty / (stt * syy) } else { 1.0 };
    Ok(ExpFit {
        rate,
        intercept,
        r_squared,
        window,
        samples: pts.len(),
    })
}

/// The decay window `[t₀ + skip, t_floor]`.
///
/// Pointwise signum evaluation leaves `‖z‖` on a small floor once the transient is over. The
/// floor level is the largest `‖z‖` over the last quarter of the samples after `t₀ + skip`, and
/// `t_floor` is the first time `‖z‖` falls to `floor_margin` times that level.
pub fn decay_window(t: &[f64], z_norms: &[f64], skip: f64, floor_margin: f64) -> Result<[f64; 2]> {
    let t0 = *t.first().ok_or_else(|| Error::InsufficientData("empty trace".into()))?;
    let start = t
        .iter()
        .position(|&tk| tk >= t0 + skip - 1e-12)
        .ok_or_else(|| Error::InsufficientData(format!("trace ends before the {skip} s transient")))?;
    let tail = start + 3 * (t.len() - start) / 4;
    let floor = z_norms[tail..].iter().copied().fold(0.0, f64::max);
    let end = (start..t.len())
        .find(|&k| z_norms[k] <= floor_margin * floor)
        .unwrap_or(t.len() - 1);
    Ok([t[start], t[end]])
}

/// A scalar `ρ(s)` for the stabilizing-set check.
pub trait RhoModel {
    fn eval(&self, s: f64) -> f64;
}

/// `ρ(s) = Σ cₖ sᵏ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoPolynomial {
    pub coeffs: Vec<f64>,
}

impl RhoModel for RhoPolynomial {
    fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }
}

const MONOTONE_GRID: usize = 1024;

fn check_monotone(rho: &dyn RhoModel, s_max: f64) -> Result<()> {
    let mut prev = rho.eval(0.0);
    for k in 1..=MONOTONE_GRID {
        let s = s_max * k as f64 / MONOTONE_GRID as f64;
        let v = rho.eval(s);
        if !v.is_finite() || v < prev {
            return Err(Error::validation(format!(
                "rho model is not non-decreasing on [0, {s_max}] (at s = {s})"
            )));
        }
        prev = v;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilizingStatus {
    Pass,
    Fail,
    RhoUnavailable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilizingSetVerdict {
    /// `(k_min − λ_V)/λ̄_H`.
    pub budget: f64,
    pub rho_at_w: Option<f64>,
    pub status: StabilizingStatus,
}

/// Checks `ρ(W(z₀)) ≤ (k_min − λ_V)/λ̄_H`; without a model only the budget is reported.
pub fn stabilizing_set_check(
    w_z0: f64,
    k_min: f64,
    lambda_v: f64,
    s: &SpectralSummary,
    rho: Option<&dyn RhoModel>,
) -> Result<StabilizingSetVerdict> {
    let budget = (k_min - lambda_v) / s.lambda_max_h;
    let Some(rho) = rho else {
        return Ok(StabilizingSetVerdict {
            budget,
            rho_at_w: None,
            status: StabilizingStatus::RhoUnavailable,
        });
    };
    check_monotone(rho, w_z0.max(1.0))?;
    let value = rho.eval(w_z0);
    Ok(StabilizingSetVerdict {
        budget,
        rho_at_w: Some(value),
        status: if value <= budget {
            StabilizingStatus::Pass
        } else {
            StabilizingStatus::Fail
        },
    })
}

/// Everything `certify` reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub gains: ControllerGains,
    pub spectral: SpectralSummary,
    pub h_norm1: f64,
    pub k_min: f64,
    pub chi: ChiEstimates,
    pub gain_conditions: GainConditions,
    pub all_gains_pass: bool,
    pub w_z0: f64,
    pub envelope: EnvelopeCheck,
    pub exponential_fit: Option<ExpFit>,
    /// Window used by the exponential fit and `lyapunov_descent_fraction_decay`.
    pub decay_window: [f64; 2],
    /// Share of steps with `ΔV < 0` from `t₀ + transient_skip` to the end of the run.
    pub lyapunov_descent_fraction: Option<f64>,
    /// The same share restricted to the decay window.
    pub lyapunov_descent_fraction_decay: Option<f64>,
    pub p_initial: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub stabilizing_set: StabilizingSetVerdict,
    /// Length of the trajectory the report was computed from.
    pub horizon: f64,
}

/// Post-processing products alongside a report, for callers that need the traces.
#[derive(Debug, Clone)]
pub struct CertificateTraces {
    pub p: PFunctionTrace,
    pub v: Vec<f64>,
}

/// Builds the full certificate from an existing log.
pub fn certificate_from_log(
    scenario: &Scenario,
    log: &TrajectoryLog,
    analysis: &AnalysisConfig,
) -> Result<(CertificateReport, CertificateTraces)> {
    let h: InteractionMatrix = interaction_matrix(&scenario.topology);
    let spectral = spectral_summary(&h)?;
    let gains = scenario.gains;
    let model = scenario.model.as_ref();

    let signals = if log.len() >= 3 {
        disturbance_signals(model, log)?
    } else {
        return Err(Error::InsufficientData(format!(
            "certificate needs at least 3 logged samples, got {}",
            log.len()
        )));
    };
    let chi = match analysis.chi_mode {
        ChiMode::Trajectory => chi_estimates(&signals, analysis.chi_safety)?,
        ChiMode::BoxSampling => {
            let bounds = model.bounds().ok_or_else(|| {
                Error::validation("chi_mode box_sampling needs declared model bounds")
            })?;
            chi_box_sampling(
                model,
                bounds,
                analysis.box_samples,
                scenario.t_end,
                scenario.seed,
                analysis.chi_safety,
            )?
        }
    };
    let conditions = gain_conditions(&spectral, &gains, &chi)?;
    let k_min = k_min_value(&spectral, &gains);
    let h_norm1 = h.norm1();

    let t = log.times();
    let z = log.z_norms();
    let z0 = log.samples[0].errors.z();
    let w_z0 = w_value(z0.as_slice(), &spectral, gains.k4, chi.chi1, h_norm1);
    let envelope = envelope_check(&t, &z, w_z0, &spectral, gains.lambda_v, analysis.envelope_atol)?;

    let r1: Vec<Vec<f64>> = log.samples.iter().map(|s| s.errors.r1.clone()).collect();
    let p = p_function_trace(&t, &h, &r1, &signals.h_b, &signals.h_b_dot, &gains)?;
    let v = lyapunov_trace(log, &p, &h)?;

    let window = decay_window(&t, &z, analysis.transient_skip, analysis.floor_margin)?;
    let exponential_fit = exponential_fit(&t, &z, window).ok();
    let lyapunov_descent_fraction =
        descent_fraction(&t, &v, [t[0] + analysis.transient_skip, t[t.len() - 1]]).ok();
    let lyapunov_descent_fraction_decay = descent_fraction(&t, &v, window).ok();
    let rho = analysis.rho.as_ref().map(|r| r as &dyn RhoModel);
    let stabilizing_set = stabilizing_set_check(w_z0, k_min, gains.lambda_v, &spectral, rho)?;

    let report = CertificateReport {
        gains,
        spectral,
        h_norm1,
        k_min,
        chi,
        all_gains_pass: conditions.all_pass(),
        gain_conditions: conditions,
        w_z0,
        envelope,
        exponential_fit,
        decay_window: window,
        lyapunov_descent_fraction,
        lyapunov_descent_fraction_decay,
        p_initial: p.p[0],
        p_min: p.min(),
        p_max: p.max(),
        stabilizing_set,
        horizon: t[t.len() - 1] - t[0],
    };
    Ok((report, CertificateTraces { p, v }))
}

/// Runs a noise-free trajectory of length `analysis.certify_horizon` (capped at `t_end`) and
/// certifies the configured gains on it.
pub fn certify(config: &ScenarioConfig) -> Result<CertificateReport> {
    let mut scenario = config.build()?;
    scenario.noise = NoiseSigma::default();
    scenario.t_end = config.analysis.certify_horizon.min(config.t_end);
    let log = simulate(&scenario)?;
    Ok(certificate_from_log(&scenario, &log, &config.analysis)?.0)
}
