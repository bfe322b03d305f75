//! Omniscient post-processing of closed-loop runs: ensemble errors, disturbance signals,
//! the P-function, the Lyapunov function, and the gain certificate.

mod certificate;
mod disturbance;
mod errors;
mod lyapunov;
mod pfunction;

pub use certificate::{
    certificate_from_log, certify, decay_window, envelope_check, exponential_fit, gain_conditions,
    k_min_value, stabilizing_set_check, w_value, CertificateReport, CertificateTraces, EnvelopeCheck,
    ExpFit, GainConditions, GainVerdict, RhoModel, RhoPolynomial, StabilizingSetVerdict,
    StabilizingStatus,
};
pub use disturbance::{
    chi_box_sampling, chi_estimates, disturbance_signals, fd_derivative, h_b_trace, h_tilde_trace,
    ChiEstimates, ChiMode, DisturbanceSignals, BOX_STREAM,
};
pub use errors::{ensemble_errors, EnsembleErrorState, Snapshot};
pub use lyapunov::{descent_fraction, lyapunov_trace};
pub use pfunction::{p_function_from_log, p_function_trace, p_initial, uniform_step, PFunctionTrace};
