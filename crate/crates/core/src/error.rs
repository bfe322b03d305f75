use thiserror::Error;

use crate::sim::TrajectoryLog;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: topology, config, dimensions, grids.
    #[error("validation error: {0}")]
    Validation(String),

    /// A numerical routine failed or produced a non-finite value.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// `g_i g_iᵀ` is too badly conditioned to invert.
    #[error("input gain of agent {} is singular at t = {t} (condition number {condition:.3e})", .agent + 1)]
    Singular { agent: usize, t: f64, condition: f64 },

    /// The closed loop produced a non-finite state. Carries the samples logged up to that point.
    /// `agent` is `None` when the target itself blew up.
    #[error("simulation diverged at t = {t}: {} has a non-finite state", describe_agent(*.agent))]
    Divergence {
        agent: Option<usize>,
        t: f64,
        partial: Box<TrajectoryLog>,
    },

    /// A trace was too short for the requested post-processing.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn describe_agent(agent: Option<usize>) -> String {
    match agent {
        Some(i) => format!("agent {}", i + 1),
        None => "the target".to_string(),
    }
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
