//! JSON scenario configuration (`"schema": 1`).
//!
//! ```json
//! {
//!   "schema": 1,
//!   "topology": { "N": 3, "n": 3, "edges": [[1, 2], [2, 3, 0.5]], "pinning": [1, 0, 0] },
//!   "model": "paper_sec6",
//!   "gains": { "k1": 10, "k2": 10, "k3": 25, "k4": 50, "lambda_P": 5, "lambda_V": 1 },
//!   "t_end": 30, "dt": 0.001, "log_stride": 10,
//!   "noise_sigma": { "position": 0.001, "velocity": 0.001 },
//!   "seed": 1,
//!   "target": { "q0": [0, 0, 0], "q0dot": [1, -1, 0.5] }
//! }
//! ```
//!
//! Edges use 1-based agent indices and default to weight 1. `model` is either
//! `"paper_sec6"` (the heterogeneous benchmark, optional `model_params.c` pins the
//! coefficient matrix) or `"custom"` (see [`LinearModelParams`]).

use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{ChiMode, RhoPolynomial};
use crate::controller::ControllerGains;
use crate::dynamics::{
    AgentState, BenchmarkModel, Bounds, DynamicsModel, LinearModel, LinearModelParams,
    ScenarioParams, TargetState,
};
use crate::error::{Error, Result};
use crate::graph::{Edge, GraphTopology};
use crate::sim::noise::{stream, INIT_STREAM, PARAMS_STREAM};
use crate::sim::{NoiseSigma, Scenario};

pub const SCHEMA_VERSION: u32 = 1;

const BENCHMARK_JSON: &str = include_str!("../configs/paper_sec6.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeSpec {
    Unit(usize, usize),
    Weighted(usize, usize, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    #[serde(rename = "N")]
    pub agents: usize,
    pub n: usize,
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
    pub pinning: Vec<u8>,
}

impl TopologyConfig {
    pub fn build(&self) -> Result<GraphTopology> {
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let (i, j, w) = match *e {
                    EdgeSpec::Unit(i, j) => (i, j, 1.0),
                    EdgeSpec::Weighted(i, j, w) => (i, j, w),
                };
                if i == 0 || j == 0 {
                    return Err(Error::validation(format!(
                        "topology.edges: ({i}, {j}) uses index 0; agents are numbered from 1"
                    )));
                }
                Ok(Edge::new(i - 1, j - 1, w))
            })
            .collect::<Result<Vec<_>>>()?;
        let pinning = self
            .pinning
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::validation(format!(
                    "topology.pinning entries must be 0 or 1, got {other}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        GraphTopology::new(self.agents, self.n, edges, pinning)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "paper_sec6")]
    Benchmark,
    #[serde(rename = "custom")]
    Custom,
}

/// `model_params` block for `"paper_sec6"`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkParams {
    /// `N × 12` coefficients; sampled from the seed when absent.
    #[serde(default)]
    pub c: Option<Vec<[f64; 12]>>,
    #[serde(default)]
    pub bounds: Option<Bounds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub q0: Vec<f64>,
    pub q0dot: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentInit {
    pub q: Vec<f64>,
    #[serde(default)]
    pub qdot: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub chi_safety: f64,
    pub chi_mode: ChiMode,
    pub box_samples: usize,
    pub rms_window: [f64; 2],
    pub convergence_threshold: f64,
    /// Convergence deadline used by sweeps.
    pub convergence_deadline: f64,
    pub envelope_atol: f64,
    /// Samples before this time are ignored by the descent and decay-rate checks.
    pub transient_skip: f64,
    /// The decay window ends once `‖z‖` falls to this multiple of its final chatter level.
    pub floor_margin: f64,
    /// Length of the noise-free run used by `certify`.
    pub certify_horizon: f64,
    /// Optional polynomial `ρ(s) = Σ cₖ sᵏ` for the stabilizing-set check.
    pub rho: Option<RhoPolynomial>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            chi_safety: 1.5,
            chi_mode: ChiMode::Trajectory,
            box_samples: 100_000,
            rms_window: [0.0, 2.5],
            convergence_threshold: 0.05,
            convergence_deadline: 3.0,
            envelope_atol: 1e-6,
            transient_skip: 0.1,
            floor_margin: 2.0,
            certify_horizon: 5.0,
            rho: None,
        }
    }
}

fn default_stride() -> usize {
    1
}

fn default_range() -> [f64; 2] {
    [-10.0, 10.0]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    pub topology: TopologyConfig,
    pub model: ModelKind,
    #[serde(default)]
    pub model_params: Option<Value>,
    pub gains: ControllerGains,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub log_stride: usize,
    #[serde(default)]
    pub noise_sigma: NoiseSigma,
    #[serde(default)]
    pub seed: u64,
    /// Each coordinate of each agent's initial position is drawn from `U(lo, hi)`.
    #[serde(default = "default_range")]
    pub init_position_range: [f64; 2],
    /// Explicit initial agent states; overrides `init_position_range`.
    #[serde(default)]
    pub initial_agents: Option<Vec<AgentInit>>,
    pub target: TargetConfig,
    #[serde(default = "yes")]
    pub control_enabled: bool,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

impl ScenarioConfig {
    /// The bundled eight-agent cycle benchmark.
    pub fn benchmark() -> Self {
        Self::from_json_str(BENCHMARK_JSON).expect("bundled scenario parses")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)
            .map_err(|e| Error::validation(format!("invalid scenario config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies `key.path=value` overrides. Every key must already exist in the
    /// (default-filled) config. Values are parsed as JSON, falling back to a string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut root = serde_json::to_value(self)?;
        for ov in overrides {
            let ov = ov.as_ref();
            let (key, raw) = ov
                .split_once('=')
                .ok_or_else(|| Error::validation(format!("override '{ov}' is not key=value")))?;
            let value: Value =
                serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut node = &mut root;
            for part in key.split('.') {
                node = node
                    .as_object_mut()
                    .and_then(|o| o.get_mut(part))
                    .ok_or_else(|| Error::validation(format!("override key '{key}' does not exist")))?;
            }
            *node = value;
        }
        let cfg: Self = serde_json::from_value(root)
            .map_err(|e| Error::validation(format!("invalid config after overrides: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::validation(format!(
                "schema must be {SCHEMA_VERSION}, got {}",
                self.schema
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::validation(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::validation(format!(
                "t_end must be at least dt = {}, got {}",
                self.dt, self.t_end
            )));
        }
        if self.log_stride == 0 {
            return Err(Error::validation("log_stride must be at least 1"));
        }
        let NoiseSigma { position, velocity } = self.noise_sigma;
        if !(position >= 0.0 && velocity >= 0.0 && position.is_finite() && velocity.is_finite()) {
            return Err(Error::validation("noise_sigma entries must be non-negative"));
        }
        let [lo, hi] = self.init_position_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::validation("init_position_range must satisfy lo < hi"));
        }
        self.gains.validate()?;
        let n = self.topology.n;
        if self.target.q0.len() != n || self.target.q0dot.len() != n {
            return Err(Error::validation(format!(
                "target.q0 and target.q0dot must have n = {n} entries"
            )));
        }
        let a = &self.analysis;
        if !(a.chi_safety >= 1.0) {
            return Err(Error::validation("analysis.chi_safety must be at least 1"));
        }
        if !(a.convergence_threshold > 0.0) {
            return Err(Error::validation("analysis.convergence_threshold must be positive"));
        }
        if !(a.floor_margin >= 1.0) {
            return Err(Error::validation("analysis.floor_margin must be at least 1"));
        }
        if !(a.certify_horizon > 0.0) {
            return Err(Error::validation("analysis.certify_horizon must be positive"));
        }
        self.topology.build()?;
        Ok(())
    }

    pub fn build_model(&self) -> Result<Arc<dyn DynamicsModel>> {
        let agents = self.topology.agents;
        let n = self.topology.n;
        match self.model {
            ModelKind::Benchmark => {
                if n != 3 {
                    return Err(Error::validation(format!(
                        "model paper_sec6 requires n = 3, got {n}"
                    )));
                }
                let params: BenchmarkParams = match &self.model_params {
                    None | Some(Value::Null) => BenchmarkParams::default(),
                    Some(v) => serde_json::from_value(v.clone())
                        .map_err(|e| Error::validation(format!("model_params: {e}")))?,
                };
                let coeffs = match params.c {
                    Some(c) if c.len() != agents => {
                        return Err(Error::validation(format!(
                            "model_params.c has {} rows, expected N = {agents}",
                            c.len()
                        )))
                    }
                    Some(c) => ScenarioParams { c },
                    None => ScenarioParams::sample(agents, &mut stream(self.seed, PARAMS_STREAM)),
                };
                let mut model = BenchmarkModel::new(coeffs);
                if let Some(b) = params.bounds {
                    b.validate(agents)?;
                    model = model.with_bounds(b);
                }
                Ok(Arc::new(model))
            }
            ModelKind::Custom => {
                let params: LinearModelParams = match &self.model_params {
                    None | Some(Value::Null) => LinearModelParams::default(),
                    Some(v) => serde_json::from_value(v.clone())
                        .map_err(|e| Error::validation(format!("model_params: {e}")))?,
                };
                Ok(Arc::new(LinearModel::new(agents, n, params)?))
            }
        }
    }

    fn initial_agents(&self) -> Result<Vec<AgentState>> {
        let agents = self.topology.agents;
        let n = self.topology.n;
        if let Some(init) = &self.initial_agents {
            if init.len() != agents {
                return Err(Error::validation(format!(
                    "initial_agents has {} entries, expected N = {agents}",
                    init.len()
                )));
            }
            return init
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let qdot = a.qdot.clone().unwrap_or_else(|| vec![0.0; n]);
                    if a.q.len() != n || qdot.len() != n {
                        return Err(Error::validation(format!(
                            "initial_agents[{i}] must have n = {n} entries"
                        )));
                    }
                    Ok(AgentState::new(
                        DVector::from_vec(a.q.clone()),
                        DVector::from_vec(qdot),
                    ))
                })
                .collect();
        }
        let [lo, hi] = self.init_position_range;
        let mut rng = stream(self.seed, INIT_STREAM);
        Ok((0..agents)
            .map(|_| AgentState::at_rest(DVector::from_fn(n, |_, _| rng.random_range(lo..hi))))
            .collect())
    }

    /// Resolves the model, initial conditions and topology into a runnable [`Scenario`].
    pub fn build(&self) -> Result<Scenario> {
        self.validate()?;
        Ok(Scenario {
            topology: self.topology.build()?,
            model: self.build_model()?,
            gains: self.gains,
            t_end: self.t_end,
            dt: self.dt,
            log_stride: self.log_stride,
            noise: self.noise_sigma,
            seed: self.seed,
            initial_agents: self.initial_agents()?,
            target: TargetState::new(
                DVector::from_vec(self.target.q0.clone()),
                DVector::from_vec(self.target.q0dot.clone()),
            ),
            control_enabled: self.control_enabled,
        })
    }
}
