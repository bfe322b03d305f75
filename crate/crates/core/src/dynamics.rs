//! Agent and target dynamics as seen by the simulator:
//! `q̈ᵢ = fᵢ(qᵢ, q̇ᵢ, t) + gᵢ(qᵢ, q̇ᵢ, t)·uᵢ + dᵢ(t)` and `q̈₀ = f₀(q₀, q̇₀, t)`.
//!
//! The controller never calls into a model except through `gᵢ⁺`, which it is allowed to know.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::symmetric_eigenvalues;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
}

impl AgentState {
    pub fn new(q: DVector<f64>, qdot: DVector<f64>) -> Self {
        Self { q, qdot }
    }

    pub fn at_rest(q: DVector<f64>) -> Self {
        let n = q.len();
        Self {
            q,
            qdot: DVector::zeros(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    pub q0: DVector<f64>,
    pub q0dot: DVector<f64>,
}

impl TargetState {
    pub fn new(q0: DVector<f64>, q0dot: DVector<f64>) -> Self {
        Self { q0, q0dot }
    }
}

/// Declared bounds on disturbances and the target trajectory. All entries must be positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// Per-agent `d̄ᵢ`.
    pub d_bar: Vec<f64>,
    pub ddot_bar: Vec<f64>,
    pub dddot_bar: Vec<f64>,
    pub q0_bar: f64,
    pub q0dot_bar: f64,
    pub q0ddot_bar: f64,
    pub q0dddot_bar: f64,
}

impl Bounds {
    pub fn validate(&self, agents: usize) -> Result<()> {
        for (name, v) in [
            ("d_bar", &self.d_bar),
            ("ddot_bar", &self.ddot_bar),
            ("dddot_bar", &self.dddot_bar),
        ] {
            if v.len() != agents {
                return Err(Error::validation(format!(
                    "bounds.{name} has {} entries, expected {agents}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::validation(format!("bounds.{name} must be strictly positive")));
            }
        }
        for (name, x) in [
            ("q0_bar", self.q0_bar),
            ("q0dot_bar", self.q0dot_bar),
            ("q0ddot_bar", self.q0ddot_bar),
            ("q0dddot_bar", self.q0dddot_bar),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::validation(format!("bounds.{name} must be strictly positive")));
            }
        }
        Ok(())
    }
}

/// The functions `fᵢ, gᵢ, dᵢ, f₀` of a multi-agent scenario.
///
/// Implementations must be pure: the same arguments always give bit-identical results.
pub trait DynamicsModel: Send + Sync {
    fn agent_count(&self) -> usize;

    /// Position dimension `n`.
    fn state_dim(&self) -> usize;

    /// Input dimension `mᵢ` of agent `i`.
    fn input_dim(&self, agent: usize) -> usize;

    /// `fᵢ(q, q̇, t)`.
    fn drift(&self, agent: usize, q: &DVector<f64>, qdot: &DVector<f64>, t: f64) -> DVector<f64>;

    /// `gᵢ(q, q̇, t)`, an `n × mᵢ` matrix with full row rank.
    fn input_gain(&self, agent: usize, q: &DVector<f64>, qdot: &DVector<f64>, t: f64)
        -> DMatrix<f64>;

    /// `dᵢ(t)`.
    fn disturbance(&self, agent: usize, t: f64) -> DVector<f64>;

    /// `f₀(q₀, q̇₀, t)`.
    fn target_drift(&self, q0: &DVector<f64>, q0dot: &DVector<f64>, t: f64) -> DVector<f64>;

    fn bounds(&self) -> Option<&Bounds> {
        None
    }
}

fn ensure_finite(v: &DVector<f64>, what: impl FnOnce() -> String) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("{} is not finite", what())))
    }
}

/// `fᵢ + gᵢ·u + dᵢ`.
pub fn agent_acceleration(
    model: &dyn DynamicsModel,
    agent: usize,
    state: &AgentState,
    u: &DVector<f64>,
    t: f64,
) -> Result<DVector<f64>> {
    let n = model.state_dim();
    if agent >= model.agent_count() {
        return Err(Error::validation(format!(
            "agent index {agent} out of range for {} agents",
            model.agent_count()
        )));
    }
    if state.q.len() != n || state.qdot.len() != n {
        return Err(Error::validation(format!(
            "agent {agent} state has dimension {}/{}, expected {n}",
            state.q.len(),
            state.qdot.len()
        )));
    }
    let m = model.input_dim(agent);
    if u.len() != m {
        return Err(Error::validation(format!(
            "agent {agent} input has dimension {}, expected {m}",
            u.len()
        )));
    }
    let g = model.input_gain(agent, &state.q, &state.qdot, t);
    let acc = model.drift(agent, &state.q, &state.qdot, t) + g * u + model.disturbance(agent, t);
    ensure_finite(&acc, || format!("acceleration of agent {agent} at t = {t}"))?;
    Ok(acc)
}

/// `f₀(q₀, q̇₀, t)`.
pub fn target_acceleration(
    model: &dyn DynamicsModel,
    state: &TargetState,
    t: f64,
) -> Result<DVector<f64>> {
    let n = model.state_dim();
    if state.q0.len() != n || state.q0dot.len() != n {
        return Err(Error::validation(format!(
            "target state has dimension {}/{}, expected {n}",
            state.q0.len(),
            state.q0dot.len()
        )));
    }
    let acc = model.target_drift(&state.q0, &state.q0dot, t);
    ensure_finite(&acc, || format!("target acceleration at t = {t}"))?;
    Ok(acc)
}

/// Condition numbers of `g gᵀ` above this are treated as singular.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Right Moore-Penrose inverse `gᵀ(ggᵀ)⁻¹` of a full-row-rank matrix.
pub fn right_pseudo_inverse(g: &DMatrix<f64>, agent: usize, t: f64) -> Result<DMatrix<f64>> {
    let gram = g * g.transpose();
    let eig = symmetric_eigenvalues(&gram)?;
    let (lo, hi) = (eig[0], eig[eig.len() - 1]);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_GRAM_CONDITION) {
        return Err(Error::Singular {
            agent,
            t,
            condition,
        });
    }
    let inv = gram.try_inverse().ok_or(Error::Singular {
        agent,
        t,
        condition,
    })?;
    Ok(g.transpose() * inv)
}

/// `gᵢ⁺` at the given state and time.
pub fn g_pinv(
    model: &dyn DynamicsModel,
    agent: usize,
    state: &AgentState,
    t: f64,
) -> Result<DMatrix<f64>> {
    let g = model.input_gain(agent, &state.q, &state.qdot, t);
    right_pseudo_inverse(&g, agent, t)
}

/// Coefficients `c_{i,1..12}` of the benchmark model, one row per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScenarioParams {
    pub c: Vec<[f64; 12]>,
}

impl ScenarioParams {
    /// Draws every coefficient from `U(−0.5, 0.5)`.
    pub fn sample<R: Rng + ?Sized>(agents: usize, rng: &mut R) -> Self {
        let c = (0..agents)
            .map(|_| std::array::from_fn(|_| rng.random_range(-0.5..0.5)))
            .collect();
        Self { c }
    }
}

/// Heterogeneous three-dimensional benchmark.
///
/// Per agent, with `(x, y, z) = q` and coefficients `c₁…c₁₂`:
///
/// ```text
/// f = ( c₁(y−z) + c₂ tanh(ẋ t),  c₃(z−x) + c₄ tanh(ẏ t),  c₅(x−y) + c₆ tanh(ż t) )
/// g = I₃ − diag( c₇ cos t,  c₈ sin t,  c₉ cos t sin t )
/// d = ( c₁₀ cos t,  c₁₁ sin t,  c₁₂ cos t sin t )
/// ```
///
/// and for the target
///
/// ```text
/// f₀ = ( sin x₀ − cos(y₀ẋ₀),  cos(z₀ẏ₀) − sin x₀,  −sin(y₀ż₀) − sin z₀ )
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkModel {
    params: ScenarioParams,
    bounds: Option<Bounds>,
}

impl BenchmarkModel {
    pub fn new(params: ScenarioParams) -> Self {
        Self {
            params,
            bounds: None,
        }
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn params(&self) -> &ScenarioParams {
        &self.params
    }
}

impl DynamicsModel for BenchmarkModel {
    fn agent_count(&self) -> usize {
        self.params.c.len()
    }

    fn state_dim(&self) -> usize {
        3
    }

    fn input_dim(&self, _agent: usize) -> usize {
        3
    }

    fn drift(&self, agent: usize, q: &DVector<f64>, qdot: &DVector<f64>, t: f64) -> DVector<f64> {
        let c = &self.params.c[agent];
        let (x, y, z) = (q[0], q[1], q[2]);
        DVector::from_column_slice(&[
            c[0] * (y - z) + c[1] * (qdot[0] * t).tanh(),
            c[2] * (z - x) + c[3] * (qdot[1] * t).tanh(),
            c[4] * (x - y) + c[5] * (qdot[2] * t).tanh(),
        ])
    }

    fn input_gain(
        &self,
        agent: usize,
        _q: &DVector<f64>,
        _qdot: &DVector<f64>,
        t: f64,
    ) -> DMatrix<f64> {
        let c = &self.params.c[agent];
        let (s, co) = t.sin_cos();
        DMatrix::from_diagonal(&DVector::from_column_slice(&[
            1.0 - c[6] * co,
            1.0 - c[7] * s,
            1.0 - c[8] * co * s,
        ]))
    }

    fn disturbance(&self, agent: usize, t: f64) -> DVector<f64> {
        let c = &self.params.c[agent];
        let (s, co) = t.sin_cos();
        DVector::from_column_slice(&[c[9] * co, c[10] * s, c[11] * co * s])
    }

    fn target_drift(&self, q0: &DVector<f64>, q0dot: &DVector<f64>, _t: f64) -> DVector<f64> {
        let (x, y, z) = (q0[0], q0[1], q0[2]);
        DVector::from_column_slice(&[
            x.sin() - (y * q0dot[0]).cos(),
            (z * q0dot[1]).cos() - x.sin(),
            -(y * q0dot[2]).sin() - z.sin(),
        ])
    }

    fn bounds(&self) -> Option<&Bounds> {
        self.bounds.as_ref()
    }
}

/// Parameter block of the `"custom"` scenario model.
///
/// Every agent shares `fᵢ = −stiffness·q − damping·q̇`, `gᵢ = input_gain·Iₙ` and
/// `dᵢ(t) = amplitude ⊙ sin(frequency·t + i·phase_step)`; the target follows
/// `f₀ = −target_stiffness·q₀ − target_damping·q̇₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearModelParams {
    #[serde(default)]
    pub stiffness: f64,
    #[serde(default)]
    pub damping: f64,
    #[serde(default = "one")]
    pub input_gain: f64,
    /// Per-axis disturbance amplitude; empty means no disturbance.
    #[serde(default)]
    pub disturbance_amplitude: Vec<f64>,
    #[serde(default = "one")]
    pub disturbance_frequency: f64,
    #[serde(default)]
    pub phase_step: f64,
    #[serde(default)]
    pub target_stiffness: f64,
    #[serde(default)]
    pub target_damping: f64,
    #[serde(default)]
    pub bounds: Option<Bounds>,
}

fn one() -> f64 {
    1.0
}

impl Default for LinearModelParams {
    fn default() -> Self {
        Self {
            stiffness: 0.0,
            damping: 0.0,
            input_gain: 1.0,
            disturbance_amplitude: Vec::new(),
            disturbance_frequency: 1.0,
            phase_step: 0.0,
            target_stiffness: 0.0,
            target_damping: 0.0,
            bounds: None,
        }
    }
}

/// Homogeneous linear agents; see [`LinearModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    agents: usize,
    dim: usize,
    params: LinearModelParams,
}

impl LinearModel {
    pub fn new(agents: usize, dim: usize, params: LinearModelParams) -> Result<Self> {
        if !params.disturbance_amplitude.is_empty() && params.disturbance_amplitude.len() != dim {
            return Err(Error::validation(format!(
                "model_params.disturbance_amplitude has {} entries, expected n = {dim}",
                params.disturbance_amplitude.len()
            )));
        }
        if !(params.input_gain.is_finite() && params.input_gain != 0.0) {
            return Err(Error::validation("model_params.input_gain must be finite and nonzero"));
        }
        if let Some(b) = &params.bounds {
            b.validate(agents)?;
        }
        Ok(Self {
            agents,
            dim,
            params,
        })
    }

    /// `f = 0`, `g = I`, `d = 0`, `f₀ = 0`.
    pub fn free(agents: usize, dim: usize) -> Self {
        Self {
            agents,
            dim,
            params: LinearModelParams::default(),
        }
    }
}

impl DynamicsModel for LinearModel {
    fn agent_count(&self) -> usize {
        self.agents
    }

    fn state_dim(&self) -> usize {
        self.dim
    }

    fn input_dim(&self, _agent: usize) -> usize {
        self.dim
    }

    fn drift(&self, _agent: usize, q: &DVector<f64>, qdot: &DVector<f64>, _t: f64) -> DVector<f64> {
        -(q * self.params.stiffness) - qdot * self.params.damping
    }

    fn input_gain(
        &self,
        _agent: usize,
        _q: &DVector<f64>,
        _qdot: &DVector<f64>,
        _t: f64,
    ) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim) * self.params.input_gain
    }

    fn disturbance(&self, agent: usize, t: f64) -> DVector<f64> {
        let p = &self.params;
        if p.disturbance_amplitude.is_empty() {
            return DVector::zeros(self.dim);
        }
        let s = (p.disturbance_frequency * t + agent as f64 * p.phase_step).sin();
        DVector::from_iterator(self.dim, p.disturbance_amplitude.iter().map(|a| a * s))
    }

    fn target_drift(&self, q0: &DVector<f64>, q0dot: &DVector<f64>, _t: f64) -> DVector<f64> {
        -(q0 * self.params.target_stiffness) - q0dot * self.params.target_damping
    }

    fn bounds(&self) -> Option<&Bounds> {
        self.params.bounds.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn free_model_passes_input_through() {
        let m = LinearModel::free(1, 3);
        let s = AgentState::at_rest(v(&[4.0, 5.0, 6.0]));
        let a = agent_acceleration(&m, 0, &s, &v(&[1.0, 2.0, 3.0]), 0.7).unwrap();
        assert_eq!(a, v(&[1.0, 2.0, 3.0]));
    }

    #[test]
    fn zero_input_yields_disturbance() {
        let params = LinearModelParams {
            disturbance_amplitude: vec![0.3, -0.2],
            disturbance_frequency: 2.0,
            ..Default::default()
        };
        let m = LinearModel::new(2, 2, params).unwrap();
        let s = AgentState::at_rest(v(&[1.0, 1.0]));
        let t = 0.4;
        let a = agent_acceleration(&m, 1, &s, &DVector::zeros(2), t).unwrap();
        assert_eq!(a, m.disturbance(1, t));
    }

    #[test]
    fn dimension_mismatch_is_validation_error() {
        let m = LinearModel::free(1, 3);
        let s = AgentState::at_rest(v(&[0.0, 0.0, 0.0]));
        let err = agent_acceleration(&m, 0, &s, &v(&[1.0, 2.0]), 0.0).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn benchmark_agent_at_time_zero() {
        let mut c = [0.0; 12];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = 0.05 * (k as f64 + 1.0) - 0.3;
        }
        let m = BenchmarkModel::new(ScenarioParams { c: vec![c] });
        let s = AgentState::at_rest(v(&[1.0, -2.0, 0.5]));
        let u = v(&[0.2, -0.1, 0.4]);
        let a = agent_acceleration(&m, 0, &s, &u, 0.0).unwrap();
        // tanh terms vanish, sin(0) = 0, g(0) = I − diag(c₇, 0, 0), d(0) = (c₁₀, 0, 0).
        let expected = [
            c[0] * (-2.0 - 0.5) + (1.0 - c[6]) * 0.2 + c[9],
            c[2] * (0.5 - 1.0) - 0.1,
            c[4] * (1.0 + 2.0) + 0.4,
        ];
        for k in 0..3 {
            assert_abs_diff_eq!(a[k], expected[k], epsilon = 1e-15);
        }
    }

    #[test]
    fn benchmark_target_at_origin() {
        let m = BenchmarkModel::new(ScenarioParams { c: vec![[0.0; 12]] });
        let s = TargetState::new(DVector::zeros(3), v(&[1.0, -1.0, 0.5]));
        let a = target_acceleration(&m, &s, 0.0).unwrap();
        assert_eq!(a, v(&[-1.0, 1.0, 0.0]));
    }

    #[test]
    fn benchmark_target_is_bounded_on_a_box() {
        let m = BenchmarkModel::new(ScenarioParams { c: vec![[0.0; 12]] });
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut sup: f64 = 0.0;
        for _ in 0..1000 {
            let q0 = v(&[0.0; 3].map(|_| rng.random_range(-50.0..50.0)));
            let q0dot = v(&[0.0; 3].map(|_| rng.random_range(-5.0..5.0)));
            let a = target_acceleration(&m, &TargetState::new(q0, q0dot), 1.0).unwrap();
            sup = sup.max(a.amax());
        }
        assert!(sup.is_finite() && sup <= 2.0);
    }

    #[test]
    fn zero_target_drift() {
        let m = LinearModel::free(1, 2);
        let s = TargetState::new(v(&[3.0, 4.0]), v(&[1.0, 1.0]));
        assert_eq!(target_acceleration(&m, &s, 2.0).unwrap(), DVector::zeros(2));
    }

    #[test]
    fn pinv_of_identity_and_diagonal() {
        let eye = DMatrix::<f64>::identity(3, 3);
        assert_eq!(right_pseudo_inverse(&eye, 0, 0.0).unwrap(), eye);
        let d = DMatrix::from_diagonal(&v(&[2.0, 0.5, 1.0]));
        let p = right_pseudo_inverse(&d, 0, 0.0).unwrap();
        let expected = DMatrix::from_diagonal(&v(&[0.5, 2.0, 1.0]));
        assert_abs_diff_eq!(p, expected, epsilon = 1e-15);
    }

    #[test]
    fn pinv_of_wide_matrix() {
        let g = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let p = right_pseudo_inverse(&g, 0, 0.0).unwrap();
        assert_eq!(p.shape(), (3, 2));
        // Normal equations: the minimum-norm solution of g x = y is gᵀ y here.
        assert_abs_diff_eq!(p, g.transpose(), epsilon = 1e-15);
        assert_abs_diff_eq!(&g * &p, DMatrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn pinv_of_rank_deficient_matrix_is_singular() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let err = right_pseudo_inverse(&g, 5, 1.25).unwrap_err();
        match err {
            Error::Singular { agent, t, .. } => {
                assert_eq!(agent, 5);
                assert_eq!(t, 1.25);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn benchmark_pinv_identity_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = BenchmarkModel::new(ScenarioParams::sample(8, &mut rng));
        for k in 0..1000 {
            let i = k % 8;
            let s = AgentState::new(
                v(&[0.0; 3].map(|_| rng.random_range(-10.0..10.0))),
                v(&[0.0; 3].map(|_| rng.random_range(-10.0..10.0))),
            );
            let t = rng.random_range(0.0..100.0);
            let p = g_pinv(&m, i, &s, t).unwrap();
            let g = m.input_gain(i, &s.q, &s.qdot, t);
            assert_abs_diff_eq!(g * p, DMatrix::identity(3, 3), epsilon = 1e-10);
        }
    }

    #[test]
    fn benchmark_disturbance_norm_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = ScenarioParams::sample(8, &mut rng);
        assert!(params.c.iter().flatten().all(|c| c.abs() < 0.5));
        let m = BenchmarkModel::new(params);
        for k in 0..2000 {
            let t = k as f64 * 0.0137;
            for i in 0..8 {
                assert!(m.disturbance(i, t).norm() <= 3f64.sqrt() * 0.5);
            }
        }
    }

    #[test]
    fn acceleration_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = BenchmarkModel::new(ScenarioParams::sample(2, &mut rng));
        let s = AgentState::new(v(&[0.1, 0.2, 0.3]), v(&[-1.0, 0.5, 2.0]));
        let u = v(&[1.0, 2.0, 3.0]);
        let a = agent_acceleration(&m, 1, &s, &u, 3.3).unwrap();
        let b = agent_acceleration(&m, 1, &s, &u, 3.3).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
