//! Helpers shared by the integration tests. Oracles here avoid the library's own matrix code.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rise_flock::controller::{ControllerGains, ControllerMemory};
use rise_flock::dynamics::{AgentState, TargetState};
use rise_flock::graph::{Edge, GraphTopology};
use rise_flock::sim::SimState;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn benchmark_gains() -> ControllerGains {
    ControllerGains { k1: 10.0, k2: 10.0, k3: 25.0, k4: 50.0, lambda_p: 5.0, lambda_v: 1.0 }
}

/// Random weighted graph: each pair is linked with probability `p`, weights in `[0.5, 2)`.
pub fn random_topology<R: Rng>(rng: &mut R, agents: usize, dim: usize, p: f64) -> GraphTopology {
    let mut edges = Vec::new();
    for a in 0..agents {
        for b in a + 1..agents {
            if rng.random_bool(p) {
                edges.push(Edge::new(a, b, rng.random_range(0.5..2.0)));
            }
        }
    }
    let pinning = (0..agents).map(|_| rng.random_bool(0.5)).collect();
    GraphTopology::new(agents, dim, edges, pinning).unwrap()
}

/// `(L + B) ⊗ Iₙ` assembled entry by entry from the edge list.
pub fn oracle_h(topo: &GraphTopology) -> DMatrix<f64> {
    let (agents, n) = (topo.agent_count(), topo.state_dim());
    let mut base = DMatrix::zeros(agents, agents);
    for e in topo.edges() {
        base[(e.a, e.a)] += e.weight;
        base[(e.b, e.b)] += e.weight;
        base[(e.a, e.b)] -= e.weight;
        base[(e.b, e.a)] -= e.weight;
    }
    for i in 0..agents {
        if topo.is_pinned(i) {
            base[(i, i)] += 1.0;
        }
    }
    let mut h = DMatrix::zeros(agents * n, agents * n);
    for i in 0..agents {
        for j in 0..agents {
            for k in 0..n {
                h[(i * n + k, j * n + k)] = base[(i, j)];
            }
        }
    }
    h
}

pub fn oracle_b(topo: &GraphTopology) -> DMatrix<f64> {
    let n = topo.state_dim();
    DMatrix::from_fn(topo.agent_count() * n, topo.agent_count() * n, |r, c| {
        if r == c && topo.is_pinned(r / n) {
            1.0
        } else {
            0.0
        }
    })
}

pub fn uniform_vec<R: Rng>(rng: &mut R, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

/// Random positions, velocities and integrators in `[−scale, scale)`.
pub fn random_state<R: Rng>(rng: &mut R, topo: &GraphTopology, scale: f64) -> SimState {
    let n = topo.state_dim();
    let agents = (0..topo.agent_count())
        .map(|_| AgentState::new(uniform_vec(rng, n, scale), uniform_vec(rng, n, scale)))
        .collect();
    let nu_hat = (0..topo.agent_count()).map(|_| uniform_vec(rng, n, scale)).collect();
    SimState {
        t: rng.random_range(0.0..10.0),
        target: TargetState::new(uniform_vec(rng, n, scale), uniform_vec(rng, n, scale)),
        agents,
        memory: ControllerMemory { nu_hat },
    }
}

/// `e = 1 ⊗ q₀ − q` and `ė`, stacked agent-major.
pub fn stacked_errors(state: &SimState) -> (DVector<f64>, DVector<f64>) {
    let n = state.target.q0.len();
    let len = n * state.agents.len();
    let e = DVector::from_fn(len, |r, _| state.target.q0[r % n] - state.agents[r / n].q[r % n]);
    let ed = DVector::from_fn(len, |r, _| state.target.q0dot[r % n] - state.agents[r / n].qdot[r % n]);
    (e, ed)
}

/// `gᵀ(ggᵀ)⁻¹` through an explicit inverse.
pub fn oracle_pinv(g: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = g * g.transpose();
    g.transpose() * gram.try_inverse().expect("singular Gram matrix")
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn segment(v: &DVector<f64>, i: usize, n: usize) -> DVector<f64> {
    v.rows(i * n, n).into_owned()
}
