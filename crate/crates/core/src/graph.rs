//! Communication topology: adjacency, Laplacian, pinning, and the interaction matrix
//! `H = (L + B) ⊗ Iₙ` together with the spectral extrema consumed by the gain conditions.
//!
//! Agent indices are 0-based in the Rust API. Scenario files use 1-based indices and are
//! converted on load.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

/// An undirected weighted link between two agents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(a: usize, b: usize, weight: f64) -> Self {
        Self { a, b, weight }
    }

    pub fn unit(a: usize, b: usize) -> Self {
        Self::new(a, b, 1.0)
    }
}

/// Static, weighted, undirected graph over `N` agents plus the pinning vector `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTopology {
    agents: usize,
    dim: usize,
    edges: Vec<Edge>,
    pinning: Vec<bool>,
}

impl GraphTopology {
    /// Validates and builds a topology.
    ///
    /// Rejects out-of-range endpoints, self-loops, non-positive or non-finite weights,
    /// repeated pairs, and a pinning vector whose length differs from `agents`.
    pub fn new(agents: usize, dim: usize, edges: Vec<Edge>, pinning: Vec<bool>) -> Result<Self> {
        if agents == 0 {
            return Err(Error::validation("topology.N must be at least 1"));
        }
        if dim == 0 {
            return Err(Error::validation("topology.n must be at least 1"));
        }
        if pinning.len() != agents {
            return Err(Error::validation(format!(
                "topology.pinning has {} entries, expected N = {agents}",
                pinning.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for e in &edges {
            if e.a >= agents || e.b >= agents {
                return Err(Error::validation(format!(
                    "edge ({}, {}) references an agent outside 1..={agents}",
                    e.a + 1,
                    e.b + 1
                )));
            }
            if e.a == e.b {
                return Err(Error::validation(format!("edge ({0}, {0}) is a self-loop", e.a + 1)));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::validation(format!(
                    "edge ({}, {}) has non-positive weight {}",
                    e.a + 1,
                    e.b + 1,
                    e.weight
                )));
            }
            if !seen.insert((e.a.min(e.b), e.a.max(e.b))) {
                return Err(Error::validation(format!(
                    "edge ({}, {}) is listed more than once",
                    e.a + 1,
                    e.b + 1
                )));
            }
        }
        Ok(Self {
            agents,
            dim,
            edges,
            pinning,
        })
    }

    /// Unit-weight cycle `1 - 2 - ... - N - 1`.
    pub fn cycle(agents: usize, dim: usize, pinning: Vec<bool>) -> Result<Self> {
        let edges = match agents {
            0 | 1 => Vec::new(),
            2 => vec![Edge::unit(0, 1)],
            _ => (0..agents).map(|i| Edge::unit(i, (i + 1) % agents)).collect(),
        };
        Self::new(agents, dim, edges, pinning)
    }

    pub fn agent_count(&self) -> usize {
        self.agents
    }

    /// State dimension `n` of each agent.
    pub fn state_dim(&self) -> usize {
        self.dim
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn pinning(&self) -> &[bool] {
        &self.pinning
    }

    pub fn is_pinned(&self, agent: usize) -> bool {
        self.pinning[agent]
    }

    /// Neighbors of `agent` with their link weights `a_ij`, sorted by index.
    pub fn neighbors(&self, agent: usize) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self
            .edges
            .iter()
            .filter_map(|e| {
                if e.a == agent {
                    Some((e.b, e.weight))
                } else if e.b == agent {
                    Some((e.a, e.weight))
                } else {
                    None
                }
            })
            .collect();
        out.sort_by_key(|&(j, _)| j);
        out
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.agents, self.agents);
        for e in &self.edges {
            a[(e.a, e.b)] = e.weight;
            a[(e.b, e.a)] = e.weight;
        }
        a
    }

    /// Pinning matrix `B = diag(b)`.
    pub fn pinning_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.agents,
            self.pinning.iter().map(|&b| if b { 1.0 } else { 0.0 }),
        ))
    }
}

/// `L = D − A` with `D = diag(A·1)`.
pub fn laplacian(topology: &GraphTopology) -> DMatrix<f64> {
    let a = topology.adjacency();
    let degrees = a.column_sum();
    DMatrix::from_diagonal(&degrees) - a
}

/// `H = (L+B) ⊗ Iₙ` and `𝓑 = B ⊗ Iₙ`, with the `N×N` factor kept for spectral work.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    pub h: DMatrix<f64>,
    pub b_kron: DMatrix<f64>,
    /// The `N×N` matrix `L + B`.
    pub base: DMatrix<f64>,
    pub dim: usize,
}

impl InteractionMatrix {
    /// Induced 1-norm (max absolute column sum) of `H`.
    pub fn norm1(&self) -> f64 {
        self.h
            .column_iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `H·x` for a stacked vector `x ∈ R^{nN}`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(x);
        (&self.h * v).as_slice().to_vec()
    }
}

pub fn interaction_matrix(topology: &GraphTopology) -> InteractionMatrix {
    let n = topology.state_dim();
    let eye = DMatrix::<f64>::identity(n, n);
    let b = topology.pinning_matrix();
    let base = laplacian(topology) + &b;
    InteractionMatrix {
        h: base.kronecker(&eye),
        b_kron: b.kronecker(&eye),
        base,
        dim: n,
    }
}

fn components(topology: &GraphTopology) -> Vec<usize> {
    let n = topology.agent_count();
    let mut adj = vec![Vec::new(); n];
    for e in topology.edges() {
        adj[e.a].push(e.b);
        adj[e.b].push(e.a);
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for root in 0..n {
        if label[root] != usize::MAX {
            continue;
        }
        label[root] = next;
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if label[j] == usize::MAX {
                    label[j] = next;
                    queue.push_back(j);
                }
            }
        }
        next += 1;
    }
    label
}

/// True iff the graph is connected and at least one agent is pinned.
pub fn check_pinned_connectivity(topology: &GraphTopology) -> bool {
    let label = components(topology);
    label.iter().all(|&c| c == 0) && topology.pinning().iter().any(|&b| b)
}

/// True iff every connected component contains a pinned agent, which is exactly when `L + B`
/// is positive definite. Implied by [`check_pinned_connectivity`] but weaker.
pub fn every_component_pinned(topology: &GraphTopology) -> bool {
    let label = components(topology);
    let count = label.iter().max().map_or(0, |m| m + 1);
    let mut pinned = vec![false; count];
    for (i, &c) in label.iter().enumerate() {
        pinned[c] |= topology.is_pinned(i);
    }
    pinned.iter().all(|&p| p)
}

/// Spectral extrema used by `k_min`, the gain conditions, and `W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralSummary {
    pub lambda_min_h: f64,
    pub lambda_max_h: f64,
    /// Extrema of `𝓑 − I`.
    pub lambda_min_b_minus_i: f64,
    pub lambda_max_b_minus_i: f64,
    /// Largest eigenvalue of `I − H²`.
    pub lambda_max_i_minus_h2: f64,
    /// Extrema of `Q = diag(I, H)`.
    pub lambda_min_q: f64,
    pub lambda_max_q: f64,
}

const EIGEN_EPS: f64 = 1e-14;
const EIGEN_MAX_ITER: usize = 10_000;

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let eig = SymmetricEigen::try_new(m.clone(), EIGEN_EPS, EIGEN_MAX_ITER).ok_or_else(|| {
        let diag_min = m.diagonal().min();
        let diag_max = m.diagonal().max();
        Error::Numerical(format!(
            "symmetric eigensolver did not converge on a {}x{} matrix (frobenius norm {:.3e}, diagonal range [{diag_min:.3e}, {diag_max:.3e}])",
            m.nrows(),
            m.ncols(),
            m.norm(),
        ))
    })?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Computes the spectral extrema from the `N×N` factor of `H`; the Kronecker product with
/// `Iₙ` only repeats each eigenvalue `n` times.
pub fn spectral_summary(h: &InteractionMatrix) -> Result<SpectralSummary> {
    let values = symmetric_eigenvalues(&h.base)?;
    let lambda_min_h = values[0];
    let lambda_max_h = values[values.len() - 1];

    // B − I is diagonal with entries b_i − 1 ∈ {−1, 0}.
    let diag = h.b_kron.diagonal();
    let lambda_min_b_minus_i = diag.min() - 1.0;
    let lambda_max_b_minus_i = diag.max() - 1.0;

    let lambda_max_i_minus_h2 = values
        .iter()
        .map(|l| 1.0 - l * l)
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(SpectralSummary {
        lambda_min_h,
        lambda_max_h,
        lambda_min_b_minus_i,
        lambda_max_b_minus_i,
        lambda_max_i_minus_h2,
        lambda_min_q: lambda_min_h.min(1.0),
        lambda_max_q: lambda_max_h.max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn laplacian_of_single_edge() {
        let g = GraphTopology::new(2, 1, vec![Edge::unit(0, 1)], vec![true, false]).unwrap();
        let l = laplacian(&g);
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn laplacian_of_isolated_agent() {
        let g = GraphTopology::new(1, 3, vec![], vec![true]).unwrap();
        assert_eq!(laplacian(&g), DMatrix::zeros(1, 1));
    }

    #[test]
    fn malformed_edges_rejected() {
        assert!(GraphTopology::new(2, 1, vec![Edge::unit(0, 2)], vec![true, true]).is_err());
        assert!(GraphTopology::new(2, 1, vec![Edge::unit(1, 1)], vec![true, true]).is_err());
        assert!(GraphTopology::new(2, 1, vec![Edge::new(0, 1, 0.0)], vec![true, true]).is_err());
        assert!(GraphTopology::new(2, 1, vec![Edge::new(0, 1, -1.0)], vec![true, true]).is_err());
        assert!(
            GraphTopology::new(2, 1, vec![Edge::unit(0, 1), Edge::unit(1, 0)], vec![true, true])
                .is_err()
        );
        assert!(GraphTopology::new(2, 1, vec![], vec![true]).is_err());
    }

    #[test]
    fn interaction_matrix_single_agent() {
        let g = GraphTopology::new(1, 3, vec![], vec![true]).unwrap();
        let h = interaction_matrix(&g);
        assert_eq!(h.h, DMatrix::identity(3, 3));
        let s = spectral_summary(&h).unwrap();
        assert_eq!(s.lambda_min_h, 1.0);
        assert_eq!(s.lambda_max_h, 1.0);
        assert_eq!(s.lambda_min_q, 1.0);
        assert_eq!(s.lambda_max_q, 1.0);
        assert_eq!(s.lambda_max_b_minus_i, 0.0);
        assert_eq!(s.lambda_min_b_minus_i, 0.0);
    }

    #[test]
    fn interaction_matrix_two_agents() {
        let g = GraphTopology::new(2, 1, vec![Edge::unit(0, 1)], vec![true, false]).unwrap();
        let h = interaction_matrix(&g);
        assert_eq!(h.h, DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 1.0]));
        let s = spectral_summary(&h).unwrap();
        // Characteristic polynomial λ² − 3λ + 1.
        assert_abs_diff_eq!(s.lambda_min_h, (3.0 - 5f64.sqrt()) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.lambda_max_h, (3.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-12);
        assert_eq!(s.lambda_min_b_minus_i, -1.0);
        assert_eq!(s.lambda_max_b_minus_i, 0.0);
        assert_abs_diff_eq!(s.lambda_min_q, s.lambda_min_h);
        assert_abs_diff_eq!(s.lambda_max_q, s.lambda_max_h);
    }

    #[test]
    fn pinned_connectivity_cases() {
        let ring =
            GraphTopology::cycle(8, 3, (0..8).map(|i| i % 2 == 0).collect()).unwrap();
        assert!(check_pinned_connectivity(&ring));
        let split = GraphTopology::new(2, 1, vec![], vec![true, true]).unwrap();
        assert!(!check_pinned_connectivity(&split));
        let path = GraphTopology::new(
            3,
            1,
            vec![Edge::unit(0, 1), Edge::unit(1, 2)],
            vec![false; 3],
        )
        .unwrap();
        assert!(!check_pinned_connectivity(&path));
        assert!(every_component_pinned(&split));
        assert!(!every_component_pinned(&path));
        let half = GraphTopology::new(3, 1, vec![Edge::unit(0, 1)], vec![true, false, false]).unwrap();
        assert!(!every_component_pinned(&half));
    }

    #[test]
    fn neighbors_are_symmetric() {
        let g = GraphTopology::cycle(4, 2, vec![true, false, false, false]).unwrap();
        assert_eq!(g.neighbors(0), vec![(1, 1.0), (3, 1.0)]);
        assert_eq!(g.neighbors(2), vec![(1, 1.0), (3, 1.0)]);
    }
}
