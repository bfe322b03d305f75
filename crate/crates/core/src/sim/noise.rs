//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the scenario seed and selected with
//! `set_stream`, so draws do not depend on evaluation order across agents or threads:
//!
//! | stream               | use                                     |
//! |----------------------|-----------------------------------------|
//! | `0`                  | initial agent positions                 |
//! | `1`                  | benchmark coefficients `c_{i,j}`        |
//! | `16 + 4i + channel`  | measurement noise of agent `i`          |
//!
//! with channel `0` neighbor positions, `1` neighbor velocities, `2` target position,
//! `3` target velocity.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::graph::GraphTopology;

pub const INIT_STREAM: u64 = 0;
pub const PARAMS_STREAM: u64 = 1;
const NOISE_STREAM_BASE: u64 = 16;
const CHANNELS: u64 = 4;

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Standard deviations of the additive Gaussian measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSigma {
    /// Metres.
    pub position: f64,
    /// Metres per second.
    pub velocity: f64,
}

impl NoiseSigma {
    pub fn is_zero(&self) -> bool {
        self.position == 0.0 && self.velocity == 0.0
    }
}

/// Noise added to one agent's measurements during one integration step.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentNoise {
    /// One entry per neighbor, in [`GraphTopology::neighbors`] order.
    pub neighbor_pos: Vec<DVector<f64>>,
    pub neighbor_vel: Vec<DVector<f64>>,
    pub target_pos: Option<DVector<f64>>,
    pub target_vel: Option<DVector<f64>>,
}

pub struct NoiseSource {
    sigma: NoiseSigma,
    dim: usize,
    degree: Vec<usize>,
    pinned: Vec<bool>,
    streams: Vec<[ChaCha8Rng; 4]>,
}

impl NoiseSource {
    pub fn new(topology: &GraphTopology, sigma: NoiseSigma, seed: u64) -> Self {
        let agents = topology.agent_count();
        let streams = (0..agents as u64)
            .map(|i| {
                std::array::from_fn(|c| stream(seed, NOISE_STREAM_BASE + CHANNELS * i + c as u64))
            })
            .collect();
        Self {
            sigma,
            dim: topology.state_dim(),
            degree: (0..agents).map(|i| topology.neighbors(i).len()).collect(),
            pinned: topology.pinning().to_vec(),
            streams,
        }
    }

    /// Draws the noise held for the next step, one entry per agent.
    pub fn draw(&mut self) -> Vec<AgentNoise> {
        let dim = self.dim;
        let sigma = self.sigma;
        self.streams
            .iter_mut()
            .enumerate()
            .map(|(i, [pos, vel, tpos, tvel])| {
                let gauss = |rng: &mut ChaCha8Rng, s: f64| {
                    DVector::from_fn(dim, |_, _| s * rng.sample::<f64, _>(StandardNormal))
                };
                let neighbor_pos = (0..self.degree[i]).map(|_| gauss(pos, sigma.position)).collect();
                let neighbor_vel = (0..self.degree[i]).map(|_| gauss(vel, sigma.velocity)).collect();
                let (target_pos, target_vel) = if self.pinned[i] {
                    (Some(gauss(tpos, sigma.position)), Some(gauss(tvel, sigma.velocity)))
                } else {
                    (None, None)
                };
                AgentNoise {
                    neighbor_pos,
                    neighbor_vel,
                    target_pos,
                    target_vel,
                }
            })
            .collect()
    }
}
