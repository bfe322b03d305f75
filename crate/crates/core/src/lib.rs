//! Decentralized RISE control of heterogeneous second-order agents tracking a moving target
//! over a pinned undirected graph, with a closed-loop simulator and numerical checks of the
//! stability certificate.
//!
//! The pieces, bottom up:
//!
//! - [`graph`]: topology, `H = (L+B)⊗Iₙ`, spectral extrema.
//! - [`dynamics`]: the `fᵢ, gᵢ, dᵢ, f₀` model interface and the bundled models.
//! - [`controller`]: the per-agent control law, fed only local measurements.
//! - [`sim`]: fixed-step RK4 closed loop, logs, metrics, seed sweeps.
//! - [`analysis`]: ensemble errors, `h_B`, χ, the P-function, `V`, and the certificate.
//! - [`config`], [`io`], [`plot`], [`cli`]: scenario files, CSV/JSON output, SVG figures, and
//!   the command-line front end.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod controller;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod io;
pub mod plot;
pub mod sim;

pub use error::{Error, Result};
