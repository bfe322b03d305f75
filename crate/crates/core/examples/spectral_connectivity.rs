//! How pinning placement shapes the spectrum of `H = (L+B)⊗Iₙ`.
//!
//! `H` is positive definite exactly when every connected component holds a pinned agent,
//! so a disconnected graph can still qualify.

use rise_flock::graph::{
    check_pinned_connectivity, every_component_pinned, interaction_matrix, spectral_summary, Edge,
    GraphTopology,
};

fn report(label: &str, topo: &GraphTopology) -> rise_flock::Result<()> {
    let s = spectral_summary(&interaction_matrix(topo))?;
    println!(
        "{label:<28} connected+pinned {:<5} every component pinned {:<5} λmin(H) {:.4}  λmax(H) {:.4}",
        check_pinned_connectivity(topo),
        every_component_pinned(topo),
        s.lambda_min_h,
        s.lambda_max_h
    );
    Ok(())
}

fn main() -> rise_flock::Result<()> {
    let alternate: Vec<bool> = (0..8).map(|i| i % 2 == 0).collect();
    report("cycle, every other pinned", &GraphTopology::cycle(8, 3, alternate)?)?;

    let mut one = vec![false; 8];
    one[0] = true;
    report("cycle, one pinned", &GraphTopology::cycle(8, 3, one.clone())?)?;
    report("cycle, none pinned", &GraphTopology::cycle(8, 3, vec![false; 8])?)?;

    let path: Vec<Edge> = (0..7).map(|i| Edge::unit(i, i + 1)).collect();
    report("path, end pinned", &GraphTopology::new(8, 3, path, one)?)?;

    let halves = vec![Edge::unit(0, 1), Edge::unit(1, 2), Edge::unit(3, 4), Edge::unit(4, 5)];
    let pins = vec![true, false, false, false, false, true];
    report("two pinned halves", &GraphTopology::new(6, 3, halves.clone(), pins)?)?;
    let pins = vec![true, false, false, false, false, false];
    report("two halves, one pinned", &GraphTopology::new(6, 3, halves, pins)?)?;
    Ok(())
}
