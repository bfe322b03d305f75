//! Library results against independent reference computations.

mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;

use rise_flock::analysis::{exponential_fit, k_min_value, p_function_trace, p_initial};
use rise_flock::controller::ControllerGains;
use rise_flock::graph::{
    every_component_pinned, interaction_matrix, spectral_summary, symmetric_eigenvalues, Edge, GraphTopology,
};
use rise_flock::io::{write_trajectory_csv, TrajectoryTable};
use rise_flock::sim::simulate;
use rise_flock::config::ScenarioConfig;

use common::*;

/// Cyclic Jacobi rotations; returns ascending eigenvalues.
fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    d.sort_by(f64::total_cmp);
    d
}

#[test]
fn eigenvalues_match_jacobi() {
    let mut rng = rng(11);
    for agents in 1..=10 {
        let topo = random_topology(&mut rng, agents, 2, 0.4);
        let h = oracle_h(&topo);
        let lib = symmetric_eigenvalues(&h).unwrap();
        let reference = jacobi_eigenvalues(&h);
        assert!(max_abs_diff(&lib, &reference) < 1e-10, "{lib:?} vs {reference:?}");

        let s = spectral_summary(&interaction_matrix(&topo)).unwrap();
        assert!((s.lambda_min_h - reference[0]).abs() < 1e-10);
        assert!((s.lambda_max_h - reference[reference.len() - 1]).abs() < 1e-10);
        let lambda_max_i_minus_h2 = reference.iter().map(|l| 1.0 - l * l).fold(f64::NEG_INFINITY, f64::max);
        assert!((s.lambda_max_i_minus_h2 - lambda_max_i_minus_h2).abs() < 1e-9);
    }
}

#[test]
fn cycle_of_eight_has_closed_form_spectrum_without_pinning() {
    // Laplacian of C₈: 2 − 2cos(2πk/8).
    let topo = GraphTopology::cycle(8, 1, vec![false; 8]).unwrap();
    let lib = symmetric_eigenvalues(&interaction_matrix(&topo).base).unwrap();
    let mut exact: Vec<f64> = (0..8).map(|k| 2.0 - 2.0 * (std::f64::consts::PI * k as f64 / 4.0).cos()).collect();
    exact.sort_by(f64::total_cmp);
    assert!(max_abs_diff(&lib, &exact) < 1e-12);
}

#[test]
fn convolution_matches_analytic_integral() {
    // With H = 1, r₁ = 1, h_B = 0 and ḣ_B = sin t: conv₁(t) = ∫₀ᵗ e^{−λ(t−s)} sin s ds.
    let topo = GraphTopology::new(1, 1, vec![], vec![true]).unwrap();
    let h = interaction_matrix(&topo);
    let gains = ControllerGains { k1: 1.0, k2: 10.0, k3: 1.0, k4: 0.0, lambda_p: 3.0, lambda_v: 1.0 };
    let lam = gains.lambda_p;
    let exact = |t: f64| (lam * t.sin() - t.cos() + (-lam * t).exp()) / (1.0 + lam * lam);
    let err = |steps: usize| {
        let dt = 4.0 / steps as f64;
        let t: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        let ones = vec![vec![1.0]; t.len()];
        let zeros = vec![vec![0.0]; t.len()];
        let hbd: Vec<Vec<f64>> = t.iter().map(|s| vec![s.sin()]).collect();
        let p = p_function_trace(&t, &h, &ones, &zeros, &hbd, &gains).unwrap();
        t.iter().zip(&p.conv1).map(|(&s, c)| (c - exact(s)).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(400), err(800));
    assert!(e1 < 1e-4, "{e1}");
    let ratio = e1 / e2;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn k_min_has_closed_form() {
    // k_min = min{k₁ − ½, k₂ − ½, k₃λ̲_H − …} is positive for the benchmark gains.
    let topo = GraphTopology::cycle(8, 3, (0..8).map(|i| i % 2 == 0).collect()).unwrap();
    let s = spectral_summary(&interaction_matrix(&topo)).unwrap();
    let k = k_min_value(&s, &benchmark_gains());
    assert!(k > 0.0 && k <= 9.5 + 1e-12, "{k}");
}

#[test]
fn exponential_fit_recovers_rate() {
    let t: Vec<f64> = (0..200).map(|k| k as f64 * 0.01).collect();
    let z: Vec<f64> = t.iter().map(|s| 3.0 * (-2.5 * s).exp()).collect();
    let fit = exponential_fit(&t, &z, [0.0, 2.0]).unwrap();
    assert!((fit.rate + 2.5).abs() < 1e-10 && (fit.r_squared - 1.0).abs() < 1e-12);
}

#[test]
fn csv_reads_back_bit_exact() {
    let cfg = ScenarioConfig::benchmark().with_overrides(&["t_end=0.2"]).unwrap();
    let log = simulate(&cfg.build().unwrap()).unwrap();
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, &log, None).unwrap();
    let table = TrajectoryTable::read(buf.as_slice()).unwrap();
    assert_eq!((table.agents, table.dim, table.rows.len()), (8, 3, log.len()));
    let e3 = table.vectors("e3_").unwrap();
    for (row, s) in e3.iter().zip(&log.samples) {
        assert_eq!(row.as_slice(), &s.errors.e[6..9]);
    }
    assert!(table.column("P").unwrap().iter().all(|p| p.is_nan()));
}

fn arb_topology() -> impl Strategy<Value = GraphTopology> {
    (1usize..=7).prop_flat_map(|agents| {
        let pairs = agents * (agents - 1) / 2;
        (
            Just(agents),
            prop::collection::vec(prop::option::of(0.1f64..3.0), pairs),
            prop::collection::vec(any::<bool>(), agents),
        )
            .prop_map(|(agents, weights, pinning)| {
                let mut k = 0;
                let mut edges = Vec::new();
                for a in 0..agents {
                    for b in a + 1..agents {
                        if let Some(w) = weights[k] {
                            edges.push(Edge::new(a, b, w));
                        }
                        k += 1;
                    }
                }
                GraphTopology::new(agents, 2, edges, pinning).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn positive_definite_iff_every_component_pinned(topo in arb_topology()) {
        let s = spectral_summary(&interaction_matrix(&topo)).unwrap();
        prop_assert_eq!(s.lambda_min_h > 1e-9, every_component_pinned(&topo));
        prop_assert!(s.lambda_min_h >= -1e-9);
    }

    #[test]
    fn kronecker_repeats_base_spectrum(topo in arb_topology()) {
        let im = interaction_matrix(&topo);
        let full = symmetric_eigenvalues(&im.h).unwrap();
        let base = symmetric_eigenvalues(&im.base).unwrap();
        let repeated: Vec<f64> = base.iter().flat_map(|&l| [l, l]).collect();
        prop_assert!(max_abs_diff(&full, &repeated) < 1e-9);
        prop_assert!(max_abs_diff(im.h.as_slice(), oracle_h(&topo).as_slice()) == 0.0);
    }

    #[test]
    fn h_norm1_bounds_spectrum(topo in arb_topology()) {
        let im = interaction_matrix(&topo);
        let s = spectral_summary(&im).unwrap();
        prop_assert!(s.lambda_max_h <= im.norm1() + 1e-9);
    }

    #[test]
    fn p_starts_at_closed_form(r1 in prop::collection::vec(-5.0f64..5.0, 6), hb in prop::collection::vec(-5.0f64..5.0, 6), k4 in 0.0f64..100.0) {
        let topo = GraphTopology::new(3, 2, vec![Edge::unit(0, 1), Edge::unit(1, 2)], vec![true, false, false]).unwrap();
        let h = interaction_matrix(&topo);
        let gains = ControllerGains { k4, ..benchmark_gains() };
        let t = [0.0, 0.01, 0.02];
        let r = vec![r1.clone(); 3];
        let b = vec![hb.clone(); 3];
        let p = p_function_trace(&t, &h, &r, &b, &b, &gains).unwrap();
        prop_assert_eq!(p.p[0].to_bits(), p_initial(&h, &r1, &hb, k4).to_bits());
        prop_assert_eq!(p.conv1[0], 0.0);
        prop_assert_eq!(p.conv2[0], 0.0);
    }

    #[test]
    fn csv_floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let text = format!("t,q0_x,e1_x\n{x},{x},{x}\n");
        let table = TrajectoryTable::read(text.as_bytes()).unwrap();
        prop_assert_eq!(table.rows[0][0].to_bits(), x.to_bits());
    }
}
