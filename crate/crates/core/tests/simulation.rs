//! Closed-loop simulation contracts.

use proptest::prelude::*;

use rise_flock::config::ScenarioConfig;
use rise_flock::sim::{run_scenario, seed_sweep, simulate, TrajectoryLog};
use rise_flock::Error;

fn bench(overrides: &[&str]) -> ScenarioConfig {
    ScenarioConfig::benchmark().with_overrides(overrides).unwrap()
}

fn final_e_norm(log: &TrajectoryLog) -> f64 {
    log.samples.last().unwrap().errors.e.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn same_seed_gives_identical_logs() {
    let cfg = bench(&["t_end=2"]);
    let a = simulate(&cfg.build().unwrap()).unwrap();
    let b = simulate(&cfg.build().unwrap()).unwrap();
    assert_eq!(a, b);
    let other = simulate(&bench(&["t_end=2", "seed=2"]).build().unwrap()).unwrap();
    assert_ne!(a.samples[1].q, other.samples[1].q);
}

#[test]
fn noise_enters_measurements_only() {
    let truth = |sigma: &str| {
        let cfg = bench(&[
            "t_end=2",
            "control_enabled=false",
            &format!("noise_sigma.position={sigma}"),
            &format!("noise_sigma.velocity={sigma}"),
        ]);
        simulate(&cfg.build().unwrap()).unwrap()
    };
    let (noisy, clean) = (truth("0.01"), truth("0"));
    for (a, b) in noisy.samples.iter().zip(&clean.samples) {
        assert_eq!((&a.q0, &a.q0dot, &a.q, &a.qdot), (&b.q0, &b.q0dot, &b.q, &b.qdot), "t = {}", a.t);
        assert!(a.u.iter().flatten().all(|&u| u == 0.0));
    }
    // The controllers still integrate the noisy measurements.
    let last = noisy.samples.len() - 1;
    assert_ne!(noisy.samples[last].nu_hat, clean.samples[last].nu_hat);
}

#[test]
fn halving_dt_leaves_the_transient_unchanged() {
    // Before sliding sets in the trajectory converges with dt.
    let run = |dt: &str| {
        let cfg = bench(&["t_end=0.5", &format!("dt={dt}"), "noise_sigma.position=0", "noise_sigma.velocity=0"]);
        final_e_norm(&simulate(&cfg.build().unwrap()).unwrap())
    };
    let (coarse, fine) = (run("0.001"), run("0.0005"));
    let rel = (coarse - fine).abs() / fine;
    assert!(rel < 1e-4, "relative change {rel:.3e}");
}

#[test]
fn chatter_floor_shrinks_with_dt() {
    // Once sliding, ‖e‖ sits on a floor set by the sampled signum; it vanishes as dt → 0.
    let run = |dt: &str| {
        let cfg = bench(&["t_end=5", &format!("dt={dt}"), "noise_sigma.position=0", "noise_sigma.velocity=0"]);
        final_e_norm(&simulate(&cfg.build().unwrap()).unwrap())
    };
    let (coarse, fine) = (run("0.001"), run("0.0005"));
    assert!(coarse < 1e-5 && fine < 0.5 * coarse, "{coarse:.3e} -> {fine:.3e}");
}

#[test]
fn matched_agents_stay_on_target() {
    let text = r#"{
        "schema": 1,
        "topology": { "N": 4, "n": 2, "edges": [[1, 2], [2, 3], [3, 4]], "pinning": [1, 0, 0, 1] },
        "model": "custom",
        "model_params": { "stiffness": 2.0, "damping": 0.5, "target_stiffness": 2.0, "target_damping": 0.5 },
        "gains": { "k1": 10, "k2": 10, "k3": 25, "k4": 50, "lambda_P": 5, "lambda_V": 1 },
        "t_end": 10, "dt": 0.001, "seed": 3,
        "noise_sigma": { "position": 0, "velocity": 0 },
        "target": { "q0": [1.0, -1.0], "q0dot": [0.5, 0.25] },
        "initial_agents": [
            { "q": [1.0, -1.0], "qdot": [0.5, 0.25] },
            { "q": [1.0, -1.0], "qdot": [0.5, 0.25] },
            { "q": [1.0, -1.0], "qdot": [0.5, 0.25] },
            { "q": [1.0, -1.0], "qdot": [0.5, 0.25] }
        ]
    }"#;
    let cfg = ScenarioConfig::from_json_str(text).unwrap();
    let (log, metrics) = run_scenario(&cfg).unwrap();
    let worst = (0..log.len()).flat_map(|k| log.error_norms(k)).fold(0.0, f64::max);
    assert!(worst <= 1e-6, "max ‖e‖ {worst:.3e}");
    assert_eq!(metrics.convergence_time_005, Some(0.0));
}

#[test]
fn benchmark_converges_within_deadline() {
    let (_, m) = run_scenario(&bench(&["t_end=5"])).unwrap();
    let t = m.convergence_time_005.expect("converges");
    assert!(t <= 3.0, "converged at {t}");
    assert!(m.max_u_norm.is_finite());
}

#[test]
fn divergence_carries_partial_log() {
    let cfg = bench(&["dt=0.5", "t_end=200"]);
    match simulate(&cfg.build().unwrap()) {
        Err(Error::Divergence { t, partial, .. }) => {
            assert!(!partial.is_empty());
            assert!(partial.samples.last().unwrap().t < t);
        }
        other => panic!("expected divergence, got {:?}", other.map(|l| l.len())),
    }
}

#[test]
fn sweep_matches_individual_runs_and_records_failures() {
    let cfg = bench(&["t_end=1", "analysis.rms_window=[0, 1]"]);
    let report = seed_sweep(&cfg, &[4, 5], Some(2)).unwrap();
    for run in &report.runs {
        let mut single = cfg.clone();
        single.seed = run.seed;
        assert_eq!(run.metrics.as_ref(), Some(&run_scenario(&single).unwrap().1));
    }
    let one = seed_sweep(&cfg, &[4], None).unwrap();
    assert_eq!(one.aggregate.median_rms, Some(one.runs[0].metrics.as_ref().unwrap().cumulative_rms_e));

    let bad = seed_sweep(&bench(&["dt=0.5", "t_end=200"]), &[1], Some(1)).unwrap();
    assert!(bad.runs[0].metrics.is_none() && bad.runs[0].error.is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn initial_positions_respect_range(seed in any::<u64>()) {
        let cfg = bench(&["t_end=0.01", &format!("seed={seed}")]);
        let scenario = cfg.build().unwrap();
        for a in &scenario.initial_agents {
            prop_assert!(a.q.iter().all(|x| (-10.0..10.0).contains(x)));
            prop_assert!(a.qdot.iter().all(|&v| v == 0.0));
        }
        prop_assert!(scenario.target.q0.iter().all(|&x| x == 0.0));
    }
}
