//! One agent's RISE controller driven by hand-built local measurements.
//!
//! The controller sees only relative states to its neighbours and, when pinned, to the
//! target. Integrating `ν̂` with the same measurements shows the switching term building up.

use nalgebra::{DMatrix, DVector};
use rise_flock::controller::{
    neighborhood_error, ControllerGains, LocalMeasurements, NeighborMeasurement, RiseController,
    TargetMeasurement,
};

fn main() -> rise_flock::Result<()> {
    let gains = ControllerGains { k1: 10.0, k2: 10.0, k3: 25.0, k4: 50.0, lambda_p: 5.0, lambda_v: 1.0 };
    let controller = RiseController::new(gains);

    let mut meas = LocalMeasurements::new(2);
    meas.neighbors.push(NeighborMeasurement {
        weight: 1.0,
        rel_pos: DVector::from_vec(vec![0.5, -0.2]),
        rel_vel: DVector::from_vec(vec![0.0, 0.1]),
    });
    meas.neighbors.push(NeighborMeasurement {
        weight: 0.5,
        rel_pos: DVector::from_vec(vec![-0.1, 0.3]),
        rel_vel: DVector::zeros(2),
    });
    meas.target = Some(TargetMeasurement {
        rel_pos: DVector::from_vec(vec![1.0, 1.0]),
        rel_vel: DVector::from_vec(vec![0.2, 0.0]),
    });
    println!("η = {:.4?}", neighborhood_error(&meas).as_slice());

    // A 2×3 input gain with full row rank and its right pseudo-inverse.
    let g = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.5, 0.0, 2.0, 0.0]);
    let g_plus = rise_flock::dynamics::right_pseudo_inverse(&g, 0, 0.0)?;

    let dt = 1e-3;
    let mut nu_hat = DVector::zeros(2);
    for step in 0..=3 {
        let u = controller.control(&meas, &nu_hat, &g_plus)?;
        println!("t = {:.3}: ν̂ = {:.4?}, u = {:.4?}", step as f64 * dt, nu_hat.as_slice(), u.as_slice());
        nu_hat += controller.nu_hat_rate(&meas) * dt;
    }
    let u = controller.control(&meas, &nu_hat, &g_plus)?;
    let residual = (&g * u - controller.command(&meas, &nu_hat)).norm();
    println!("‖g·u − command‖ = {residual:.1e}");
    Ok(())
}
