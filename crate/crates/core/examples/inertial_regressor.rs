//! The wrench a rigid load exerts on the sensor is linear in its ten inertial
//! parameters. This builds the data matrix from sensor kinematics and forms
//! the pseudo-measurement the bias filter consumes.
//!
//! Run with `cargo run --example inertial_regressor`.

use ftbias::lie::SpatialVector;
use ftbias::regressor::{
    data_matrix_sensor_frame, pseudo_measurement, reduction_map, InertialParams, MeasurementNoise, WrenchSample,
};
use nalgebra::{Matrix3, Vector3};

fn main() -> ftbias::Result<()> {
    let load = InertialParams::from_body(
        0.73,
        Vector3::new(-0.01, 0.0, 0.03),
        Matrix3::from_diagonal(&Vector3::new(1e-3, 2.5e-3, 1.5e-3)),
    )?;
    println!("θ = {:.5?}", load.as_vector().as_slice());

    // Proper acceleration (gravity removed) and rotation, sensor frame.
    let accel = Vector3::new(0.4, -0.2, 9.81);
    let omega = Vector3::new(0.3, -0.1, 0.5);
    let alpha = Vector3::new(-0.2, 0.6, 0.1);
    let d = data_matrix_sensor_frame(&accel, &omega, &alpha, 0.0);
    println!("data matrix D:{:.4}", d.full);
    println!("{} of 60 entries are structurally non-zero", d.reduced.len());

    let map = reduction_map(&load);
    let wrench = d.full * load.as_vector();
    println!("load wrench D θ = {:.5?}", wrench.as_slice());

    // A sensor reading offset by a bias b: y = D θ − W recovers b.
    let bias = Vector3::new(2.0, -1.0, 0.5);
    let reading = SpatialVector::wrench(
        wrench.fixed_rows::<3>(0) - bias,
        wrench.fixed_rows::<3>(3).into_owned(),
    );
    let noise = MeasurementNoise::isotropic(0.01, &[0.05, 0.05, 0.05, 0.005, 0.005, 0.005]);
    let pm = pseudo_measurement(&d, &map, &WrenchSample { wrench: reading, timestamp: 0.0 }, &noise, 0.0)?;
    println!("pseudo-measurement y = {:.5?}", pm.y.as_slice());
    println!("σ(y) = {:.4?}", pm.covariance.diagonal().map(f64::sqrt).as_slice());
    Ok(())
}
