//! Product of exponentials on the built-in 7-joint arm: sensor pose, space
//! Jacobian and the adjoint map between twists expressed in two frames.
//!
//! Run with `cargo run --example screw_exponential`.

use ftbias::kinematics::{forward_pass, franka_model};
use ftbias::lie::{JointScrewCache, Screw};
use nalgebra::{DVector, Vector3};

fn main() -> ftbias::Result<()> {
    // A single revolute joint about z through (1, 0, 0): a quarter turn
    // carries the origin to (1, -1, 0).
    let joint = JointScrewCache::new(Screw::new(Vector3::z(), Vector3::new(1.0, 0.0, 0.0))?);
    let t = joint.exp(std::f64::consts::FRAC_PI_2);
    println!("origin after a quarter turn: {:.6?}", t.transform_point(&Vector3::zeros()).as_slice());

    let model = franka_model();
    let q = DVector::from_column_slice(&[0.0, -0.3, 0.0, -2.2, 0.0, 2.0, 0.8]);
    let fk = forward_pass(&model, &q)?;
    println!("sensor position: {:.4?}", fk.sensor_pose.translation.as_slice());
    println!("sensor rotation:{:.4}", fk.sensor_pose.rotation);
    println!("space Jacobian [linear; angular] per joint:{:.4}", fk.space_jacobian);

    // The adjoint is invertible, with Ad(T⁻¹) = Ad(T)⁻¹.
    let ad = fk.sensor_pose.adjoint();
    let round_trip = ad * fk.sensor_pose.inverse().adjoint();
    println!("max |Ad(T) Ad(T⁻¹) - I| = {:.2e}", (round_trip - nalgebra::Matrix6::identity()).amax());
    Ok(())
}
