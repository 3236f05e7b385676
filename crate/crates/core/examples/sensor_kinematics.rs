//! Sensor-frame velocity and acceleration from joint positions, rates and
//! accelerations, through the twist Jacobian and its Hessian.
//!
//! Run with `cargo run --example sensor_kinematics`.

use ftbias::kinematics::{franka_model, sensor_kinematics, solve};
use nalgebra::DVector;

fn main() -> ftbias::Result<()> {
    let model = franka_model();
    let q = DVector::from_column_slice(&[0.2, -0.4, 0.1, -2.0, 0.3, 1.8, 0.6]);
    let qd = DVector::from_column_slice(&[0.3, -0.2, 0.1, 0.4, -0.3, 0.2, 0.5]);
    let qdd = DVector::from_column_slice(&[0.0, 0.5, -0.3, 0.2, 0.1, -0.4, 0.0]);

    let sol = solve(&model, &q)?;
    println!("twist Jacobian:{:.4}", sol.twist_jacobian);
    println!("velocity-product term (H q̇) q̇: {:.4?}", sol.hessian.contract(&qd).as_slice());

    let kin = sensor_kinematics(&model, &q, &qd, &qdd)?;
    println!("position             {:.4?}", kin.pose.translation.as_slice());
    println!("linear velocity      {:.4?}", kin.linear_velocity.as_slice());
    println!("angular velocity     {:.4?}", kin.angular_velocity.as_slice());
    println!("linear acceleration  {:.4?}", kin.linear_acceleration.as_slice());
    println!("angular acceleration {:.4?}", kin.angular_acceleration.as_slice());

    // Cross-check the velocity against a central difference of the pose.
    let h = 1e-6;
    let ahead = solve(&model, &(&q + &qd * h))?.forward.sensor_pose.translation;
    let behind = solve(&model, &(&q - &qd * h))?.forward.sensor_pose.translation;
    let fd = (ahead - behind) / (2.0 * h);
    println!("finite-difference check: {:.2e}", (fd - kin.linear_velocity).amax());
    Ok(())
}
