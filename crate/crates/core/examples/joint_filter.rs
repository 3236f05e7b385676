//! Tracks one joint from noisy encoder position and velocity and recovers the
//! unmeasured acceleration.
//!
//! Run with `cargo run --example joint_filter`.

use ftbias::joint::{process_noise, InitialCovariance, JointFilter, ProcessModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> ftbias::Result<()> {
    let model = ProcessModel::IntegratedJerkNoise { psd: 1.0 };
    println!("process noise over 10 ms:{:.3e}", process_noise(&model, 0.01)?);

    let (pos_std, vel_std) = (1e-4, 1e-3);
    let mut filter = JointFilter::new(
        model,
        InitialCovariance::default(),
        [pos_std * pos_std, vel_std * vel_std],
        None,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (pos_noise, vel_noise) = (Normal::new(0.0, pos_std).unwrap(), Normal::new(0.0, vel_std).unwrap());

    // q(t) = 0.5 sin(2t): the true acceleration is -2 sin(2t).
    println!("{:>5} {:>10} {:>10} {:>10}", "t", "q̈ true", "q̈ est", "σ");
    for k in 0..=500 {
        let t = k as f64 * 0.01;
        let (q, qd) = (0.5 * (2.0 * t).sin(), (2.0 * t).cos());
        filter.step(q + pos_noise.sample(&mut rng), qd + vel_noise.sample(&mut rng), t)?;
        if k % 50 == 0 {
            let s = filter.state().expect("initialized");
            println!(
                "{t:5.2} {:10.4} {:10.4} {:10.4}",
                -2.0 * (2.0 * t).sin(),
                s.acceleration(),
                s.covariance[(2, 2)].sqrt()
            );
        }
    }
    Ok(())
}
