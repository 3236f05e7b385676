//! Feeds synthetic pseudo-measurements of a linearly drifting bias straight
//! into the 12-state filter and watches offset and slope converge.
//!
//! Run with `cargo run --example bias_drift_filter`.

use ftbias::bias::{BiasFilter, BiasFilterConfig};
use ftbias::stats::chi2_quantile;
use nalgebra::{Matrix6, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> ftbias::Result<()> {
    let b0 = Vector6::new(2.0, -1.0, 0.5, 0.1, -0.05, 0.02);
    let drift = b0 * 1e-3;
    let std = Vector6::new(0.05, 0.05, 0.05, 0.005, 0.005, 0.005);
    let r = Matrix6::from_diagonal(&std.component_mul(&std));

    let gate = chi2_quantile(0.999, 6.0);
    let mut filter = BiasFilter::new(BiasFilterConfig::default(), Some(gate))?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    println!("gate: d² > {gate:.2} is rejected");

    for k in 0..=6000 {
        let t = k as f64 * 0.01;
        let noise = Vector6::from_fn(|i, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            std[i] * z
        });
        let y = b0 + drift * t + noise;
        let outcome = filter.step(t, &y, &r)?;
        if k % 1000 == 0 {
            let s = filter.state().expect("initialized");
            println!(
                "t={t:4.0}  fx bias {:+.4} (true {:+.4})  fx drift {:+.2e} (true {:+.2e})  d²={:.2}",
                s.bias()[0],
                b0[0] + drift[0] * t,
                s.drift()[0],
                drift[0],
                outcome.mahalanobis_sq
            );
        }
    }
    println!("{} updates, {} gated", filter.updates(), filter.gated());
    Ok(())
}
