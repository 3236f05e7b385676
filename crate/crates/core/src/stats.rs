//! Chi-square quantiles for gating and consistency bands.

use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF};

/// Quantile of the χ² distribution with `dof` degrees of freedom.
///
/// `statrs` inverts the CDF by bisection to a loose tolerance; a few Newton
/// steps on the (accurate) CDF bring the result to near machine precision.
pub fn chi2_quantile(p: f64, dof: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0 && dof > 0.0, "chi2_quantile({p}, {dof})");
    let d = ChiSquared::new(dof).expect("positive dof");
    let mut x = d.inverse_cdf(p);
    for _ in 0..8 {
        let pdf = d.pdf(x);
        if !(pdf > 0.0) {
            break;
        }
        let step = (d.cdf(x) - p) / pdf;
        x = (x - step).max(x * 0.5);
        if step.abs() <= 1e-15 * x {
            break;
        }
    }
    x
}
