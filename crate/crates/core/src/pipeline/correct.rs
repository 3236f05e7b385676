//! Applying estimated bias to a wrench stream.

use serde::Serialize;

use super::config::BiasSign;
use crate::records::{EstimateRecord, LogRecord, WrenchRecord};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CorrectStats {
    pub corrected: usize,
    /// Wrench samples older than the first estimate.
    pub skipped: usize,
}

/// `w ± (b̂ + dt·ḃ̂)`, the sign following the measurement convention.
pub fn correct_sample(w: &[f64; 6], est: &EstimateRecord, dt: f64, sign: BiasSign) -> [f64; 6] {
    let s = sign.factor();
    std::array::from_fn(|i| w[i] + s * (est.b[i] + est.bd[i] * dt))
}

/// Corrects every wrench record with the most recent estimate at or before
/// it, extrapolated by the drift. `estimates` must be sorted by time.
pub fn correct_log<'a, I>(
    records: I,
    estimates: &[EstimateRecord],
    sign: BiasSign,
) -> (Vec<WrenchRecord>, CorrectStats)
where
    I: IntoIterator<Item = &'a LogRecord>,
{
    let mut out = Vec::new();
    let mut stats = CorrectStats::default();
    let mut next = 0;
    for r in records {
        let LogRecord::Wrench(w) = r else { continue };
        while next < estimates.len() && estimates[next].t <= w.t {
            next += 1;
        }
        let Some(est) = next.checked_sub(1).map(|i| &estimates[i]) else {
            stats.skipped += 1;
            continue;
        };
        out.push(WrenchRecord {
            t: w.t,
            w: correct_sample(&w.w, est, w.t - est.t, sign),
        });
        stats.corrected += 1;
    }
    (out, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(t: f64, b: f64, bd: f64) -> EstimateRecord {
        EstimateRecord {
            t,
            b: [b; 6],
            bd: [bd; 6],
            p_diag: [1.0; 12],
            innovation: [0.0; 6],
            gated: false,
            cov: None,
        }
    }

    fn wrench(t: f64) -> LogRecord {
        LogRecord::Wrench(WrenchRecord { t, w: [1.0; 6] })
    }

    #[test]
    fn uses_latest_estimate_and_extrapolates() {
        let recs = [wrench(0.0), wrench(1.0), wrench(1.5), wrench(3.0)];
        let ests = [est(1.0, 0.5, 0.1), est(2.0, 0.25, 0.0)];
        let (out, stats) = correct_log(&recs, &ests, BiasSign::Plus);
        assert_eq!(stats, CorrectStats { corrected: 3, skipped: 1 });
        assert_eq!(out[0].w, [1.5; 6]);
        assert_eq!(out[1].w, [1.0 + (0.5 + 0.1 * 0.5); 6]);
        assert_eq!(out[2].w, [1.25; 6]);
    }

    #[test]
    fn minus_sign_subtracts() {
        let w = correct_sample(&[1.0; 6], &est(0.0, 0.25, 0.5), 0.5, BiasSign::Minus);
        assert_eq!(w, [0.5; 6]);
    }
}
