//! Uses the bias estimates to clean a raw wrench stream, then measures how
//! close the corrected signal is to the load's own wrench.
//!
//! Run with `cargo run --release --example correct_wrench`.

use ftbias::pipeline::{correct_log, run_pipeline, BiasSign, PipelineConfig, SimulationConfig};
use ftbias::records::LogRecord;
use ftbias::sim::simulate;

fn rms(v: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    (sum / n as f64).sqrt()
}

fn main() -> ftbias::Result<()> {
    let mut cfg = SimulationConfig::default();
    cfg.trajectory.duration = 30.0;
    let sim = simulate(&cfg.robot_model()?, &cfg.trajectory, &cfg.noise, &cfg.load.theta, &cfg.options)?;
    let (estimates, _) = run_pipeline(&PipelineConfig::default(), &sim.records)?;
    let (corrected, stats) = correct_log(&sim.records, &estimates, BiasSign::Plus);
    println!("{stats:?}");

    let raw: Vec<[f64; 6]> = sim
        .records
        .iter()
        .filter_map(|r| match r {
            LogRecord::Wrench(w) => Some(w.w),
            _ => None,
        })
        .collect();
    // Compare against the noise-free load wrench after a 5 s settling period.
    println!("{:>3} {:>12} {:>12}", "", "raw RMS err", "corrected");
    for (i, axis) in ["fx", "fy", "fz", "tx", "ty", "tz"].iter().enumerate() {
        let before = rms(raw.iter().zip(&sim.clean_wrench).skip(500).map(|(w, c)| w[i] - c[i]));
        let after = rms(corrected.iter().zip(&sim.clean_wrench).skip(500).map(|(w, c)| w.w[i] - c[i]));
        println!("{axis:>3} {before:12.5} {after:12.5}");
    }
    Ok(())
}
