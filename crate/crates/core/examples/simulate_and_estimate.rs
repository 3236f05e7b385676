//! End to end: simulate a minute of arm motion with a drifting sensor bias,
//! run the estimator over the log and compare against ground truth.
//!
//! Run with `cargo run --release --example simulate_and_estimate`.

use ftbias::pipeline::{run_pipeline, summarize, PipelineConfig, ReportOptions, SimulationConfig};
use ftbias::sim::simulate;

fn main() -> ftbias::Result<()> {
    let sim_cfg = SimulationConfig::default();
    let sim = simulate(
        &sim_cfg.robot_model()?,
        &sim_cfg.trajectory,
        &sim_cfg.noise,
        &sim_cfg.load.theta,
        &sim_cfg.options,
    )?;
    println!("simulated {} records", sim.records.len());

    let (estimates, stats) = run_pipeline(&PipelineConfig::default(), &sim.records)?;
    println!("{stats:?}");

    let summary = summarize(&estimates, Some(&sim.truth), &ReportOptions::default());
    let last = estimates.last().expect("estimates");
    let truth = sim.truth.last().expect("truth");
    println!("{:>3} {:>10} {:>10} {:>8} {:>11} {:>11}", "", "b̂", "b", "σ", "ḃ̂", "ḃ");
    for (i, axis) in ["fx", "fy", "fz", "tx", "ty", "tz"].iter().enumerate() {
        println!(
            "{axis:>3} {:10.5} {:10.5} {:8.1e} {:11.3e} {:11.3e}",
            last.b[i],
            truth.bias_at(last.t)[i],
            last.p_diag[i].sqrt(),
            last.bd[i],
            truth.bd[i]
        );
    }
    if let Some(t) = summary.convergence_time {
        println!("converged after {t:.2} s");
    }
    if let Some(cmp) = summary.truth {
        println!("mean NEES {:.2} (band {:.2}..{:.2})", cmp.nees.mean, cmp.nees.band[0], cmp.nees.band[1]);
    }
    Ok(())
}
