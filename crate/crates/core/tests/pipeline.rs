use std::path::PathBuf;

use ftbias::pipeline::config::{default_load, BiasSign, PipelineConfig, RobotSpec, SimulationConfig};
use ftbias::pipeline::{correct_log, run_pipeline, summarize, ReportOptions};
use ftbias::records::{LogRecord, WrenchRecord};
use ftbias::sim::{simulate, Motion, NoiseSpec, Simulation, TrajectorySpec};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run_sim(cfg: &SimulationConfig) -> Simulation {
    let model = cfg.robot_model().unwrap();
    simulate(&model, &cfg.trajectory, &cfg.noise, &cfg.load.theta, &cfg.options).unwrap()
}

#[test]
fn shipped_configs_equal_builtin_defaults() {
    let p = PipelineConfig::load(&configs_dir().join("pipeline.toml")).unwrap();
    let d = PipelineConfig::default();
    assert_eq!(p.to_toml().unwrap(), PipelineConfig { base_dir: p.base_dir.clone(), ..d }.to_toml().unwrap());

    let s = SimulationConfig::load(&configs_dir().join("simulate.toml")).unwrap();
    assert_eq!(s.robot, RobotSpec::File { path: "robot.toml".into() });
    let (file, builtin_model) = (s.robot_model().unwrap(), ftbias::kinematics::franka_model());
    assert_eq!(file.name, builtin_model.name);
    for (a, b) in file.screw_vectors().zip(builtin_model.screw_vectors()) {
        assert_eq!(a, b);
    }
    let home = file.sensor_home.to_homogeneous() - builtin_model.sensor_home.to_homogeneous();
    assert!(home.amax() < 1e-15);
    let builtin = SimulationConfig::default();
    assert_eq!(s.trajectory, builtin.trajectory);
    assert_eq!(s.noise, builtin.noise);
    assert_eq!(s.options, builtin.options);
    let (a, b) = (s.load.theta.as_vector(), default_load());
    assert!((a - b.as_vector()).amax() < 1e-15);
}

#[test]
fn config_round_trip_is_idempotent() {
    let cfg = PipelineConfig::load(&configs_dir().join("pipeline.toml")).unwrap();
    let once = cfg.to_toml().unwrap();
    let twice = PipelineConfig::from_toml_str(&once).unwrap().to_toml().unwrap();
    assert_eq!(once, twice);
}

#[test]
fn static_zero_noise_recovers_constant_bias() {
    let b0 = [1.5, -0.7, 0.3, 0.08, -0.04, 0.015];
    let cfg = SimulationConfig {
        trajectory: TrajectorySpec {
            motion: Motion::ConstantAcceleration {
                q0: vec![0.0, -0.3, 0.0, -2.2, 0.0, 2.0, 0.8],
                qd0: vec![0.0; 7],
                qdd: vec![0.0; 7],
            },
            duration: 10.0,
            rate: 100.0,
            seed: 0,
        },
        noise: NoiseSpec {
            bias_initial: b0,
            ..Default::default()
        },
        ..Default::default()
    };
    let sim = run_sim(&cfg);
    let (est, stats) = run_pipeline(&PipelineConfig::default(), &sim.records).unwrap();
    assert_eq!(stats.gated, 0);
    let last = est.last().unwrap();
    for i in 0..6 {
        assert!((last.b[i] - b0[i]).abs() < 1e-6, "axis {i}: {}", last.b[i]);
        assert!(last.bd[i].abs() < 1e-6);
    }
}

#[test]
fn minus_convention_flips_the_estimate() {
    let mut cfg = SimulationConfig::default();
    cfg.trajectory.duration = 5.0;
    let sim = run_sim(&cfg);
    let flipped: Vec<LogRecord> = sim
        .records
        .iter()
        .map(|r| match r {
            LogRecord::Wrench(w) => {
                let clean = sim.clean_wrench[(w.t * 100.0).round() as usize];
                // W' = Dθ + b + n, i.e. the same noise with the bias reversed
                LogRecord::Wrench(WrenchRecord {
                    t: w.t,
                    w: std::array::from_fn(|i| 2.0 * clean[i] - w.w[i]),
                })
            }
            j => j.clone(),
        })
        .collect();
    let plus = run_pipeline(&PipelineConfig::default(), &sim.records).unwrap().0;
    let minus_cfg = PipelineConfig {
        bias_sign: BiasSign::Minus,
        ..Default::default()
    };
    let minus = run_pipeline(&minus_cfg, &flipped).unwrap().0;
    let (p, m) = (plus.last().unwrap(), minus.last().unwrap());
    for i in 0..6 {
        assert!((p.b[i] - m.b[i]).abs() < 4.0 * p.p_diag[i].sqrt(), "axis {i}");
    }
}

#[test]
fn correction_residual_is_below_wrench_noise() {
    let cfg = SimulationConfig::default();
    let sim = run_sim(&cfg);
    let (est, _) = run_pipeline(&PipelineConfig::default(), &sim.records).unwrap();
    let (corrected, stats) = correct_log(&sim.records, &est, BiasSign::Plus);
    assert_eq!(stats.corrected, sim.clean_wrench.len());
    let raw: Vec<&WrenchRecord> = sim
        .records
        .iter()
        .filter_map(|r| match r {
            LogRecord::Wrench(w) => Some(w),
            _ => None,
        })
        .collect();
    // residual against the unbiased measurement W + b(t), after a 10 s settling period
    for i in 0..6 {
        let residual: Vec<f64> = corrected
            .iter()
            .zip(&raw)
            .zip(&sim.truth)
            .skip(1000)
            .map(|((c, w), tr)| c.w[i] - (w.w[i] + tr.b[i]))
            .collect();
        let rms = (residual.iter().map(|r| r * r).sum::<f64>() / residual.len() as f64).sqrt();
        assert!(rms < cfg.noise.wrench_std[i], "axis {i}: rms {rms}");
    }
}

#[test]
fn report_against_truth_has_errors_and_nees() {
    let mut cfg = SimulationConfig::default();
    cfg.trajectory.duration = 10.0;
    let sim = run_sim(&cfg);
    let mut pcfg = PipelineConfig::default();
    pcfg.output.full_covariance = true;
    let (est, _) = run_pipeline(&pcfg, &sim.records).unwrap();
    let summary = summarize(&est, Some(&sim.truth), &ReportOptions::default());
    let truth = summary.truth.expect("truth comparison");
    assert!(truth.nees.full_covariance);
    assert!(truth.nees.mean.is_finite() && truth.nees.mean > 0.0);
    assert!(summary.convergence_time.is_some());
    let without = summarize(&est, None, &ReportOptions::default());
    assert!(without.truth.is_none());
    assert_eq!(without.final_estimate, summary.final_estimate);
}
