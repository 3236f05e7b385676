//! Streaming orchestration: joint filters → sensor kinematics → regressor →
//! bias filter.

use log::{debug, warn};
use nalgebra::{DVector, Vector3, Vector6};
use serde::Serialize;

use super::config::{BiasSign, PipelineConfig};
use crate::bias::{BiasFilter, BiasState};
use crate::error::{Error, Result};
use crate::joint::JointFilter;
use crate::kinematics::{sensor_kinematics, RobotModel};
use crate::lie::SpatialVector;
use crate::records::{EstimateRecord, JointRecord, LogRecord, WrenchRecord};
use crate::regressor::{
    data_matrix, pseudo_measurement, reduction_map, MeasurementNoise, ReductionMap, WrenchSample,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EstimatorStats {
    pub joint_records: usize,
    pub wrench_records: usize,
    pub estimates: usize,
    /// Wrench samples with no joint sample within the pairing tolerance.
    pub unpaired: usize,
    pub gated: usize,
    /// Joint samples dropped for non-increasing timestamps.
    pub dropped_joint: usize,
}

/// Incremental estimator. Feed records in timestamp order with
/// [`Estimator::push`] and call [`Estimator::finish`] at the end of the
/// stream.
///
/// A wrench sample is held back until the next record arrives so that a joint
/// sample sharing its timestamp is applied first, whichever order the two
/// appear in.
#[derive(Debug, Clone)]
pub struct Estimator {
    model: RobotModel,
    map: ReductionMap,
    noise: MeasurementNoise,
    gravity: Vector3<f64>,
    sign: BiasSign,
    pairing_tolerance: f64,
    full_covariance: bool,
    joints: Vec<JointFilter>,
    last_joint_t: Option<f64>,
    bias: BiasFilter,
    pending: Option<WrenchRecord>,
    stats: EstimatorStats,
}

impl Estimator {
    pub fn new(cfg: &PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let model = cfg.robot_model()?;
        let jf = &cfg.joint_filter;
        let joints = (0..model.dof())
            .map(|_| JointFilter::new(jf.process, jf.initial, jf.measurement_variances(), jf.fixed_dt))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            map: reduction_map(&cfg.load.theta),
            noise: cfg.measurement.noise()?,
            gravity: Vector3::from(cfg.gravity),
            sign: cfg.bias_sign,
            pairing_tolerance: cfg.pairing_tolerance,
            full_covariance: cfg.output.full_covariance,
            joints,
            last_joint_t: None,
            bias: BiasFilter::new(cfg.bias_filter, cfg.gating.threshold()?)?,
            pending: None,
            stats: EstimatorStats::default(),
            model,
        })
    }

    pub fn stats(&self) -> EstimatorStats {
        let mut s = self.stats;
        s.dropped_joint = self.joints.iter().map(JointFilter::dropped).sum();
        s
    }

    pub fn bias_state(&self) -> Option<&BiasState> {
        self.bias.state()
    }

    /// Processes one record; returns the estimate produced, if any.
    pub fn push(&mut self, record: &LogRecord) -> Result<Option<EstimateRecord>> {
        match record {
            LogRecord::Joint(j) => {
                let mut out = None;
                if let Some(w) = self.pending.take() {
                    if w.t == j.t {
                        self.joint(j).map_err(|e| e.at_record(j.t))?;
                        return self.wrench(&w);
                    }
                    out = self.wrench(&w)?;
                }
                self.joint(j).map_err(|e| e.at_record(j.t))?;
                Ok(out)
            }
            LogRecord::Wrench(w) => {
                self.stats.wrench_records += 1;
                let out = match self.pending.replace(*w) {
                    Some(prev) => self.wrench(&prev)?,
                    None => None,
                };
                Ok(out)
            }
        }
    }

    /// Flushes a held-back wrench sample.
    pub fn finish(&mut self) -> Result<Option<EstimateRecord>> {
        match self.pending.take() {
            Some(w) => self.wrench(&w),
            None => Ok(None),
        }
    }

    fn joint(&mut self, j: &JointRecord) -> Result<()> {
        let n = self.joints.len();
        for (what, len) in [("joint positions", j.q.len()), ("joint velocities", j.qd.len())] {
            if len != n {
                return Err(Error::Dimension {
                    what,
                    expected: n,
                    got: len,
                });
            }
        }
        self.stats.joint_records += 1;
        let mut accepted = true;
        for (i, f) in self.joints.iter_mut().enumerate() {
            accepted &= f.step(j.q[i], j.qd[i], j.t)?;
        }
        if accepted {
            self.last_joint_t = Some(j.t);
        }
        Ok(())
    }

    fn wrench(&mut self, w: &WrenchRecord) -> Result<Option<EstimateRecord>> {
        self.estimate(w).map_err(|e| e.at_record(w.t))
    }

    fn estimate(&mut self, w: &WrenchRecord) -> Result<Option<EstimateRecord>> {
        let paired = self
            .last_joint_t
            .is_some_and(|tj| (w.t - tj).abs() <= self.pairing_tolerance && tj <= w.t);
        if !paired {
            self.stats.unpaired += 1;
            warn!("no joint sample within {} s of wrench at t={}", self.pairing_tolerance, w.t);
            return Ok(None);
        }
        let n = self.joints.len();
        let (mut q, mut qd, mut qdd) = (DVector::zeros(n), DVector::zeros(n), DVector::zeros(n));
        for (i, f) in self.joints.iter().enumerate() {
            let s = f.predicted_at(w.t)?.expect("paired joints are initialized");
            q[i] = s.position();
            qd[i] = s.velocity();
            qdd[i] = s.acceleration();
        }
        let mut kin = sensor_kinematics(&self.model, &q, &qd, &qdd)?;
        kin.timestamp = w.t;
        let d = data_matrix(&kin, &self.gravity)?;
        let sample = WrenchSample {
            wrench: SpatialVector::wrench(Vector3::new(w.w[0], w.w[1], w.w[2]), Vector3::new(w.w[3], w.w[4], w.w[5])),
            timestamp: w.t,
        };
        let pm = pseudo_measurement(&d, &self.map, &sample, &self.noise, self.pairing_tolerance)?;
        let y: Vector6<f64> = pm.y * self.sign.factor();
        let outcome = self.bias.step(w.t, &y, &pm.covariance)?;
        if outcome.gated {
            self.stats.gated += 1;
            debug!("gated wrench at t={} (d²={:.2})", w.t, outcome.mahalanobis_sq);
        }
        self.stats.estimates += 1;
        let state = self.bias.state().expect("stepped filter has a state");
        Ok(Some(self.record(state, &outcome.innovation, outcome.gated)))
    }

    fn record(&self, s: &BiasState, innovation: &Vector6<f64>, gated: bool) -> EstimateRecord {
        EstimateRecord {
            t: s.timestamp,
            b: s.bias().into(),
            bd: s.drift().into(),
            p_diag: s.covariance.diagonal().into(),
            innovation: (*innovation).into(),
            gated,
            cov: self
                .full_covariance
                .then(|| s.covariance.transpose().iter().copied().collect()),
        }
    }
}

/// Runs the whole pipeline over an in-memory record stream.
pub fn run_pipeline<'a, I>(cfg: &PipelineConfig, records: I) -> Result<(Vec<EstimateRecord>, EstimatorStats)>
where
    I: IntoIterator<Item = &'a LogRecord>,
{
    let mut est = Estimator::new(cfg)?;
    let mut out = Vec::new();
    for r in records {
        out.extend(est.push(r)?);
    }
    out.extend(est.finish()?);
    Ok((out, est.stats()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::config::default_load;
    use crate::sim::{simulate, Motion, NoiseSpec, SimOptions, TrajectorySpec};

    fn small_sim(duration: f64) -> (PipelineConfig, Vec<LogRecord>) {
        let cfg = PipelineConfig::default();
        let traj = TrajectorySpec {
            motion: Motion::Sinusoidal {
                offset: vec![0.0, -0.3, 0.0, -2.2, 0.0, 2.0, 0.8],
                amplitude: vec![0.2; 7],
                frequency: vec![0.3; 7],
                phase: vec![0.0; 7],
            },
            duration,
            rate: 100.0,
            seed: 3,
        };
        let noise = NoiseSpec {
            joint_pos_std: 1e-4,
            joint_vel_std: 1e-3,
            wrench_std: [0.05, 0.05, 0.05, 0.005, 0.005, 0.005],
            bias_initial: [1.0, 0.5, -0.3, 0.02, 0.01, -0.01],
            seed: 9,
            ..Default::default()
        };
        let model = cfg.robot_model().unwrap();
        let sim = simulate(&model, &traj, &noise, &default_load(), &SimOptions::default()).unwrap();
        (cfg, sim.records)
    }

    #[test]
    fn one_estimate_per_paired_wrench() {
        let (cfg, records) = small_sim(2.0);
        let (est, stats) = run_pipeline(&cfg, &records).unwrap();
        assert_eq!(stats.joint_records, 200);
        assert_eq!(stats.wrench_records, 200);
        assert_eq!(est.len(), 200);
        assert_eq!(stats.unpaired, 0);
        assert!(est.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn wrench_before_joint_at_same_time_is_paired() {
        let (cfg, mut records) = small_sim(0.5);
        for pair in records.chunks_mut(2) {
            pair.swap(0, 1);
        }
        let (est, stats) = run_pipeline(&cfg, &records).unwrap();
        assert_eq!(stats.unpaired, 0);
        let (reference, _) = run_pipeline(&cfg, &small_sim(0.5).1).unwrap();
        assert_eq!(est, reference);
    }

    #[test]
    fn split_stream_matches_single_pass() {
        let (cfg, records) = small_sim(1.0);
        let (reference, _) = run_pipeline(&cfg, &records).unwrap();
        for split in [0, 1, 2, 57, 120, records.len()] {
            let mut first = Estimator::new(&cfg).unwrap();
            let mut out = Vec::new();
            for r in &records[..split] {
                out.extend(first.push(r).unwrap());
            }
            let mut second = first.clone();
            for r in &records[split..] {
                out.extend(second.push(r).unwrap());
            }
            out.extend(second.finish().unwrap());
            assert_eq!(out, reference, "split at {split}");
        }
    }

    #[test]
    fn wrench_without_joints_is_unpaired() {
        let cfg = PipelineConfig::default();
        let recs = vec![LogRecord::Wrench(WrenchRecord { t: 0.0, w: [0.0; 6] })];
        let (est, stats) = run_pipeline(&cfg, &recs).unwrap();
        assert!(est.is_empty());
        assert_eq!(stats.unpaired, 1);
    }

    #[test]
    fn wrong_joint_count_is_a_data_error_with_context() {
        let cfg = PipelineConfig::default();
        let recs = vec![LogRecord::Joint(JointRecord {
            t: 0.5,
            q: vec![0.0; 3],
            qd: vec![0.0; 3],
        })];
        let err = run_pipeline(&cfg, &recs).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("t=0.5"), "{err}");
    }

    #[test]
    fn full_covariance_is_emitted_on_request() {
        let (mut cfg, records) = small_sim(0.1);
        cfg.output.full_covariance = true;
        let (est, _) = run_pipeline(&cfg, &records).unwrap();
        let last = est.last().unwrap();
        let cov = last.cov.as_ref().unwrap();
        assert_eq!(cov.len(), 144);
        for i in 0..12 {
            assert_eq!(cov[i * 12 + i], last.p_diag[i]);
        }
    }
}
