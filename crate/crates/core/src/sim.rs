//! Ground-truth simulator for joint logs, sensor kinematics and biased,
//! noisy wrench streams.
//!
//! Trajectory derivatives are closed-form. Noise comes from ChaCha8, seeded
//! with `NoiseSpec::seed`, one stream per channel:
//!
//! | stream | channel                      |
//! |--------|------------------------------|
//! | 1      | joint position and velocity  |
//! | 2      | wrench                       |
//! | 3      | data-matrix perturbation     |
//!
//! Waypoints of [`Motion::RandomQuintic`] are drawn from stream 0 of a
//! generator seeded with `TrajectorySpec::seed`.

use std::f64::consts::TAU;

use nalgebra::{DVector, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{sensor_kinematics, RobotModel, SensorKinematics};
use crate::records::{JointRecord, LogRecord, TruthRecord, WrenchRecord};
use crate::regressor::{data_matrix, reduction_map, InertialParams, Vector36};

pub const JOINT_STREAM: u64 = 1;
pub const WRENCH_STREAM: u64 = 2;
pub const DATA_MATRIX_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Motion {
    ConstantAcceleration {
        q0: Vec<f64>,
        qd0: Vec<f64>,
        qdd: Vec<f64>,
    },
    /// `q = offset + amplitude · sin(2π·frequency·t + phase)` per joint.
    Sinusoidal {
        offset: Vec<f64>,
        amplitude: Vec<f64>,
        frequency: Vec<f64>,
        phase: Vec<f64>,
    },
    /// Rest-to-rest quintic segments between consecutive waypoints; the last
    /// waypoint is held.
    QuinticSpline {
        waypoints: Vec<Vec<f64>>,
        segment_duration: f64,
    },
    /// Like `QuinticSpline`, with waypoints drawn uniformly in
    /// `home ± spread` from the trajectory seed.
    RandomQuintic {
        home: Vec<f64>,
        spread: f64,
        segments: usize,
        segment_duration: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub motion: Motion,
    /// Seconds.
    pub duration: f64,
    /// Hz.
    pub rate: f64,
    #[serde(default)]
    pub seed: u64,
}

impl TrajectorySpec {
    pub fn sample_count(&self) -> usize {
        (self.duration * self.rate).round() as usize
    }

    pub fn sample_time(&self, k: usize) -> f64 {
        k as f64 / self.rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub joint_pos_std: f64,
    pub joint_vel_std: f64,
    pub wrench_std: [f64; 6],
    pub data_matrix_std: f64,
    pub bias_initial: [f64; 6],
    pub bias_drift: [f64; 6],
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            joint_pos_std: 0.0,
            joint_vel_std: 0.0,
            wrench_std: [0.0; 6],
            data_matrix_std: 0.0,
            bias_initial: [0.0; 6],
            bias_drift: [0.0; 6],
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn bias_at(&self, t: f64) -> [f64; 6] {
        std::array::from_fn(|i| self.bias_initial[i] + self.bias_drift[i] * t)
    }

    fn validate(&self) -> Result<()> {
        let stds = [self.joint_pos_std, self.joint_vel_std, self.data_matrix_std];
        if !stds.iter().chain(&self.wrench_std).all(|s| *s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter("noise standard deviations must be >= 0".into()));
        }
        if !self.bias_initial.iter().chain(&self.bias_drift).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("simulated bias"));
        }
        Ok(())
    }
}

/// A constant wrench added over `[start, end)`, e.g. a contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disturbance {
    pub start: f64,
    pub end: f64,
    pub wrench: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    /// Gravity in the base frame; `None` disables it.
    pub gravity: Option<[f64; 3]>,
    pub disturbance: Option<Disturbance>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            gravity: Some([0.0, 0.0, -9.81]),
            disturbance: None,
        }
    }
}

/// True joint positions, velocities and accelerations at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSample {
    pub t: f64,
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Profile {
    ConstantAcceleration {
        q0: Vec<f64>,
        qd0: Vec<f64>,
        qdd: Vec<f64>,
    },
    Sinusoidal {
        offset: Vec<f64>,
        amplitude: Vec<f64>,
        omega: Vec<f64>,
        phase: Vec<f64>,
    },
    Quintic {
        waypoints: Vec<Vec<f64>>,
        segment: f64,
    },
}

/// Analytic joint trajectory built from a [`TrajectorySpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dof: usize,
    profile: Profile,
}

fn check_lengths(dof: usize, vs: &[&Vec<f64>]) -> Result<()> {
    for v in vs {
        if v.len() != dof {
            return Err(Error::Dimension {
                what: "trajectory parameters",
                expected: dof,
                got: v.len(),
            });
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("trajectory parameters"));
        }
    }
    Ok(())
}

impl Trajectory {
    pub fn new(spec: &TrajectorySpec, dof: usize) -> Result<Self> {
        if !(spec.rate > 0.0 && spec.rate.is_finite()) || !(spec.duration > 0.0 && spec.duration.is_finite()) {
            return Err(Error::InvalidParameter("trajectory rate and duration must be positive".into()));
        }
        let profile = match &spec.motion {
            Motion::ConstantAcceleration { q0, qd0, qdd } => {
                check_lengths(dof, &[q0, qd0, qdd])?;
                Profile::ConstantAcceleration {
                    q0: q0.clone(),
                    qd0: qd0.clone(),
                    qdd: qdd.clone(),
                }
            }
            Motion::Sinusoidal {
                offset,
                amplitude,
                frequency,
                phase,
            } => {
                check_lengths(dof, &[offset, amplitude, frequency, phase])?;
                Profile::Sinusoidal {
                    offset: offset.clone(),
                    amplitude: amplitude.clone(),
                    omega: frequency.iter().map(|f| TAU * f).collect(),
                    phase: phase.clone(),
                }
            }
            Motion::QuinticSpline {
                waypoints,
                segment_duration,
            } => {
                if waypoints.is_empty() {
                    return Err(Error::InvalidParameter("quintic spline needs waypoints".into()));
                }
                check_lengths(dof, &waypoints.iter().collect::<Vec<_>>())?;
                if !(*segment_duration > 0.0) {
                    return Err(Error::InvalidParameter("segment duration must be positive".into()));
                }
                Profile::Quintic {
                    waypoints: waypoints.clone(),
                    segment: *segment_duration,
                }
            }
            Motion::RandomQuintic {
                home,
                spread,
                segments,
                segment_duration,
            } => {
                check_lengths(dof, &[home])?;
                if !(*segment_duration > 0.0) || !(*spread >= 0.0) {
                    return Err(Error::InvalidParameter(
                        "random quintic needs positive segment duration and non-negative spread".into(),
                    ));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                let mut waypoints = vec![home.clone()];
                for _ in 0..*segments {
                    waypoints.push(
                        home.iter()
                            .map(|h| h + spread * rng.gen_range(-1.0..=1.0))
                            .collect(),
                    );
                }
                Profile::Quintic {
                    waypoints,
                    segment: *segment_duration,
                }
            }
        };
        Ok(Self { dof, profile })
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn sample(&self, t: f64) -> JointSample {
        let n = self.dof;
        let (mut q, mut qd, mut qdd) = (DVector::zeros(n), DVector::zeros(n), DVector::zeros(n));
        match &self.profile {
            Profile::ConstantAcceleration { q0, qd0, qdd: a } => {
                for i in 0..n {
                    q[i] = q0[i] + qd0[i] * t + 0.5 * a[i] * t * t;
                    qd[i] = qd0[i] + a[i] * t;
                    qdd[i] = a[i];
                }
            }
            Profile::Sinusoidal {
                offset,
                amplitude,
                omega,
                phase,
            } => {
                for i in 0..n {
                    let (s, c) = (omega[i] * t + phase[i]).sin_cos();
                    q[i] = offset[i] + amplitude[i] * s;
                    qd[i] = amplitude[i] * omega[i] * c;
                    qdd[i] = -amplitude[i] * omega[i] * omega[i] * s;
                }
            }
            Profile::Quintic { waypoints, segment } => {
                let last = waypoints.len() - 1;
                let seg = ((t / segment).floor().max(0.0) as usize).min(last);
                if seg == last {
                    for i in 0..n {
                        q[i] = waypoints[last][i];
                    }
                } else {
                    let tau = (t - seg as f64 * segment) / segment;
                    let s = tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
                    let ds = 30.0 * tau * tau * (1.0 - tau) * (1.0 - tau) / segment;
                    let dds = 60.0 * tau * (1.0 - tau) * (1.0 - 2.0 * tau) / (segment * segment);
                    for i in 0..n {
                        let delta = waypoints[seg + 1][i] - waypoints[seg][i];
                        q[i] = waypoints[seg][i] + delta * s;
                        qd[i] = delta * ds;
                        qdd[i] = delta * dds;
                    }
                }
            }
        }
        JointSample { t, q, qd, qdd }
    }
}

/// Everything a simulation run produces.
#[derive(Debug, Clone, Default)]
pub struct Simulation {
    /// Interleaved joint and wrench records, joint first at each tick.
    pub records: Vec<LogRecord>,
    pub truth: Vec<TruthRecord>,
    pub joints: Vec<JointSample>,
    pub kinematics: Vec<SensorKinematics>,
    /// Noise-free, unbiased wrench `D θ` (plus any disturbance) per tick.
    pub clean_wrench: Vec<[f64; 6]>,
}

fn normal(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    if std == 0.0 {
        return 0.0;
    }
    let z: f64 = StandardNormal.sample(rng);
    z * std
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Runs the simulator. The emitted wrench follows `W = D θ − b(t) − n_w`
/// (with `D` optionally perturbed by `n_D`).
pub fn simulate(
    model: &RobotModel,
    traj: &TrajectorySpec,
    noise: &NoiseSpec,
    theta: &InertialParams,
    options: &SimOptions,
) -> Result<Simulation> {
    noise.validate()?;
    let trajectory = Trajectory::new(traj, model.dof())?;
    let gravity = Vector3::from(options.gravity.unwrap_or([0.0; 3]));
    let mut joint_rng = stream(noise.seed, JOINT_STREAM);
    let mut wrench_rng = stream(noise.seed, WRENCH_STREAM);
    let mut data_rng = stream(noise.seed, DATA_MATRIX_STREAM);

    let map = reduction_map(theta);
    let n = traj.sample_count();
    let mut sim = Simulation::default();
    sim.records.reserve(2 * n);
    for k in 0..n {
        let t = traj.sample_time(k);
        let truth = trajectory.sample(t);
        let mut kin = sensor_kinematics(model, &truth.q, &truth.qd, &truth.qdd)?;
        kin.timestamp = t;

        let q = truth.q.iter().map(|v| v + normal(&mut joint_rng, noise.joint_pos_std)).collect();
        let qd = truth.qd.iter().map(|v| v + normal(&mut joint_rng, noise.joint_vel_std)).collect();
        sim.records.push(LogRecord::Joint(JointRecord { t, q, qd }));

        let d = data_matrix(&kin, &gravity)?;
        let mut clean = d.full * theta.as_vector();
        if let Some(dist) = options.disturbance.filter(|d| t >= d.start && t < d.end) {
            clean += Vector6::from(dist.wrench);
        }
        let perturbed = if noise.data_matrix_std > 0.0 {
            let dn = Vector36::from_fn(|_, _| normal(&mut data_rng, noise.data_matrix_std));
            map.b_reduced * dn
        } else {
            Vector6::zeros()
        };
        let bias = noise.bias_at(t);
        let w: [f64; 6] = std::array::from_fn(|i| {
            clean[i] + perturbed[i] - bias[i] - normal(&mut wrench_rng, noise.wrench_std[i])
        });
        sim.records.push(LogRecord::Wrench(WrenchRecord { t, w }));
        sim.truth.push(TruthRecord {
            t,
            b: bias,
            bd: noise.bias_drift,
        });
        sim.clean_wrench.push(clean.into());
        sim.kinematics.push(kin);
        sim.joints.push(truth);
    }
    Ok(sim)
}
