//! Per-joint Kalman filter over `[q, q̇, q̈]`.
//!
//! Three process models are available. All of them share the observation
//! model `y = [q̄, q̄̇]`, i.e. joint encoders report position and velocity.

use log::warn;
use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Process model for the joint state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProcessModel {
    /// Discrete constant-velocity-plus-acceleration transition with a
    /// time-invariant diagonal noise covariance.
    NonIntegratedAccelNoise {
        var_q: f64,
        var_qd: f64,
        var_qdd: f64,
    },
    /// Continuous white noise entering through the acceleration, with
    /// power spectral density `psd`.
    IntegratedAccelNoise { psd: f64 },
    /// Continuous white noise entering through the jerk, with power spectral
    /// density `psd`.
    IntegratedJerkNoise { psd: f64 },
}

impl Default for ProcessModel {
    fn default() -> Self {
        ProcessModel::IntegratedJerkNoise { psd: 1.0 }
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInterval(dt))
    }
}

impl ProcessModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ProcessModel::NonIntegratedAccelNoise {
                var_q,
                var_qd,
                var_qdd,
            } => [var_q, var_qd, var_qdd].iter().all(|v| *v > 0.0 && v.is_finite()),
            ProcessModel::IntegratedAccelNoise { psd } | ProcessModel::IntegratedJerkNoise { psd } => {
                psd > 0.0 && psd.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "process noise parameters must be positive: {self:?}"
            )))
        }
    }

    pub fn transition_matrix(&self, dt: f64) -> Result<Matrix3<f64>> {
        transition_matrix(self, dt)
    }

    pub fn process_noise(&self, dt: f64) -> Result<Matrix3<f64>> {
        process_noise(self, dt)
    }
}

pub fn transition_matrix(model: &ProcessModel, dt: f64) -> Result<Matrix3<f64>> {
    check_dt(dt)?;
    let half_dt2 = match model {
        ProcessModel::NonIntegratedAccelNoise { .. } => 0.0,
        _ => 0.5 * dt * dt,
    };
    #[rustfmt::skip]
    let a = Matrix3::new(
        1.0, dt, half_dt2,
        0.0, 1.0, dt,
        0.0, 0.0, 1.0,
    );
    Ok(a)
}

/// Discrete process noise covariance for an interval of `dt` seconds.
pub fn process_noise(model: &ProcessModel, dt: f64) -> Result<Matrix3<f64>> {
    check_dt(dt)?;
    let q = match *model {
        ProcessModel::NonIntegratedAccelNoise {
            var_q,
            var_qd,
            var_qdd,
        } => Matrix3::from_diagonal(&Vector3::new(var_q, var_qd, var_qdd)),
        ProcessModel::IntegratedAccelNoise { psd } => {
            let (dt2, dt3) = (dt * dt, dt * dt * dt);
            #[rustfmt::skip]
            let m = Matrix3::new(
                dt3 / 3.0, dt2 / 2.0, 0.0,
                dt2 / 2.0, dt, 0.0,
                0.0, 0.0, 0.0,
            );
            m * psd
        }
        ProcessModel::IntegratedJerkNoise { psd } => {
            let dt2 = dt * dt;
            let dt3 = dt2 * dt;
            let dt4 = dt3 * dt;
            let dt5 = dt4 * dt;
            #[rustfmt::skip]
            let m = Matrix3::new(
                dt5 / 20.0, dt4 / 8.0, dt3 / 6.0,
                dt4 / 8.0, dt3 / 3.0, dt2 / 2.0,
                dt3 / 6.0, dt2 / 2.0, dt,
            );
            m * psd
        }
    };
    Ok(q)
}

/// Initial variances for a joint assumed to start at rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialCovariance {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
}

impl Default for InitialCovariance {
    fn default() -> Self {
        Self {
            position: 1e-6,
            velocity: 1.0,
            acceleration: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    /// `[q, q̇, q̈]`
    pub mean: Vector3<f64>,
    pub covariance: Matrix3<f64>,
    pub timestamp: f64,
}

impl JointState {
    pub fn position(&self) -> f64 {
        self.mean[0]
    }

    pub fn velocity(&self) -> f64 {
        self.mean[1]
    }

    pub fn acceleration(&self) -> f64 {
        self.mean[2]
    }
}

/// Stationary initial state at `q0` with the default velocity/acceleration
/// variances and timestamp zero.
pub fn init_state(q0: f64, initial_pos_var: f64) -> Result<JointState> {
    let cov = InitialCovariance {
        position: initial_pos_var,
        ..InitialCovariance::default()
    };
    init_state_with(q0, &cov, 0.0)
}

pub fn init_state_with(q0: f64, cov: &InitialCovariance, timestamp: f64) -> Result<JointState> {
    if ![cov.position, cov.velocity, cov.acceleration]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite())
    {
        return Err(Error::InvalidParameter(
            "initial joint variances must be positive".into(),
        ));
    }
    if !q0.is_finite() || !timestamp.is_finite() {
        return Err(Error::NonFinite("initial joint position"));
    }
    Ok(JointState {
        mean: Vector3::new(q0, 0.0, 0.0),
        covariance: Matrix3::from_diagonal(&Vector3::new(
            cov.position,
            cov.velocity,
            cov.acceleration,
        )),
        timestamp,
    })
}

pub fn predict(state: &JointState, model: &ProcessModel, dt: f64) -> Result<JointState> {
    let a = transition_matrix(model, dt)?;
    let q = process_noise(model, dt)?;
    let p = a * state.covariance * a.transpose() + q;
    Ok(JointState {
        mean: a * state.mean,
        covariance: (p + p.transpose()) * 0.5,
        timestamp: state.timestamp + dt,
    })
}

/// Encoder reading for one joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointMeasurement {
    pub position: f64,
    pub velocity: f64,
    /// Variances `[η_q², η_q̇²]`.
    pub noise: [f64; 2],
    pub timestamp: f64,
}

/// Tolerance when checking a measurement's timestamp against the state's.
const TIMESTAMP_SLACK: f64 = 1e-9;

/// Kalman correction with `C = [[1,0,0],[0,1,0]]`, Joseph-form covariance.
pub fn update(state: &JointState, meas: &JointMeasurement) -> Result<JointState> {
    if !(meas.position.is_finite() && meas.velocity.is_finite() && meas.timestamp.is_finite()) {
        return Err(Error::RejectedMeasurement("non-finite joint measurement".into()));
    }
    if !meas.noise.iter().all(|v| *v > 0.0 && v.is_finite()) {
        return Err(Error::RejectedMeasurement(
            "measurement variances must be positive".into(),
        ));
    }
    if (meas.timestamp - state.timestamp).abs() > TIMESTAMP_SLACK {
        return Err(Error::TimestampMismatch {
            state: state.timestamp,
            measurement: meas.timestamp,
        });
    }
    #[rustfmt::skip]
    let c = Matrix2x3::new(
        1.0, 0.0, 0.0,
        0.0, 1.0, 0.0,
    );
    let r = Matrix2::from_diagonal(&Vector2::new(meas.noise[0], meas.noise[1]));
    let p = &state.covariance;
    let s = c * p * c.transpose() + r;
    let s_inv = s
        .cholesky()
        .ok_or(Error::IllConditioned("joint innovation covariance"))?
        .inverse();
    let k = p * c.transpose() * s_inv;
    let innovation = Vector2::new(meas.position, meas.velocity) - c * state.mean;
    let ikc = Matrix3::identity() - k * c;
    let joseph = ikc * p * ikc.transpose() + k * r * k.transpose();
    Ok(JointState {
        mean: state.mean + k * innovation,
        covariance: (joseph + joseph.transpose()) * 0.5,
        timestamp: state.timestamp,
    })
}

/// Streaming filter for a single joint.
#[derive(Debug, Clone)]
pub struct JointFilter {
    model: ProcessModel,
    initial: InitialCovariance,
    measurement_noise: [f64; 2],
    fixed_dt: Option<f64>,
    state: Option<JointState>,
    dropped: usize,
}

impl JointFilter {
    pub fn new(
        model: ProcessModel,
        initial: InitialCovariance,
        measurement_noise: [f64; 2],
        fixed_dt: Option<f64>,
    ) -> Result<Self> {
        model.validate()?;
        if !measurement_noise.iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(
                "joint measurement variances must be positive".into(),
            ));
        }
        if let Some(dt) = fixed_dt {
            check_dt(dt)?;
        }
        Ok(Self {
            model,
            initial,
            measurement_noise,
            fixed_dt,
            state: None,
            dropped: 0,
        })
    }

    pub fn state(&self) -> Option<&JointState> {
        self.state.as_ref()
    }

    /// Number of measurements dropped for arriving out of order.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Feeds one encoder sample. The first sample initializes the filter at
    /// rest; later samples are predicted to and then corrected. Returns
    /// `false` when the sample was dropped for a non-increasing timestamp.
    pub fn step(&mut self, position: f64, velocity: f64, t: f64) -> Result<bool> {
        if !(position.is_finite() && velocity.is_finite() && t.is_finite()) {
            return Err(Error::RejectedMeasurement("non-finite joint sample".into()));
        }
        let Some(prev) = self.state else {
            self.state = Some(init_state_with(position, &self.initial, t)?);
            return Ok(true);
        };
        if t <= prev.timestamp {
            self.dropped += 1;
            warn!(
                "dropping joint sample at t={t}: not after previous sample at t={}",
                prev.timestamp
            );
            return Ok(false);
        }
        let dt = self.fixed_dt.unwrap_or(t - prev.timestamp);
        let mut predicted = predict(&prev, &self.model, dt)?;
        predicted.timestamp = t;
        let meas = JointMeasurement {
            position,
            velocity,
            noise: self.measurement_noise,
            timestamp: t,
        };
        self.state = Some(update(&predicted, &meas)?);
        Ok(true)
    }

    /// The state predicted forward to `t` without consuming a measurement.
    pub fn predicted_at(&self, t: f64) -> Result<Option<JointState>> {
        let Some(s) = self.state else {
            return Ok(None);
        };
        let dt = t - s.timestamp;
        if dt == 0.0 {
            return Ok(Some(s));
        }
        predict(&s, &self.model, dt).map(Some)
    }
}
