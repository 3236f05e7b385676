//! Inertial data matrix and the bias-filter pseudo-measurement.
//!
//! For a rigid load with inertial parameters `θ` the wrench it exerts on the
//! sensor is linear in `θ`: `W = D θ`, where `D` (6×10) depends only on the
//! sensor frame's proper acceleration, angular velocity and angular
//! acceleration. Moving the data-matrix noise into the observation model uses
//! `D θ = (θᵀ ⊗ I₆) vec(D)`; 24 entries of `D` are structurally zero and are
//! dropped from `vec(D)`, leaving 36.

use nalgebra::{Matrix3, Matrix6, SMatrix, SVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::SensorKinematics;
use crate::lie::{skew, SpatialVector};

pub type Matrix6x10 = SMatrix<f64, 6, 10>;
pub type Matrix6x36 = SMatrix<f64, 6, 36>;
pub type Vector10 = SVector<f64, 10>;
pub type Vector36 = SVector<f64, 36>;

/// Positions of the structurally non-zero entries of `vec(D)` (column-major).
pub const STRUCTURAL_NONZERO: [usize; 36] = [
    0, 1, 2, // m: force rows
    6, 7, 8, 10, 11, // m·c_x
    12, 13, 14, 15, 17, // m·c_y
    18, 19, 20, 21, 22, // m·c_z
    27, 28, 29, // I_xx
    33, 34, 35, // I_xy
    39, 40, 41, // I_xz
    45, 46, 47, // I_yy
    51, 52, 53, // I_yz
    57, 58, 59, // I_zz
];

/// Load inertial parameters
/// `[m, m·c_x, m·c_y, m·c_z, I_xx, I_xy, I_xz, I_yy, I_yz, I_zz]`, with the
/// inertia taken about the sensor frame origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 10]", into = "[f64; 10]")]
pub struct InertialParams {
    theta: Vector10,
}

impl TryFrom<[f64; 10]> for InertialParams {
    type Error = Error;

    fn try_from(v: [f64; 10]) -> Result<Self> {
        InertialParams::new(Vector10::from(v))
    }
}

impl From<InertialParams> for [f64; 10] {
    fn from(p: InertialParams) -> Self {
        p.theta.into()
    }
}

impl InertialParams {
    pub fn new(theta: Vector10) -> Result<Self> {
        if !theta.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("inertial parameters"));
        }
        if theta[0] <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "load mass must be positive, got {}",
                theta[0]
            )));
        }
        let p = Self { theta };
        let min_eig = p.inertia().symmetric_eigenvalues().min();
        if min_eig < -1e-9 {
            return Err(Error::InvalidParameter(format!(
                "inertia tensor is not positive semidefinite (min eigenvalue {min_eig})"
            )));
        }
        Ok(p)
    }

    /// From mass, centre of mass (sensor frame) and the inertia tensor about
    /// the centre of mass; shifts the inertia to the sensor origin.
    pub fn from_body(mass: f64, com: Vector3<f64>, inertia_at_com: Matrix3<f64>) -> Result<Self> {
        let shift = (Matrix3::identity() * com.norm_squared() - com * com.transpose()) * mass;
        let i = inertia_at_com + shift;
        let mc = com * mass;
        Self::new(Vector10::from([
            mass,
            mc.x,
            mc.y,
            mc.z,
            i[(0, 0)],
            i[(0, 1)],
            i[(0, 2)],
            i[(1, 1)],
            i[(1, 2)],
            i[(2, 2)],
        ]))
    }

    pub fn as_vector(&self) -> &Vector10 {
        &self.theta
    }

    pub fn mass(&self) -> f64 {
        self.theta[0]
    }

    /// `m·c`
    pub fn first_moment(&self) -> Vector3<f64> {
        Vector3::new(self.theta[1], self.theta[2], self.theta[3])
    }

    /// Inertia tensor about the sensor origin.
    pub fn inertia(&self) -> Matrix3<f64> {
        let t = &self.theta;
        Matrix3::new(t[4], t[5], t[6], t[5], t[7], t[8], t[6], t[8], t[9])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataMatrix {
    pub full: Matrix6x10,
    /// The 36 structurally non-zero entries of `vec(full)`.
    pub reduced: Vector36,
    pub timestamp: f64,
}

impl DataMatrix {
    /// Rebuilds a data matrix from its reduced vector.
    pub fn from_reduced(reduced: Vector36, timestamp: f64) -> Self {
        let mut full = Matrix6x10::zeros();
        let slice = full.as_mut_slice();
        for (k, &idx) in STRUCTURAL_NONZERO.iter().enumerate() {
            slice[idx] = reduced[k];
        }
        Self {
            full,
            reduced,
            timestamp,
        }
    }
}

fn reduce(full: &Matrix6x10) -> Vector36 {
    let v = full.as_slice();
    Vector36::from_fn(|k, _| v[STRUCTURAL_NONZERO[k]])
}

/// Data matrix from sensor-frame quantities: proper linear acceleration
/// (gravity already removed), angular velocity and angular acceleration.
pub fn data_matrix_sensor_frame(
    accel: &Vector3<f64>,
    omega: &Vector3<f64>,
    alpha: &Vector3<f64>,
    timestamp: f64,
) -> DataMatrix {
    let (wx, wy, wz) = (omega.x, omega.y, omega.z);
    let (ax, ay, az) = (alpha.x, alpha.y, alpha.z);
    let mut d = Matrix6x10::zeros();

    d.fixed_view_mut::<3, 1>(0, 0).copy_from(accel);
    let sw = skew(omega);
    d.fixed_view_mut::<3, 3>(0, 1).copy_from(&(sw * sw + skew(alpha)));
    // -skew(a), diagonal left at zero
    d[(3, 2)] = accel.z;
    d[(3, 3)] = -accel.y;
    d[(4, 1)] = -accel.z;
    d[(4, 3)] = accel.x;
    d[(5, 1)] = accel.y;
    d[(5, 2)] = -accel.x;

    #[rustfmt::skip]
    let torque = SMatrix::<f64, 3, 6>::new(
        ax, ay - wx * wz, az + wx * wy, -wy * wz, wy * wy - wz * wz, wy * wz,
        wx * wz, ax + wy * wz, wz * wz - wx * wx, ay, az - wx * wy, -wx * wz,
        -wx * wy, wx * wx - wy * wy, ax - wy * wz, wx * wy, ay + wx * wz, az,
    );
    d.fixed_view_mut::<3, 6>(3, 4).copy_from(&torque);

    DataMatrix {
        reduced: reduce(&d),
        full: d,
        timestamp,
    }
}

/// Data matrix for base-frame sensor kinematics: the acceleration has
/// `gravity` removed, then everything is rotated into the sensor frame.
pub fn data_matrix(kin: &SensorKinematics, gravity: &Vector3<f64>) -> Result<DataMatrix> {
    if !kin.is_finite() || !gravity.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("sensor kinematics"));
    }
    let rt = kin.pose.rotation.transpose();
    let accel = rt * (kin.linear_acceleration - gravity);
    let omega = rt * kin.angular_velocity;
    let alpha = rt * kin.angular_acceleration;
    Ok(data_matrix_sensor_frame(&accel, &omega, &alpha, kin.timestamp))
}

/// The columns of `θᵀ ⊗ I₆` that multiply structurally non-zero entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionMap {
    pub indices: [usize; 36],
    pub b_reduced: Matrix6x36,
}

impl ReductionMap {
    /// `B_reduced · vec_reduced(D)`, equal to `D θ`.
    pub fn predicted_wrench(&self, d: &DataMatrix) -> Vector6<f64> {
        self.b_reduced * d.reduced
    }
}

pub fn reduction_map(theta: &InertialParams) -> ReductionMap {
    let t = theta.as_vector();
    let mut b = Matrix6x36::zeros();
    for (k, &idx) in STRUCTURAL_NONZERO.iter().enumerate() {
        // column idx of θᵀ⊗I₆ is θ[idx / 6] at row idx % 6
        b[(idx % 6, k)] = t[idx / 6];
    }
    ReductionMap {
        indices: STRUCTURAL_NONZERO,
        b_reduced: b,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrenchSample {
    pub wrench: SpatialVector,
    pub timestamp: f64,
}

/// Covariances for the pseudo-measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementNoise {
    /// Per-entry variances of the reduced data-matrix noise.
    pub data_var: Vector36,
    pub wrench_cov: Matrix6<f64>,
}

impl MeasurementNoise {
    pub fn isotropic(data_std: f64, wrench_std: &[f64; 6]) -> Self {
        Self {
            data_var: Vector36::repeat(data_std * data_std),
            wrench_cov: Matrix6::from_diagonal(&Vector6::from_iterator(
                wrench_std.iter().map(|s| s * s),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoMeasurement {
    /// `B vec(D) − W`
    pub y: Vector6<f64>,
    /// `B Σ_D Bᵀ + Σ_W`
    pub covariance: Matrix6<f64>,
}

pub fn pseudo_measurement(
    d: &DataMatrix,
    map: &ReductionMap,
    wrench: &WrenchSample,
    noise: &MeasurementNoise,
    pairing_tolerance: f64,
) -> Result<PseudoMeasurement> {
    if (d.timestamp - wrench.timestamp).abs() > pairing_tolerance {
        return Err(Error::Pairing {
            wrench: wrench.timestamp,
            kinematics: d.timestamp,
            tolerance: pairing_tolerance,
        });
    }
    let w = wrench.wrench.to_vector6();
    if !w.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("wrench sample"));
    }
    let b = &map.b_reduced;
    let mut scaled = *b;
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= noise.data_var[k];
    }
    Ok(PseudoMeasurement {
        y: map.predicted_wrench(d) - w,
        covariance: scaled * b.transpose() + noise.wrench_cov,
    })
}
