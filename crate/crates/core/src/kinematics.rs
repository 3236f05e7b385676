//! Joint space to sensor-frame kinematics via product of exponentials.
//!
//! Every quantity produced here is expressed in the robot base frame.

use nalgebra::{DVector, Matrix3, Matrix6, Matrix6xX, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::lie::{skew, JointScrewCache, RigidTransform, Screw};

/// `(direction, point)` of each Franka Panda / FR3 joint axis at `q = 0`.
pub const FRANKA_AXES: [([f64; 3], [f64; 3]); 7] = [
    ([0.0, 0.0, 1.0], [0.0, 0.0, 0.0]),
    ([0.0, 1.0, 0.0], [0.0, 0.0, 0.333]),
    ([0.0, 0.0, 1.0], [0.0, 0.0, 0.649]),
    ([0.0, -1.0, 0.0], [0.0825, 0.0, 0.649]),
    ([0.0, 0.0, 1.0], [0.0, 0.0, 1.033]),
    ([0.0, -1.0, 0.0], [0.0, 0.0, 1.033]),
    ([0.0, 0.0, -1.0], [0.088, 0.0, 0.926]),
];

/// Default distance from the last joint-axis point down to the sensor frame.
/// Placeholder value (flange length); override it for a real mounting.
pub const DEFAULT_SENSOR_OFFSET: f64 = 0.107;

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub name: String,
    joints: Vec<JointScrewCache>,
    /// Sensor pose at the zero configuration.
    pub sensor_home: RigidTransform,
}

impl RobotModel {
    pub fn new(name: impl Into<String>, screws: Vec<Screw>, sensor_home: RigidTransform) -> Result<Self> {
        if screws.is_empty() {
            return Err(Error::InvalidParameter("robot model needs at least one joint".into()));
        }
        Ok(Self {
            name: name.into(),
            joints: screws.into_iter().map(JointScrewCache::new).collect(),
            sensor_home,
        })
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[JointScrewCache] {
        &self.joints
    }

    pub fn screw_vectors(&self) -> impl Iterator<Item = Vector6<f64>> + '_ {
        self.joints.iter().map(|j| j.as_6vec)
    }

    fn check_len(&self, what: &'static str, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dof() {
            return Err(Error::Dimension {
                what,
                expected: self.dof(),
                got: v.len(),
            });
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite(what));
        }
        Ok(())
    }
}

/// Franka Panda / FR3 with the sensor `sensor_offset` metres below the
/// last axis point, axes aligned with the base frame.
pub fn franka_model_with_offset(sensor_offset: f64) -> RobotModel {
    let screws = FRANKA_AXES
        .iter()
        .map(|(w, r)| Screw::new(Vector3::from(*w), Vector3::from(*r)).expect("unit axes"))
        .collect();
    let home = RigidTransform::from_translation(Vector3::new(0.088, 0.0, 0.926 - sensor_offset));
    RobotModel::new("franka", screws, home).expect("seven joints")
}

pub fn franka_model() -> RobotModel {
    franka_model_with_offset(DEFAULT_SENSOR_OFFSET)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardKinematics {
    pub sensor_pose: RigidTransform,
    /// Column `j` is joint `j`'s screw in the base frame at the current `q`.
    pub space_jacobian: Matrix6xX<f64>,
    /// Accumulated `exp([S_1]q_1) ··· exp([S_j]q_j)` for each joint.
    pub joint_transforms: Vec<RigidTransform>,
}

/// Product-of-exponentials forward pass.
///
/// Column `j` of the space Jacobian uses the transform accumulated over the
/// joints before `j`; joint `j`'s own rotation does not move its axis.
pub fn forward_pass(model: &RobotModel, q: &DVector<f64>) -> Result<ForwardKinematics> {
    model.check_len("joint positions", q)?;
    let n = model.dof();
    let mut jac = Matrix6xX::zeros(n);
    let mut transforms = Vec::with_capacity(n);
    let mut t = RigidTransform::identity();
    for (j, joint) in model.joints.iter().enumerate() {
        jac.set_column(j, &(t.adjoint() * joint.as_6vec));
        t = t.compose(&joint.exp(q[j]));
        transforms.push(t);
    }
    Ok(ForwardKinematics {
        sensor_pose: t.compose(&model.sensor_home),
        space_jacobian: jac,
        joint_transforms: transforms,
    })
}

/// `[[I, -skew(p)], [0, I]] · J_space`: joint rates to the linear velocity of
/// the point `p` and the angular velocity.
pub fn twist_jacobian(space_jacobian: &Matrix6xX<f64>, sensor_position: &Vector3<f64>) -> Matrix6xX<f64> {
    let mut shift = Matrix6::identity();
    shift
        .fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(-skew(sensor_position)));
    shift * space_jacobian
}

/// Symmetric second-derivative tensor of the twist Jacobian, stored as
/// `N × N` six-vectors (`slice(j, k)` is `H[j, 0:6, k]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Hessian {
    n: usize,
    data: Vec<Vector6<f64>>,
}

impl Hessian {
    pub fn dof(&self) -> usize {
        self.n
    }

    pub fn slice(&self, j: usize, k: usize) -> &Vector6<f64> {
        &self.data[j * self.n + k]
    }

    /// `(H q̇) q̇`
    pub fn contract(&self, qd: &DVector<f64>) -> Vector6<f64> {
        let mut acc = Vector6::zeros();
        for j in 0..self.n {
            let mut row = Vector6::zeros();
            for k in 0..self.n {
                row += self.slice(j, k) * qd[k];
            }
            acc += row * qd[j];
        }
        acc
    }
}

/// Builds the Hessian from the twist Jacobian in `O(N²)`, evaluating the
/// upper triangle `k ≥ j` and mirroring it.
///
/// The linear block is `ω_j × ν_k`. The angular derivative `ω_j × ω_k` only
/// exists for `j < k`, so off the diagonal it is split evenly between the
/// two mirrored slices; the quadratic form `(H q̇) q̇` then counts it once.
pub fn hessian(twist_jacobian: &Matrix6xX<f64>) -> Hessian {
    let n = twist_jacobian.ncols();
    let mut data = vec![Vector6::zeros(); n * n];
    let lin = |c: usize| twist_jacobian.fixed_view::<3, 1>(0, c).into_owned();
    let ang = |c: usize| twist_jacobian.fixed_view::<3, 1>(3, c).into_owned();
    for j in 0..n {
        let w_j: Matrix3<f64> = skew(&ang(j));
        for k in j..n {
            let l = w_j * lin(k);
            let mut a = w_j * ang(k);
            if k != j {
                a *= 0.5;
            }
            let v = Vector6::new(l.x, l.y, l.z, a.x, a.y, a.z);
            data[j * n + k] = v;
            data[k * n + j] = v;
        }
    }
    Hessian { n, data }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicSolution {
    pub forward: ForwardKinematics,
    pub twist_jacobian: Matrix6xX<f64>,
    pub hessian: Hessian,
}

pub fn solve(model: &RobotModel, q: &DVector<f64>) -> Result<KinematicSolution> {
    let forward = forward_pass(model, q)?;
    let jv = twist_jacobian(&forward.space_jacobian, &forward.sensor_pose.translation);
    let hessian = hessian(&jv);
    Ok(KinematicSolution {
        forward,
        twist_jacobian: jv,
        hessian,
    })
}

/// Pose, velocity and acceleration of the sensor frame in the base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorKinematics {
    pub pose: RigidTransform,
    pub linear_velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
    pub linear_acceleration: Vector3<f64>,
    pub angular_acceleration: Vector3<f64>,
    pub timestamp: f64,
}

impl SensorKinematics {
    pub fn is_finite(&self) -> bool {
        let p = &self.pose;
        p.rotation.iter().all(|x| x.is_finite())
            && [
                p.translation,
                self.linear_velocity,
                self.angular_velocity,
                self.linear_acceleration,
                self.angular_acceleration,
            ]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

pub fn sensor_kinematics(
    model: &RobotModel,
    q: &DVector<f64>,
    qd: &DVector<f64>,
    qdd: &DVector<f64>,
) -> Result<SensorKinematics> {
    model.check_len("joint velocities", qd)?;
    model.check_len("joint accelerations", qdd)?;
    let sol = solve(model, q)?;
    let vel = &sol.twist_jacobian * qd;
    let acc = sol.hessian.contract(qd) + &sol.twist_jacobian * qdd;
    Ok(SensorKinematics {
        pose: sol.forward.sensor_pose,
        linear_velocity: vel.fixed_rows::<3>(0).into_owned(),
        angular_velocity: vel.fixed_rows::<3>(3).into_owned(),
        linear_acceleration: acc.fixed_rows::<3>(0).into_owned(),
        angular_acceleration: acc.fixed_rows::<3>(3).into_owned(),
        timestamp: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn q_of(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn franka_screws_match_table() {
        let m = franka_model();
        let s: Vec<_> = m.screw_vectors().collect();
        assert_eq!(s[0], Vector6::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0));
        assert_eq!(s[1], Vector6::new(-0.333, 0.0, 0.0, 0.0, 1.0, 0.0));
        assert_eq!(s[3], Vector6::new(0.649, 0.0, -0.0825, 0.0, -1.0, 0.0));
        assert_eq!(s[5], Vector6::new(1.033, 0.0, 0.0, 0.0, -1.0, 0.0));
        assert_eq!(s[6], Vector6::new(0.0, 0.088, 0.0, 0.0, 0.0, -1.0));
        for ((w, r), sv) in FRANKA_AXES.iter().zip(&s) {
            let w = Vector3::from(*w);
            let lin = -w.cross(&Vector3::from(*r));
            assert_eq!(sv.fixed_rows::<3>(0).into_owned(), lin);
            assert_eq!(sv.fixed_rows::<3>(3).into_owned(), w);
        }
    }

    #[test]
    fn zero_configuration() {
        let m = franka_model();
        let fk = forward_pass(&m, &DVector::zeros(7)).unwrap();
        assert_eq!(fk.sensor_pose, m.sensor_home);
        for (j, s) in m.screw_vectors().enumerate() {
            assert_eq!(fk.space_jacobian.column(j).into_owned(), s);
        }
        assert_eq!(
            fk.space_jacobian.column(0).into_owned(),
            Vector6::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0)
        );
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let m = franka_model();
        assert!(matches!(
            forward_pass(&m, &DVector::zeros(6)),
            Err(Error::Dimension { expected: 7, got: 6, .. })
        ));
        let z = DVector::zeros(7);
        assert!(sensor_kinematics(&m, &z, &DVector::zeros(3), &z).is_err());
    }

    #[test]
    fn full_turn_is_periodic() {
        let m = franka_model();
        let q = q_of(&[0.1, -0.4, 0.3, -1.9, 0.2, 1.4, 0.7]);
        let base = forward_pass(&m, &q).unwrap().sensor_pose.to_homogeneous();
        for j in 0..7 {
            let mut q2 = q.clone();
            q2[j] += TAU;
            let t = forward_pass(&m, &q2).unwrap().sensor_pose.to_homogeneous();
            assert!((t - base).amax() < 1e-9);
        }
    }

    #[test]
    fn twist_jacobian_special_cases() {
        let z = Matrix6xX::zeros(7);
        assert_eq!(twist_jacobian(&z, &Vector3::new(1.0, 2.0, 3.0)), z);
        let m = franka_model();
        let fk = forward_pass(&m, &q_of(&[0.3, 0.2, -0.1, -1.5, 0.0, 1.2, 0.4])).unwrap();
        assert_eq!(twist_jacobian(&fk.space_jacobian, &Vector3::zeros()), fk.space_jacobian);
        let jv = twist_jacobian(&fk.space_jacobian, &fk.sensor_pose.translation);
        assert_eq!(jv.rows(3, 3), fk.space_jacobian.rows(3, 3));
    }

    #[test]
    fn hessian_special_cases() {
        let mut j = Matrix6xX::zeros(3);
        j.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0));
        let h = hessian(&j);
        assert!(h.data.iter().all(|v| *v == Vector6::zeros()));

        let single = Matrix6xX::from_column_slice(&[0.3, -0.2, 0.5, 0.0, 0.6, 0.8]);
        let h = hessian(&single);
        let w = Vector3::new(0.0, 0.6, 0.8);
        let expected_lin = w.cross(&Vector3::new(0.3, -0.2, 0.5));
        assert_eq!(h.slice(0, 0).fixed_rows::<3>(0).into_owned(), skew(&w) * Vector3::new(0.3, -0.2, 0.5));
        assert!((h.slice(0, 0).fixed_rows::<3>(0) - expected_lin).amax() < 1e-15);
        assert_eq!(h.slice(0, 0).fixed_rows::<3>(3).into_owned(), Vector3::zeros());
    }

    #[test]
    fn hessian_is_mirrored_exactly() {
        let m = franka_model();
        let sol = solve(&m, &q_of(&[0.4, -0.3, 0.9, -2.0, 0.5, 1.1, -0.6])).unwrap();
        for j in 0..7 {
            for k in 0..7 {
                assert_eq!(sol.hessian.slice(j, k), sol.hessian.slice(k, j));
            }
        }
    }

    #[test]
    fn stationary_and_pure_acceleration() {
        let m = franka_model();
        let q = q_of(&[0.1, 0.5, -0.2, -1.7, 0.3, 1.6, 0.2]);
        let z = DVector::zeros(7);
        let k = sensor_kinematics(&m, &q, &z, &z).unwrap();
        for v in [k.linear_velocity, k.angular_velocity, k.linear_acceleration, k.angular_acceleration] {
            assert_eq!(v, Vector3::zeros());
        }
        let qdd = q_of(&[0.5, -0.3, 0.2, 0.1, -0.4, 0.6, 0.9]);
        let k = sensor_kinematics(&m, &q, &z, &qdd).unwrap();
        let jv = solve(&m, &q).unwrap().twist_jacobian * &qdd;
        assert_eq!(k.linear_acceleration, jv.fixed_rows::<3>(0).into_owned());
        assert_eq!(k.angular_acceleration, jv.fixed_rows::<3>(3).into_owned());
    }
}
