//! Independent oracles shared by the integration and acceptance tests. None
//! of these call the code path they are used to check.
#![allow(dead_code)]

use ftbias::kinematics::{forward_pass, RobotModel};
use ftbias::lie::vee;
use nalgebra::{DVector, Matrix3, Matrix4, SMatrix, SVector, Vector3, Vector6};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn random_q<R: Rng>(rng: &mut R, n: usize, span: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-span..span))
}

pub fn random_vec3<R: Rng>(rng: &mut R, span: f64) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.gen_range(-span..span))
}

pub fn pose(model: &RobotModel, q: &DVector<f64>) -> Matrix4<f64> {
    forward_pass(model, q).unwrap().sensor_pose.to_homogeneous()
}

/// Space twist `[v; ω]` generated by moving joint `j` alone, from a central
/// difference of the sensor pose: `(dT/dq_j) T⁻¹`.
pub fn fd_space_column(model: &RobotModel, q: &DVector<f64>, j: usize, h: f64) -> Vector6<f64> {
    let mut qp = q.clone();
    let mut qm = q.clone();
    qp[j] += h;
    qm[j] -= h;
    let dt = (pose(model, &qp) - pose(model, &qm)) / (2.0 * h);
    let xi = dt * pose(model, q).try_inverse().unwrap();
    let w = vee(&xi.fixed_view::<3, 3>(0, 0).into_owned());
    let v = xi.fixed_view::<3, 1>(0, 3).into_owned();
    Vector6::new(v.x, v.y, v.z, w.x, w.y, w.z)
}

/// Constant-acceleration joint path through `q0` at `t = 0`.
pub struct Path {
    pub q0: DVector<f64>,
    pub qd0: DVector<f64>,
    pub qdd: DVector<f64>,
}

impl Path {
    pub fn at(&self, t: f64) -> DVector<f64> {
        &self.q0 + &self.qd0 * t + &self.qdd * (0.5 * t * t)
    }

    pub fn rotation(&self, model: &RobotModel, t: f64) -> Matrix3<f64> {
        pose(model, &self.at(t)).fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn position(&self, model: &RobotModel, t: f64) -> Vector3<f64> {
        pose(model, &self.at(t)).fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Base-frame angular velocity from `Ṙ Rᵀ` by central differences.
    pub fn fd_angular_velocity(&self, model: &RobotModel, t: f64, h: f64) -> Vector3<f64> {
        let rd = (self.rotation(model, t + h) - self.rotation(model, t - h)) / (2.0 * h);
        let s = rd * self.rotation(model, t).transpose();
        vee(&(0.5 * (s - s.transpose())))
    }

    pub fn fd_linear_velocity(&self, model: &RobotModel, t: f64, h: f64) -> Vector3<f64> {
        (self.position(model, t + h) - self.position(model, t - h)) / (2.0 * h)
    }

    pub fn fd_linear_acceleration(&self, model: &RobotModel, t: f64, h: f64) -> Vector3<f64> {
        (self.position(model, t + h) - 2.0 * self.position(model, t) + self.position(model, t - h)) / (h * h)
    }

    pub fn fd_angular_acceleration(&self, model: &RobotModel, t: f64, h: f64, inner: f64) -> Vector3<f64> {
        (self.fd_angular_velocity(model, t + h, inner) - self.fd_angular_velocity(model, t - h, inner)) / (2.0 * h)
    }
}

/// Rigid-body Newton–Euler wrench about the sensor origin, all quantities in
/// the sensor frame. `a` is the proper acceleration (gravity removed).
pub fn newton_euler(
    mass: f64,
    first_moment: &Vector3<f64>,
    inertia: &Matrix3<f64>,
    a: &Vector3<f64>,
    omega: &Vector3<f64>,
    alpha: &Vector3<f64>,
) -> Vector6<f64> {
    let f = mass * a + alpha.cross(first_moment) + omega.cross(&omega.cross(first_moment));
    let tau = inertia * alpha + omega.cross(&(inertia * omega)) + first_moment.cross(a);
    Vector6::new(f.x, f.y, f.z, tau.x, tau.y, tau.z)
}

/// Composite Simpson rule for a matrix-valued integrand on `[0, b]`.
pub fn simpson<const R: usize, const C: usize>(
    f: impl Fn(f64) -> SMatrix<f64, R, C>,
    b: f64,
    intervals: usize,
) -> SMatrix<f64, R, C> {
    assert!(intervals % 2 == 0);
    let h = b / intervals as f64;
    let mut acc = f(0.0) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(i as f64 * h) * w;
    }
    acc * (h / 3.0)
}

/// Draws from `N(mean, cov)` through a Cholesky factor.
pub fn gaussian<const D: usize, R: Rng>(
    rng: &mut R,
    mean: &SVector<f64, D>,
    cov: &SMatrix<f64, D, D>,
) -> SVector<f64, D> {
    let l = cov.cholesky().expect("positive definite").l();
    let z = SVector::<f64, D>::from_fn(|_, _| rng.sample(StandardNormal));
    mean + l * z
}

/// `eᵀ P⁻¹ e`.
pub fn nees<const D: usize>(e: &SVector<f64, D>, p: &SMatrix<f64, D, D>) -> f64 {
    (e.transpose() * p.try_inverse().expect("invertible") * e)[(0, 0)]
}
