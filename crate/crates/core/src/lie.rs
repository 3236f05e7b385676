//! Screw and SE(3) algebra.
//!
//! Twists, accelerations and wrenches are stacked `[linear; angular]`, and
//! screw axes follow the same ordering: `S = [-ω̂ × r; ω̂]`.

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rotations whose orthonormality error exceeds this are projected back onto SO(3).
pub const ORTHONORMAL_DRIFT_TOLERANCE: f64 = 1e-9;

/// Cross-product matrix: `skew(v) * u == v × u`.
#[inline]
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    #[rustfmt::skip]
    let m = Matrix3::new(
        0.0, -v.z, v.y,
        v.z, 0.0, -v.x,
        -v.y, v.x, 0.0,
    );
    m
}

/// Inverse of [`skew`] for an antisymmetric matrix.
#[inline]
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// A rigid transform stored as a rotation/translation pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform, rejecting rotations that are not proper orthonormal
    /// to within `1e-10`.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let t = Self {
            rotation,
            translation,
        };
        if t.orthonormality_error() > 1e-10 || (rotation.determinant() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(
                "rotation is not a proper orthonormal matrix".into(),
            ));
        }
        if !translation.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("translation"));
        }
        Ok(t)
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// `‖RᵀR − I‖∞` (maximum absolute row sum).
    pub fn orthonormality_error(&self) -> f64 {
        let e = self.rotation.transpose() * self.rotation - Matrix3::identity();
        e.row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// SE(3) product `self · other`. The resulting rotation is re-projected
    /// onto SO(3) only when it has drifted past [`ORTHONORMAL_DRIFT_TOLERANCE`].
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        let mut out = RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        };
        if out.orthonormality_error() > ORTHONORMAL_DRIFT_TOLERANCE {
            out.rotation = nearest_rotation(&out.rotation);
        }
        out
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// 6×6 adjoint `[[R, skew(p)·R], [0, R]]` acting on `[linear; angular]` twists.
    pub fn adjoint(&self) -> Matrix6<f64> {
        let r = &self.rotation;
        let pr = skew(&self.translation) * r;
        let mut ad = Matrix6::zeros();
        ad.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
        ad.fixed_view_mut::<3, 3>(0, 3).copy_from(&pr);
        ad.fixed_view_mut::<3, 3>(3, 3).copy_from(r);
        ad
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }
}

impl std::ops::Mul for RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

/// Polar-decomposition projection of `m` onto SO(3).
fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return *m;
    };
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    r
}

/// Unit screw axis of a revolute joint: direction `ω̂` through the point `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Screw {
    direction: Vector3<f64>,
    point: Vector3<f64>,
}

impl Screw {
    pub fn new(direction: Vector3<f64>, point: Vector3<f64>) -> Result<Self> {
        if !direction.iter().chain(point.iter()).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("screw axis"));
        }
        let norm = direction.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "screw direction must be a unit vector, got norm {norm}"
            )));
        }
        Ok(Self {
            direction: direction / norm,
            point,
        })
    }

    pub fn direction(&self) -> &Vector3<f64> {
        &self.direction
    }

    pub fn point(&self) -> &Vector3<f64> {
        &self.point
    }

    /// `[-ω̂ × r; ω̂]`
    pub fn as_6vec(&self) -> Vector6<f64> {
        let lin = -(skew(&self.direction) * self.point);
        Vector6::new(
            lin.x,
            lin.y,
            lin.z,
            self.direction.x,
            self.direction.y,
            self.direction.z,
        )
    }
}

/// Per-joint terms of the exponential map that do not depend on the joint angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointScrewCache {
    pub screw: Screw,
    pub skew_omega: Matrix3<f64>,
    pub skew_omega_sq: Matrix3<f64>,
    /// `-skew(ω̂)·r`
    pub translation_seed: Vector3<f64>,
    pub as_6vec: Vector6<f64>,
}

impl JointScrewCache {
    pub fn new(screw: Screw) -> Self {
        let skew_omega = skew(screw.direction());
        Self {
            screw,
            skew_omega,
            skew_omega_sq: skew_omega * skew_omega,
            translation_seed: -(skew_omega * screw.point()),
            as_6vec: screw.as_6vec(),
        }
    }

    /// Exponential map `exp([S] q)`.
    pub fn exp(&self, q: f64) -> RigidTransform {
        screw_exp(self, q)
    }
}

/// Exponential map of a unit revolute screw scaled by `q` radians (Rodrigues form).
pub fn screw_exp(cache: &JointScrewCache, q: f64) -> RigidTransform {
    let (s, c) = q.sin_cos();
    let k = &cache.skew_omega;
    let k2 = &cache.skew_omega_sq;
    let rotation = Matrix3::identity() + k * s + k2 * (1.0 - c);
    let g = Matrix3::identity() * q + k * (1.0 - c) + k2 * (q - s);
    RigidTransform {
        rotation,
        translation: g * cache.translation_seed,
    }
}

pub fn adjoint(t: &RigidTransform) -> Matrix6<f64> {
    t.adjoint()
}

pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialKind {
    Twist,
    Acceleration,
    Wrench,
}

impl SpatialKind {
    fn name(self) -> &'static str {
        match self {
            SpatialKind::Twist => "twist",
            SpatialKind::Acceleration => "acceleration",
            SpatialKind::Wrench => "wrench",
        }
    }
}

/// A `[linear; angular]` 6-vector tagged with what it represents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialVector {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
    kind: SpatialKind,
}

impl SpatialVector {
    pub fn new(kind: SpatialKind, linear: Vector3<f64>, angular: Vector3<f64>) -> Self {
        Self {
            linear,
            angular,
            kind,
        }
    }

    pub fn twist(linear: Vector3<f64>, angular: Vector3<f64>) -> Self {
        Self::new(SpatialKind::Twist, linear, angular)
    }

    pub fn acceleration(linear: Vector3<f64>, angular: Vector3<f64>) -> Self {
        Self::new(SpatialKind::Acceleration, linear, angular)
    }

    pub fn wrench(force: Vector3<f64>, torque: Vector3<f64>) -> Self {
        Self::new(SpatialKind::Wrench, force, torque)
    }

    pub fn from_vector6(kind: SpatialKind, v: &Vector6<f64>) -> Self {
        Self::new(
            kind,
            v.fixed_rows::<3>(0).into_owned(),
            v.fixed_rows::<3>(3).into_owned(),
        )
    }

    pub fn kind(&self) -> SpatialKind {
        self.kind
    }

    pub fn to_vector6(&self) -> Vector6<f64> {
        let (l, a) = (&self.linear, &self.angular);
        Vector6::new(l.x, l.y, l.z, a.x, a.y, a.z)
    }

    fn check_kind(&self, other: &SpatialVector) -> Result<()> {
        if self.kind != other.kind {
            return Err(Error::KindMismatch {
                left: self.kind.name(),
                right: other.kind.name(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &SpatialVector) -> Result<SpatialVector> {
        self.check_kind(other)?;
        Ok(Self::new(
            self.kind,
            self.linear + other.linear,
            self.angular + other.angular,
        ))
    }

    pub fn try_sub(&self, other: &SpatialVector) -> Result<SpatialVector> {
        self.check_kind(other)?;
        Ok(Self::new(
            self.kind,
            self.linear - other.linear,
            self.angular - other.angular,
        ))
    }

    pub fn scale(&self, s: f64) -> SpatialVector {
        Self::new(self.kind, self.linear * s, self.angular * s)
    }
}
