use nalgebra::{Matrix3, Matrix6, Quaternion, UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rotations closer than this to π are rejected by [`log_se3`].
pub const LOG_BRANCH_MARGIN: f64 = 1e-6;

// Below this angle the closed forms are replaced by Taylor expansions.
const SMALL_ANGLE: f64 = 1e-2;

/// Element of se(3): `rotation` in radians (axis-angle), `translation` in meters.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub rotation: Vector3<f64>,
    pub translation: Vector3<f64>,
}

impl Twist {
    pub fn new(rotation: Vector3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// `(ωx, ωy, ωz, ρx, ρy, ρz)`.
    pub fn to_vector(&self) -> Vector6<f64> {
        let (w, r) = (self.rotation, self.translation);
        Vector6::new(w.x, w.y, w.z, r.x, r.y, r.z)
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            rotation: Vector3::new(v[0], v[1], v[2]),
            translation: Vector3::new(v[3], v[4], v[5]),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.rotation * s, self.translation * s)
    }

    pub fn is_finite(&self) -> bool {
        self.rotation.iter().chain(self.translation.iter()).all(|x| x.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }

    /// Sum of absolute values of all six coordinates.
    pub fn l1_norm(&self) -> f64 {
        self.to_vector().lp_norm(1)
    }
}

impl std::ops::Neg for Twist {
    type Output = Twist;
    fn neg(self) -> Twist {
        Twist::new(-self.rotation, -self.translation)
    }
}

impl std::ops::Add for Twist {
    type Output = Twist;
    fn add(self, rhs: Twist) -> Twist {
        Twist::new(self.rotation + rhs.rotation, self.translation + rhs.translation)
    }
}

impl std::ops::Sub for Twist {
    type Output = Twist;
    fn sub(self, rhs: Twist) -> Twist {
        Twist::new(self.rotation - rhs.rotation, self.translation - rhs.translation)
    }
}

/// Element of SE(3), stored as a unit quaternion and a translation.
///
/// Acts on points as `p ↦ R p + t`. Used both for world-from-camera poses and
/// for the point transforms of a scene-flow field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    rotation: UnitQuaternion<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Builds a transform from raw quaternion components (Hamilton, `w` last),
    /// normalizing the quaternion.
    pub fn from_parts(translation: [f64; 3], quat_xyzw: [f64; 4]) -> Result<Self> {
        let [x, y, z, w] = quat_xyzw;
        let q = Quaternion::new(w, x, y, z);
        let n = q.norm();
        if !n.is_finite() || n < 1e-12 || translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "invalid pose: t = {translation:?}, q = {quat_xyzw:?}"
            )));
        }
        Ok(Self::new(
            UnitQuaternion::new_unchecked(q / n),
            Vector3::from(translation),
        ))
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(UnitQuaternion::identity(), t)
    }

    pub fn from_rotation(r: UnitQuaternion<f64>) -> Self {
        Self::new(r, Vector3::zeros())
    }

    #[inline]
    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    #[inline]
    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    /// `self ∘ other`, i.e. `other` is applied first. The quaternion is
    /// renormalized.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        let q = self.rotation.quaternion() * other.rotation.quaternion();
        RigidTransform {
            rotation: UnitQuaternion::new_normalize(q),
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let r = self.rotation.inverse();
        RigidTransform {
            rotation: r,
            translation: -(r * self.translation),
        }
    }

    #[inline]
    pub fn act(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let q = self.rotation.quaternion();
        let s = q.imag().norm();
        2.0 * s.atan2(q.w.abs())
    }

    /// Adjoint matrix for `(ω, ρ)` twists: `T exp(ξ) T⁻¹ = exp(Ad_T ξ)`.
    pub fn adjoint(&self) -> Matrix6<f64> {
        let r = self.rotation_matrix();
        let tr = skew(&self.translation) * r;
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
        m.fixed_view_mut::<3, 3>(3, 0).copy_from(&tr);
        m
    }

    pub fn is_finite(&self) -> bool {
        self.rotation.coords.iter().chain(self.translation.iter()).all(|x| x.is_finite())
    }

    /// Inverse of [`to_array`](Self::to_array) that keeps the quaternion
    /// components bit-for-bit; the caller guarantees unit norm.
    pub(crate) fn from_array_unchecked(a: [f64; 7]) -> Self {
        Self::new(
            UnitQuaternion::new_unchecked(Quaternion::new(a[6], a[3], a[4], a[5])),
            Vector3::new(a[0], a[1], a[2]),
        )
    }

    /// `[tx, ty, tz, qx, qy, qz, qw]`.
    pub fn to_array(&self) -> [f64; 7] {
        let q = self.rotation.quaternion();
        let t = self.translation;
        [t.x, t.y, t.z, q.i, q.j, q.k, q.w]
    }
}

impl std::ops::Mul for RigidTransform {
    type Output = RigidTransform;
    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Coefficients `(sinθ/θ, (1−cosθ)/θ², (θ−sinθ)/θ³)`.
fn rodrigues_coefficients(theta: f64) -> (f64, f64, f64) {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        let t4 = t2 * t2;
        let t6 = t4 * t2;
        (
            1.0 - t2 / 6.0 + t4 / 120.0 - t6 / 5040.0,
            0.5 - t2 / 24.0 + t4 / 720.0 - t6 / 40320.0,
            1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0 - t6 / 362880.0,
        )
    } else {
        let (s, c) = theta.sin_cos();
        let t2 = theta * theta;
        (s / theta, (1.0 - c) / t2, (theta - s) / (t2 * theta))
    }
}

/// Exponential map se(3) → SE(3).
pub fn exp_se3(xi: &Twist) -> Result<RigidTransform> {
    if !xi.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite twist {xi:?}")));
    }
    let w = xi.rotation;
    let theta = w.norm();

    // q = (cos θ/2, sin(θ/2)/θ · ω)
    let half = 0.5 * theta;
    let sinc_half = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        0.5 - t2 / 48.0 + t2 * t2 / 3840.0
    } else {
        half.sin() / theta
    };
    let q = Quaternion::new(half.cos(), w.x * sinc_half, w.y * sinc_half, w.z * sinc_half);
    let rotation = UnitQuaternion::new_normalize(q);

    let (_, b, c) = rodrigues_coefficients(theta);
    let k = skew(&w);
    let v = Matrix3::identity() + k * b + k * k * c;
    Ok(RigidTransform::new(rotation, v * xi.translation))
}

/// Logarithm map SE(3) → se(3) on the principal branch.
pub fn log_se3(t: &RigidTransform) -> Result<Twist> {
    let mut q = *t.rotation().quaternion();
    if q.w < 0.0 {
        q = -q;
    }
    let v = q.imag();
    let s = v.norm();
    let theta = 2.0 * s.atan2(q.w);
    if theta > std::f64::consts::PI - LOG_BRANCH_MARGIN {
        return Err(Error::BranchAmbiguity { angle: theta });
    }
    let factor = if s < 1e-8 {
        // θ/s for tiny s, w ≈ 1
        2.0 / q.w * (1.0 - s * s / (3.0 * q.w * q.w))
    } else {
        theta / s
    };
    let w = v * factor;

    let k = skew(&w);
    let d = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        let (a, b, _) = rodrigues_coefficients(theta);
        (1.0 - a / (2.0 * b)) / (theta * theta)
    };
    let v_inv = Matrix3::identity() - k * 0.5 + k * k * d;
    Ok(Twist::new(w, v_inv * t.translation()))
}

/// `(‖translation(a⁻¹b)‖, angle(a⁻¹b))`.
pub fn pose_distance(a: &RigidTransform, b: &RigidTransform) -> (f64, f64) {
    let e = a.inverse().compose(b);
    (e.translation().norm(), e.angle())
}
