use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::RigidTransform;
use crate::{Error, Result};

/// Element of Sim(3); acts on points as `s R p + t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    scale: f64,
    rotation: UnitQuaternion<f64>,
    translation: Vector3<f64>,
}

impl Similarity {
    pub fn new(scale: f64, rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("similarity scale must be > 0, got {scale}")));
        }
        Ok(Self {
            scale,
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_rigid(t: &RigidTransform) -> Self {
        Self {
            scale: 1.0,
            rotation: *t.rotation(),
            translation: *t.translation(),
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Rigid part, dropping the scale.
    pub fn rigid(&self) -> RigidTransform {
        RigidTransform::new(self.rotation, self.translation)
    }

    pub fn act(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p * self.scale + self.translation
    }

    /// Maps a world-from-camera pose through the similarity: the camera centre
    /// is transformed as a point and the orientation is rotated.
    pub fn transform_pose(&self, pose: &RigidTransform) -> RigidTransform {
        RigidTransform::new(
            UnitQuaternion::new_normalize(self.rotation.quaternion() * pose.rotation().quaternion()),
            self.act(pose.translation()),
        )
    }

    pub fn compose(&self, other: &Similarity) -> Similarity {
        Similarity {
            scale: self.scale * other.scale,
            rotation: UnitQuaternion::new_normalize(
                self.rotation.quaternion() * other.rotation.quaternion(),
            ),
            translation: self.act(&other.translation),
        }
    }

    pub fn inverse(&self) -> Similarity {
        let r = self.rotation.inverse();
        let s = 1.0 / self.scale;
        Similarity {
            scale: s,
            rotation: r,
            translation: -(r * self.translation) * s,
        }
    }
}
