//! SO(3)/SE(3)/Sim(3) kernel and dense per-pixel fields of rigid transforms.
//!
//! Twists are ordered rotation first: `(ω, ρ)`. All group elements are plain
//! `Copy` values; every operation is a pure function.

mod field;
mod se3;
mod sim3;

pub use field::{Field, TransformField, TwistField};
pub use se3::{exp_se3, log_se3, pose_distance, skew, RigidTransform, Twist, LOG_BRANCH_MARGIN};
pub use sim3::Similarity;
