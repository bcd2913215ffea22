//! Frame-to-frame deformable odometry built on the field solver, and the
//! multi-iteration diagnostic loss used to score it against ground truth.
//!
//! Conventions: the scene-flow field of a pair maps points from the camera of
//! frame `t` into the camera of frame `t + 1`. Its rigid part `Tc` is thus
//! `W_{t+1}⁻¹ W_t` for world-from-camera poses `W`, and the camera motion
//! reported as [`FrameEstimate::relative_pose`] is `Tc⁻¹ = W_t⁻¹ W_{t+1}`.
//! Trajectories chain these motions from the identity.

mod config;
mod loss;
mod pair;
mod sequence;

pub use config::{FlowSource, InitMode, LossWeights, OdometryConfig};
pub use loss::{diagnostic_loss, IterationEstimate, LossBreakdown, LossTargets};
pub use pair::{estimate_pair, estimate_pair_from, FrameEstimate, ALIGNMENT_TOL, CREASE_ANGLE};
pub use sequence::{
    run_sequence, split_palindrome, DiagnosticsRow, SequenceRun, BACKWARD_SUFFIX, DIAGNOSTICS_HEADER, FORWARD_SUFFIX,
};
