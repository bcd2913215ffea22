//! Procedural deformable scenes with exact labels.
//!
//! Scenes are built from rectangular height-field patches. Each patch deforms
//! along its normal with a separable sinusoid whose amplitude depends on the
//! difficulty level; camera trajectories are closed loops perturbed by an
//! Ornstein–Uhlenbeck walk in se(3) whose strength also grows with level.
//! Depth is obtained by analytic ray casting and flow by tracking the hit
//! material point to the next frame, so labels are exact up to rounding.

mod dataset;
mod noise;
mod render;
mod scene;

pub use dataset::{
    frame_file, generate_sequence, Dataset, SequenceManifest, INTRINSICS_FILE, MANIFEST_FILE, SCENE_FILE,
    TRAJECTORY_GT_FILE,
};
pub use noise::{drunken_trajectory, NoiseParams};
pub use render::{render_depth, render_flow, render_frame, render_normals, surface_ids, trace, FrameLabels, Hit, OCCLUSION_TOLERANCE};
pub use scene::{
    DeformationDescriptor, LevelParams, SceneConfig, ScenePreset, SceneSpec, Surface, FPS, MAX_LEVEL,
};
