//! Geometric core of flow-based odometry in deformable scenes.
//!
//! A dense scene flow between two RGB-D frames is modelled as one rigid-body
//! transform per pixel. The field is fitted to optical flow and inverse-depth
//! observations by robust damped Gauss–Newton and then split into a single
//! camera motion and a per-pixel deformation residual.
//!
//! Besides the solver the crate ships:
//!
//! * [`synth`], a procedural generator of deforming desk-scale scenes with
//!   exact depth, flow, normal and pose labels,
//! * [`odometry`], a frame-to-frame tracking loop and a supervised loss scorer,
//! * [`evaluation`], trajectory alignment, RPE/ATE, palindrome sequences and
//!   the ground-truth-free palindrome trajectory error.
//!
//! Per-pixel sweeps run on rayon when the `parallel` feature is enabled
//! (default). All reductions are performed in row-major order so results are
//! bit-identical regardless of the thread count.

pub mod camera;
pub mod checksum;
pub mod error;
pub mod evaluation;
pub mod flowsolver;
pub mod geometry;
pub mod odometry;
pub mod par;
pub mod synth;

pub use error::{Error, Result};
