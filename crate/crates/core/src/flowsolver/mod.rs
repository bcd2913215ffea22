//! Dense SE(3) field fitting and camera/deformation decomposition.
//!
//! A field assigns one rigid transform to every pixel of frame 1, mapping the
//! back-projected point into the camera of frame 2. [`solve_field`] fits it to
//! target flow and inverse depth with a block-rigid pass followed by a
//! smoothness-regularized per-pixel pass, [`estimate_camera`] extracts the
//! dominant rigid motion and [`decompose`] splits off the per-pixel remainder.

mod config;
mod consensus;
mod decompose;
mod residual;
mod solve;

pub use config::{SolverConfig, WeightMap};
pub use consensus::estimate_camera;
pub use decompose::{decompose, decompose_field, Decomposition, DeformationStats};
pub use residual::{huber, pixel_model, residuals, residuals_with, Residuals};
pub use solve::{solve_field, solve_field_report, SolveReport};
