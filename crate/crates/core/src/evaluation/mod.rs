//! Trajectory alignment and error metrics.

mod align;
mod apte;
mod metrics;
mod palindrome;
mod trajectory;

pub use align::{align, align_points, AlignMode, AlignmentResult};
pub use apte::{apte, scale_relative_poses, ApteMode, ApteReport};
pub use metrics::{ate, rpe, RpeReport};
pub use palindrome::{palindrome, palindrome_indices, PalindromeManifest, PalindromeStep, PALINDROME_FILE};
pub use trajectory::Trajectory;
