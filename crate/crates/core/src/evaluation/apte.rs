//! Absolute palindrome trajectory error.
//!
//! Odometry is run over a sequence and over its reversal. For a loop length
//! `k` the first `k` forward relative motions are chained from the identity,
//! followed by backward relative motions; with perfect odometry the camera
//! returns to the identity and `APTE_k` (the norm of the final translation)
//! is zero. Products are taken left-to-right in index order:
//!
//! * loopwise: `(B_{N−k+1} ⋯ B_N) · (F_1 ⋯ F_k)`, the backward legs that
//!   retrace exactly the first `k` forward legs;
//! * literal: `(B_1 ⋯ B_k) · (F_1 ⋯ F_k)`.
//!
//! Both agree at `k = N`.

use crate::geometry::RigidTransform;
use crate::{Error, Result};

const STATIC_TRANSLATION: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ApteMode {
    #[default]
    Loopwise,
    Literal,
}

impl std::str::FromStr for ApteMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "loopwise" => Ok(ApteMode::Loopwise),
            "literal" => Ok(ApteMode::Literal),
            _ => Err(format!("unknown APTE mode {s:?} (expected loopwise or literal)")),
        }
    }
}

impl std::fmt::Display for ApteMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ApteMode::Loopwise => "loopwise",
            ApteMode::Literal => "literal",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApteReport {
    pub mode: ApteMode,
    /// `APTE_k` for `k = 1..=N`, meters.
    pub per_loop: Vec<f64>,
    pub mean: f64,
    /// More than half of the relative motions are (near) zero translations,
    /// for which APTE is trivially small.
    pub static_warning: bool,
}

impl ApteReport {
    /// `k,apte_k` rows followed by a summary line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,apte_k\n");
        for (k, v) in self.per_loop.iter().enumerate() {
            s.push_str(&format!("{},{}\n", k + 1, v));
        }
        s.push_str(&format!("# mode={} convention=right-chained mean,{}\n", self.mode, self.mean));
        s
    }
}

pub fn apte(forward: &[RigidTransform], backward: &[RigidTransform], mode: ApteMode) -> Result<ApteReport> {
    if forward.len() != backward.len() {
        return Err(Error::InvalidArgument(format!(
            "forward has {} relative poses, backward has {}",
            forward.len(),
            backward.len()
        )));
    }
    let n = forward.len();
    if n == 0 {
        return Err(Error::EmptyInput("no relative poses".into()));
    }

    let mut fwd = RigidTransform::identity();
    let mut back = RigidTransform::identity();
    let mut per_loop = Vec::with_capacity(n);
    for k in 1..=n {
        fwd = fwd.compose(&forward[k - 1]);
        back = match mode {
            ApteMode::Loopwise => backward[n - k].compose(&back),
            ApteMode::Literal => back.compose(&backward[k - 1]),
        };
        per_loop.push(back.compose(&fwd).translation().norm());
    }
    let mean = per_loop.iter().sum::<f64>() / n as f64;
    let still = forward
        .iter()
        .chain(backward)
        .filter(|t| t.translation().norm() < STATIC_TRANSLATION)
        .count();
    Ok(ApteReport {
        mode,
        per_loop,
        mean,
        static_warning: 2 * still > forward.len() + backward.len(),
    })
}

/// Multiplies every relative translation by `scale` (e.g. the Sim(3) scale of
/// the trajectory against a reference).
pub fn scale_relative_poses(poses: &[RigidTransform], scale: f64) -> Vec<RigidTransform> {
    poses
        .iter()
        .map(|p| RigidTransform::new(*p.rotation(), p.translation() * scale))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{align, AlignMode, Trajectory};
    use crate::geometry::{exp_se3, Twist};
    use nalgebra::Vector3;

    fn legs(n: usize) -> Vec<RigidTransform> {
        (0..n)
            .map(|i| {
                let a = i as f64;
                exp_se3(&Twist::new(
                    Vector3::new(0.02 * a.sin(), 0.05, -0.01 * a),
                    Vector3::new(0.1, 0.02 * a.cos(), 0.03),
                ))
                .unwrap()
            })
            .collect()
    }

    fn retrace(fwd: &[RigidTransform]) -> Vec<RigidTransform> {
        fwd.iter().rev().map(RigidTransform::inverse).collect()
    }

    #[test]
    fn perfect_palindrome_is_zero() {
        let f = legs(29);
        let r = apte(&f, &retrace(&f), ApteMode::Loopwise).unwrap();
        assert!(r.per_loop.iter().all(|v| *v < 1e-12));
        assert!(r.mean < 1e-12);
        assert!(!r.static_warning);
    }

    #[test]
    fn hand_example() {
        let step = RigidTransform::from_translation(Vector3::new(1.0, 0.0, 0.0));
        let id = RigidTransform::identity();
        let r = apte(&[step, step], &[id, id], ApteMode::Loopwise).unwrap();
        assert_eq!(r.per_loop, vec![1.0, 2.0]);
        assert_eq!(r.mean, 1.5);
    }

    #[test]
    fn modes_agree_on_full_loop() {
        let f = legs(12);
        let b: Vec<_> = legs(12).iter().map(|t| t.compose(&f[3])).collect();
        let lw = apte(&f, &b, ApteMode::Loopwise).unwrap();
        let lt = apte(&f, &b, ApteMode::Literal).unwrap();
        assert!((lw.per_loop[11] - lt.per_loop[11]).abs() < 1e-12);
        // literal does not close shorter loops even for perfect odometry
        let perfect = apte(&f, &retrace(&f), ApteMode::Literal).unwrap();
        assert!(perfect.per_loop[0] > 1e-3);
        assert!(perfect.per_loop[11] < 1e-12);
    }

    #[test]
    fn length_mismatch_and_static_warning() {
        let f = legs(3);
        assert!(matches!(apte(&f, &f[..2], ApteMode::Loopwise), Err(Error::InvalidArgument(_))));
        let id = vec![RigidTransform::identity(); 4];
        assert!(apte(&id, &id, ApteMode::Loopwise).unwrap().static_warning);
    }

    #[test]
    fn sim3_scale_before_apte() {
        // Estimates at half scale: after rescaling with the Sim(3) scale
        // against the reference the loop errors double back to the reference.
        let f = legs(10);
        let noisy_back: Vec<_> = retrace(&f)
            .iter()
            .map(|t| t.compose(&RigidTransform::from_translation(Vector3::new(0.01, 0.0, 0.0))))
            .collect();
        let reference = Trajectory::from_relative(&f);
        let half_f = scale_relative_poses(&f, 0.5);
        let half_b = scale_relative_poses(&noisy_back, 0.5);
        let s = align(&Trajectory::from_relative(&half_f), &reference, AlignMode::Sim3)
            .unwrap()
            .transform
            .scale();
        assert!((s - 2.0).abs() < 1e-9);
        let scaled = apte(&scale_relative_poses(&half_f, s), &scale_relative_poses(&half_b, s), ApteMode::Loopwise).unwrap();
        let full = apte(&f, &noisy_back, ApteMode::Loopwise).unwrap();
        assert!((scaled.mean - full.mean).abs() < 1e-9);
    }
}
