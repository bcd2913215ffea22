use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use super::Trajectory;
use crate::geometry::Similarity;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlignMode {
    Se3,
    Sim3,
}

impl std::str::FromStr for AlignMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "se3" => Ok(AlignMode::Se3),
            "sim3" => Ok(AlignMode::Sim3),
            _ => Err(format!("unknown alignment mode {s:?} (expected se3 or sim3)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignmentResult {
    /// Maps estimated positions onto ground truth.
    pub transform: Similarity,
    pub residual_rmse: f64,
    pub matched: usize,
}

/// Closed-form least-squares `dst ≈ s R src + t` (Umeyama). The scale is
/// fixed to 1 in [`AlignMode::Se3`].
pub fn align_points(src: &[Vector3<f64>], dst: &[Vector3<f64>], mode: AlignMode) -> Result<AlignmentResult> {
    if src.len() != dst.len() {
        return Err(Error::InvalidArgument(format!(
            "point sets differ in size: {} vs {}",
            src.len(),
            dst.len()
        )));
    }
    let n = src.len();
    if n < 3 {
        return Err(Error::DegenerateAlignment(format!("{n} matched positions, need at least 3")));
    }
    let nf = n as f64;
    let mu_s = src.iter().sum::<Vector3<f64>>() / nf;
    let mu_d = dst.iter().sum::<Vector3<f64>>() / nf;

    let mut cov = Matrix3::zeros();
    let mut var_s = 0.0;
    for (s, d) in src.iter().zip(dst) {
        let (a, b) = (s - mu_s, d - mu_d);
        cov += b * a.transpose();
        var_s += a.norm_squared();
    }
    cov /= nf;
    var_s /= nf;

    let svd = cov.svd(true, true);
    let sv = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    if !(sv[order[0]] > 0.0) || sv[order[1]] <= 1e-12 * sv[order[0]] {
        return Err(Error::DegenerateAlignment(
            "positions are collinear or coincident".into(),
        ));
    }
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let mut sign = Matrix3::identity();
    if (u.determinant() * v_t.determinant()) < 0.0 {
        // flip the axis of the smallest singular value
        sign[(order[2], order[2])] = -1.0;
    }
    let r = u * sign * v_t;
    let scale = match mode {
        AlignMode::Se3 => 1.0,
        AlignMode::Sim3 => (sv.component_mul(&sign.diagonal())).sum() / var_s,
    };
    let rotation = UnitQuaternion::from_matrix(&r);
    let translation = mu_d - rotation * mu_s * scale;
    let transform = Similarity::new(scale, rotation, translation)?;

    let sq: f64 = src
        .iter()
        .zip(dst)
        .map(|(s, d)| (transform.act(s) - d).norm_squared())
        .sum();
    Ok(AlignmentResult {
        transform,
        residual_rmse: (sq / nf).sqrt(),
        matched: n,
    })
}

/// Aligns estimated camera positions to ground truth over shared frame ids.
pub fn align(est: &Trajectory, gt: &Trajectory, mode: AlignMode) -> Result<AlignmentResult> {
    let pairs = est.matched(gt);
    let src: Vec<_> = pairs.iter().map(|(_, e, _)| *e.translation()).collect();
    let dst: Vec<_> = pairs.iter().map(|(_, _, g)| *g.translation()).collect();
    align_points(&src, &dst, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{exp_se3, RigidTransform, Twist};

    fn helix(n: usize) -> Trajectory {
        Trajectory::from_poses((0..n).map(|i| {
            let a = i as f64 * 0.4;
            RigidTransform::from_translation(Vector3::new(a.cos(), a.sin(), 0.1 * a))
        }))
    }

    #[test]
    fn identical_trajectories() {
        let t = helix(10);
        let r = align(&t, &t, AlignMode::Se3).unwrap();
        assert!(r.residual_rmse < 1e-12);
        assert!((r.transform.translation()).norm() < 1e-12);
        assert!(r.transform.rotation().angle() < 1e-7);
    }

    #[test]
    fn scaled_copy() {
        let gt = helix(12);
        let est = Trajectory::new(
            gt.entries()
                .iter()
                .map(|(i, p)| (*i, RigidTransform::new(*p.rotation(), p.translation() * 2.0)))
                .collect(),
        )
        .unwrap();
        let sim = align(&est, &gt, AlignMode::Sim3).unwrap();
        assert!((sim.transform.scale() - 0.5).abs() < 1e-12);
        assert!(sim.residual_rmse < 1e-12);
        let se = align(&est, &gt, AlignMode::Se3).unwrap();
        assert_eq!(se.transform.scale(), 1.0);
        assert!(se.residual_rmse > 0.1);
    }

    #[test]
    fn rigid_offset_is_recovered() {
        let gt = helix(8);
        let g = exp_se3(&Twist::new(Vector3::new(0.3, -0.2, 1.1), Vector3::new(2.0, -1.0, 0.5))).unwrap();
        let est = gt.left_compose(&g);
        let r = align(&est, &gt, AlignMode::Se3).unwrap();
        assert!(r.residual_rmse < 1e-9);
        let (dt, dr) = crate::geometry::pose_distance(&r.transform.rigid(), &g.inverse());
        assert!(dt < 1e-9 && dr < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        let line = Trajectory::from_poses(
            (0..5).map(|i| RigidTransform::from_translation(Vector3::new(i as f64, 0.0, 0.0))),
        );
        assert!(matches!(align(&line, &line, AlignMode::Sim3), Err(Error::DegenerateAlignment(_))));
        let two = helix(2);
        assert!(matches!(align(&two, &two, AlignMode::Se3), Err(Error::DegenerateAlignment(_))));
    }

    #[test]
    fn reflection_is_not_returned() {
        // Planar points; the optimal proper rotation must have det +1.
        let src: Vec<_> = (0..6).map(|i| Vector3::new(i as f64, (i * i) as f64 * 0.1, 0.0)).collect();
        let dst: Vec<_> = src.iter().map(|p| Vector3::new(p.x, p.y, 0.0)).collect();
        let r = align_points(&src, &dst, AlignMode::Se3).unwrap();
        assert!(r.residual_rmse < 1e-12);
        assert!(r.transform.rotation().to_rotation_matrix().matrix().determinant() > 0.0);
    }
}
