use std::time::Instant;

use drk_core::camera::{DepthMap, FlowField, Intrinsics};
use drk_core::evaluation::{rpe, Trajectory};
use drk_core::flowsolver::{residuals_with, SolverConfig, WeightMap};
use drk_core::geometry::{pose_distance, RigidTransform, TransformField};
use drk_core::odometry::{estimate_pair, estimate_pair_from, run_sequence, split_palindrome, OdometryConfig};
use drk_core::synth::{generate_sequence, render_depth, render_flow, render_normals, SceneConfig, ScenePreset};
use nalgebra::Vector2;

#[test]
fn identical_frames_give_identity() {
    let intr = Intrinsics::with_fov(32, 32, 1.0).unwrap();
    let depth = DepthMap::from_fn(32, 32, |x, y| 2.0 + 0.01 * x as f64 + 0.02 * y as f64);
    let flow = FlowField::from_fn(32, 32, |_, _| Vector2::zeros());
    let est = estimate_pair(&intr, &depth, &depth, &flow, &OdometryConfig::default()).unwrap();
    assert_eq!(est.final_cost, 0.0);
    let (dt, dr) = pose_distance(&est.relative_pose, &RigidTransform::identity());
    assert!(dt < 1e-12 && dr < 1e-12);
}

#[test]
fn rigid_pair_matches_ground_truth() {
    let scene = SceneConfig::new(ScenePreset::Box, 0, 30, 64, 64, 3).build().unwrap();
    let intr = scene.intrinsics;
    let (d1, d2) = (render_depth(&scene, 6).unwrap(), render_depth(&scene, 7).unwrap());
    let flow = render_flow(&scene, 6, 7).unwrap();
    let normals = render_normals(&scene, 7).unwrap();
    let t = Instant::now();
    let est = estimate_pair_from(&intr, &d1, &d2, &flow, Some(&normals), &OdometryConfig::default(), &RigidTransform::identity()).unwrap();
    eprintln!("pair took {:?}, {} iterations", t.elapsed(), est.iterations_run);
    let gt = scene.trajectory[6].inverse().compose(&scene.trajectory[7]);
    let (dt, dr) = pose_distance(&est.relative_pose, &gt);
    assert!(dt < 1e-6 && dr < 1e-6, "{dt} {dr}");
    assert!(est.decomposition.residual_stats.p50 < 1e-6);
    for w in est.cost_history.windows(2) {
        assert!(w[1] <= w[0]);
    }
}

#[test]
fn deforming_pair_full_fit_beats_rigid_fit() {
    let scene = SceneConfig::new(ScenePreset::Box, 3, 30, 32, 32, 3).build().unwrap();
    let intr = scene.intrinsics;
    let (d1, d2) = (render_depth(&scene, 2).unwrap(), render_depth(&scene, 3).unwrap());
    let flow = render_flow(&scene, 2, 3).unwrap();
    let full = estimate_pair(&intr, &d1, &d2, &flow, &OdometryConfig::default()).unwrap();
    let rigid_cfg = OdometryConfig {
        solver: SolverConfig::rigid(),
        ..Default::default()
    };
    let rigid = estimate_pair(&intr, &d1, &d2, &flow, &rigid_cfg).unwrap();
    let inv = full.trace.last().unwrap().invdepth.clone();
    let weights = WeightMap::from_validity(&d1, &flow).unwrap();
    let cost = |f: &TransformField| {
        residuals_with(&intr, &d1, f, &flow, &inv, &weights, &SolverConfig::default()).unwrap().cost
    };
    // flow part of the residual is what both fits try to explain
    assert!(cost(&full.field) < cost(&rigid.field), "{} vs {}", cost(&full.field), cost(&rigid.field));
    for w in full.cost_history.windows(2) {
        assert!(w[1] <= w[0]);
    }
}

#[test]
fn two_frame_and_static_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SceneConfig::new(ScenePreset::Corridor, 0, 2, 32, 32, 5);
    cfg.closed_loop = false;
    let scene = cfg.build().unwrap();
    generate_sequence(&scene, dir.path()).unwrap();
    let run = run_sequence(dir.path(), &OdometryConfig::default()).unwrap();
    assert_eq!(run.trajectory.len(), 2);
    let gt = scene.trajectory[0].inverse().compose(&scene.trajectory[1]);
    let (dt, dr) = pose_distance(run.trajectory.get(1).unwrap(), &gt);
    assert!(dt < 1e-6 && dr < 1e-6, "{dt} {dr}");
    assert!(run.diagnostics_csv().starts_with("frame,cost,td_p50,td_p90,iters\n"));

    // closed loop of two frames: both poses coincide
    let dir = tempfile::tempdir().unwrap();
    let scene = SceneConfig::new(ScenePreset::Sheet, 0, 3, 32, 32, 5).build().unwrap();
    let mut still = scene.clone();
    still.trajectory = vec![scene.trajectory[0]; 3];
    generate_sequence(&still, dir.path()).unwrap();
    let run = run_sequence(dir.path(), &OdometryConfig::default()).unwrap();
    for p in run.trajectory.poses() {
        let (dt, dr) = pose_distance(p, &RigidTransform::identity());
        assert!(dt < 1e-12 && dr < 1e-12);
    }
}

#[test]
fn missing_scene_fails_in_oracle_mode() {
    let dir = tempfile::tempdir().unwrap();
    let scene = SceneConfig::new(ScenePreset::Box, 0, 3, 16, 16, 1).build().unwrap();
    generate_sequence(&scene, dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("scene.json")).unwrap();
    assert!(run_sequence(dir.path(), &OdometryConfig::default()).is_err());
    let file_cfg = OdometryConfig {
        flow_source: drk_core::odometry::FlowSource::File,
        ..Default::default()
    };
    assert_eq!(run_sequence(dir.path(), &file_cfg).unwrap().trajectory.len(), 3);
}

#[test]
fn palindrome_run_splits_into_halves() {
    let dir = tempfile::tempdir().unwrap();
    let pal = tempfile::tempdir().unwrap();
    let scene = SceneConfig::new(ScenePreset::Box, 0, 8, 32, 32, 2).build().unwrap();
    generate_sequence(&scene, dir.path()).unwrap();
    drk_core::evaluation::palindrome(dir.path(), pal.path()).unwrap();
    let run = run_sequence(pal.path(), &OdometryConfig::default()).unwrap();
    assert!(run.palindrome);
    assert_eq!(run.trajectory.len(), 16);
    let (fwd, back) = split_palindrome(&run.trajectory).unwrap();
    let gt = Trajectory::from_poses(scene.trajectory.iter().copied());
    let r = rpe(&fwd, &gt).unwrap();
    assert!(r.translation_rmse < 1e-6);
    let report = drk_core::evaluation::apte(
        &fwd.relative_poses(),
        &back.relative_poses(),
        drk_core::evaluation::ApteMode::Loopwise,
    )
    .unwrap();
    assert!(report.mean < 1e-6, "{}", report.mean);
}
