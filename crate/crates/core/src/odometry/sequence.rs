use std::fmt::Write as _;
use std::path::Path;

use super::{estimate_pair_from, FlowSource, InitMode, OdometryConfig};
use crate::evaluation::Trajectory;
use crate::geometry::RigidTransform;
use crate::synth::Dataset;
use crate::{Error, Result};

pub const DIAGNOSTICS_HEADER: &str = "frame,cost,td_p50,td_p90,iters";
/// File-name suffixes of the two halves of a palindrome trajectory.
pub const FORWARD_SUFFIX: &str = "forward";
pub const BACKWARD_SUFFIX: &str = "backward";

/// One `diagnostics.csv` row; `frame` is the first frame of the pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub frame: usize,
    pub cost: f64,
    pub td_p50: f64,
    pub td_p90: f64,
    pub iters: usize,
}

#[derive(Clone, Debug)]
pub struct SequenceRun {
    pub trajectory: Trajectory,
    /// Camera motion of each pair.
    pub relative_poses: Vec<RigidTransform>,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub palindrome: bool,
}

impl SequenceRun {
    pub fn diagnostics_csv(&self) -> String {
        let mut s = format!("{DIAGNOSTICS_HEADER}\n");
        for r in &self.diagnostics {
            let _ = writeln!(s, "{},{},{},{},{}", r.frame, r.cost, r.td_p50, r.td_p90, r.iters);
        }
        s
    }
}

/// Runs frame-to-frame odometry over a dataset (or palindrome) directory.
pub fn run_sequence(dataset_dir: &Path, cfg: &OdometryConfig) -> Result<SequenceRun> {
    cfg.validate()?;
    let ds = Dataset::open(dataset_dir)?;
    let n = ds.len();
    if n < 2 {
        return Err(Error::EmptyInput(format!("{} has fewer than 2 frames", dataset_dir.display())));
    }
    let intr = *ds.intrinsics();
    let depth = |p: usize| match cfg.flow_source {
        FlowSource::Oracle => ds.oracle_depth(p),
        FlowSource::File => ds.depth(p),
    };
    let normals = |p: usize| match cfg.flow_source {
        FlowSource::Oracle => ds.oracle_normals(p),
        FlowSource::File => ds.normals(p),
    };

    let mut relative = Vec::with_capacity(n - 1);
    let mut diagnostics = Vec::with_capacity(n - 1);
    let mut previous = RigidTransform::identity();
    let mut depth1 = depth(0)?;
    for p in 0..n - 1 {
        let depth2 = depth(p + 1)?;
        let normals2 = normals(p + 1)?;
        let flow = match cfg.flow_source {
            FlowSource::Oracle => ds.oracle_flow(p)?,
            FlowSource::File => ds.flow(p)?,
        };
        let init = match cfg.init_mode {
            InitMode::Identity => RigidTransform::identity(),
            InitMode::Previous => previous,
        };
        let est = estimate_pair_from(&intr, &depth1, &depth2, &flow, Some(&normals2), cfg, &init).map_err(|e| e.at_frame(p))?;
        log::debug!("pair {p}: cost {:.3e} after {} iterations", est.final_cost, est.iterations_run);
        let stats = est.decomposition.residual_stats;
        diagnostics.push(DiagnosticsRow {
            frame: p,
            cost: est.final_cost,
            td_p50: stats.p50,
            td_p90: stats.p90,
            iters: est.iterations_run,
        });
        previous = est.camera;
        relative.push(est.relative_pose);
        depth1 = depth2;
    }

    Ok(SequenceRun {
        trajectory: Trajectory::from_relative(&relative),
        relative_poses: relative,
        diagnostics,
        palindrome: ds.is_palindrome(),
    })
}

/// Splits a `2N`-pose palindrome trajectory into its forward and backward
/// halves (`N` poses each, ids `0..N-1`); the turnaround step is dropped.
pub fn split_palindrome(trajectory: &Trajectory) -> Result<(Trajectory, Trajectory)> {
    let poses: Vec<RigidTransform> = trajectory.poses().copied().collect();
    if poses.len() < 4 || poses.len() % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "a palindrome trajectory has an even length of at least 4, got {}",
            poses.len()
        )));
    }
    let n = poses.len() / 2;
    Ok((
        Trajectory::from_poses(poses[..n].iter().copied()),
        Trajectory::from_poses(poses[n..].iter().copied()),
    ))
}
