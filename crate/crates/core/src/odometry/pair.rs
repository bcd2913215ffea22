use super::{IterationEstimate, OdometryConfig};
use crate::camera::{
    bilinear_sample, bilinear_taps, correspondence_map, DepthMap, FlowField, Intrinsics, InverseDepthMap, NormalMap,
    Raster,
};
use crate::flowsolver::{decompose, estimate_camera, solve_field_report, Decomposition, SolverConfig, WeightMap};
use crate::geometry::{log_se3, Field, RigidTransform, TransformField};
use crate::{par, Result};

/// Result of one frame pair.
#[derive(Clone, Debug)]
pub struct FrameEstimate {
    /// Rigid part `Tc` of the scene flow (frame-`t` camera to frame-`t+1`
    /// camera).
    pub camera: RigidTransform,
    /// Camera motion `Tc⁻¹`, i.e. the pose of camera `t + 1` in camera `t`.
    pub relative_pose: RigidTransform,
    /// `Tc` with the per-pixel deformation `Td`.
    pub decomposition: Decomposition,
    /// Full scene-flow field `T = Tc · Td`.
    pub field: TransformField,
    /// Robust data cost after the last accepted outer iteration.
    pub final_cost: f64,
    pub iterations_run: usize,
    /// Robust data cost after each accepted outer iteration; non-increasing.
    pub cost_history: Vec<f64>,
    /// Per-iteration flow, inverse depth and camera, for the diagnostic loss.
    pub trace: Vec<IterationEstimate>,
}

impl FrameEstimate {
    pub fn deformation(&self) -> &TransformField {
        &self.decomposition.deformation
    }
}

/// Largest angle between the normals of the taps of an inverse-depth sample
/// for the sample to be trusted. Interpolating across a crease is not exact
/// even where inverse depth is continuous.
pub const CREASE_ANGLE: f64 = 15.0 * std::f64::consts::PI / 180.0;

/// Camera change (twist norm) below which the rigid alignment passes of
/// [`estimate_pair_from`] end.
pub const ALIGNMENT_TOL: f64 = 1e-10;

/// Inverse depth of frame 2 at the current correspondences.
///
/// The reciprocal is taken per pixel before interpolating: inverse depth is
/// affine in pixel coordinates on a plane, so bilinear interpolation of it is
/// exact there, while interpolated depth is not. With `normals2`, samples
/// whose taps straddle a crease are marked invalid.
fn sample_target_invdepth(
    inv2: &InverseDepthMap,
    normals2: Option<&NormalMap>,
    flow: &FlowField,
    intr: &Intrinsics,
) -> InverseDepthMap {
    let (w, h) = intr.dims();
    let min_cos = CREASE_ANGLE.cos();
    let values = par::map_range(intr.pixel_count(), |i| {
        let u = intr.pixel(i).offset(&flow.get(i)?);
        if let Some(normals) = normals2 {
            let (taps, n) = bilinear_taps(w, h, u)?;
            let first = normals.get(taps[0])?;
            for &t in &taps[1..n] {
                if !(normals.get(t)?.dot(&first) >= min_cos) {
                    return None;
                }
            }
        }
        bilinear_sample(inv2, u)
    });
    Raster::from_options(w, h, values, 0.0).expect("dims")
}

/// [`estimate_pair_from`] starting from the identity.
pub fn estimate_pair(
    intr: &Intrinsics,
    depth1: &DepthMap,
    depth2: &DepthMap,
    target_flow: &FlowField,
    cfg: &OdometryConfig,
) -> Result<FrameEstimate> {
    estimate_pair_from(intr, depth1, depth2, target_flow, None, cfg, &RigidTransform::identity())
}

/// Estimates scene flow and camera motion between two frames, starting from
/// the constant field `init_camera`. `normals2` (frame 2, unit length)
/// enables the crease test on inverse-depth targets; see [`CREASE_ANGLE`].
///
/// Each outer iteration recomputes correspondences, resamples the inverse
/// depth of frame 2 there, runs one solver pass and re-extracts `Tc`. The
/// first passes are rigid until `Tc` moves less than [`ALIGNMENT_TOL`] (or
/// half of the iterations are spent, or a pass raises the cost). Any other
/// outer iteration that would raise the cost is discarded and ends the loop.
pub fn estimate_pair_from(
    intr: &Intrinsics,
    depth1: &DepthMap,
    depth2: &DepthMap,
    target_flow: &FlowField,
    normals2: Option<&NormalMap>,
    cfg: &OdometryConfig,
    init_camera: &RigidTransform,
) -> Result<FrameEstimate> {
    cfg.validate()?;
    let dims = intr.dims();
    depth1.ensure_dims(dims)?;
    depth2.ensure_dims(dims)?;
    target_flow.ensure_dims(dims)?;
    if let Some(n) = normals2 {
        n.ensure_dims(dims)?;
    }
    let (w, h) = dims;

    let usable: Vec<bool> = (0..intr.pixel_count())
        .map(|i| depth1.is_valid(i) && target_flow.is_valid(i))
        .collect();
    let inv2 = depth2.to_inverse_depth();
    let mut field = TransformField::filled(w, h, *init_camera);
    let mut camera = *init_camera;
    let (mut flow_k, _) = correspondence_map(intr, depth1, &field)?;
    let mut history: Vec<f64> = Vec::new();
    let mut trace = Vec::new();

    // Rigid alignment passes come first, for at most half of the budget.
    // Inverse-depth targets sampled at stale correspondences disagree with
    // the flow, and a per-pixel fit to them drifts along directions the data
    // cannot see; once the camera has settled the targets are consistent.
    let align_cfg = SolverConfig {
        rigid: true,
        ..cfg.solver.clone()
    };
    let align_budget = if cfg.solver.rigid { 0 } else { cfg.iterations / 2 };
    let mut aligning = align_budget > 0;

    for k in 0..cfg.iterations {
        aligning &= k < align_budget;
        let solver_cfg = if aligning { &align_cfg } else { &cfg.solver };
        let target_inv = sample_target_invdepth(&inv2, normals2, &flow_k, intr);
        let weights = WeightMap::new(Field::from_vec(
            w,
            h,
            (0..usable.len())
                .map(|i| {
                    let f = if usable[i] { 1.0 } else { 0.0 };
                    [f, f, if usable[i] && target_inv.is_valid(i) { 1.0 } else { 0.0 }]
                })
                .collect(),
        )?)?;
        let report = solve_field_report(intr, depth1, target_flow, &target_inv, &weights, &field, solver_cfg)?;
        let cost = report.data_cost;
        if history.last().is_some_and(|&prev| cost > prev) {
            if aligning {
                aligning = false;
                continue;
            }
            break;
        }
        field = report.field;
        let previous = camera;
        camera = estimate_camera(&field, &weights)?;
        let (flow_new, inv_new) = correspondence_map(intr, depth1, &field)?;
        trace.push(IterationEstimate {
            flow: flow_new.clone(),
            flow_pre: None,
            invdepth: inv_new,
            camera,
        });
        flow_k = flow_new;
        let prev = history.last().copied();
        history.push(cost);
        let converged = cost == 0.0 || prev.is_some_and(|p| p - cost <= cfg.solver.convergence_tol * p);
        if aligning {
            let moved = log_se3(&previous.inverse().compose(&camera)).map_or(f64::INFINITY, |x| x.to_vector().norm());
            aligning = !(converged || moved <= ALIGNMENT_TOL);
        } else if converged {
            break;
        }
    }

    let decomposition = decompose(&field, &camera);
    Ok(FrameEstimate {
        camera,
        relative_pose: camera.inverse(),
        decomposition,
        field,
        final_cost: history.last().copied().unwrap_or(0.0),
        iterations_run: history.len(),
        cost_history: history,
        trace,
    })
}
