use super::LossWeights;
use crate::camera::{FlowField, InverseDepthMap};
use crate::geometry::{log_se3, RigidTransform};
use crate::{Error, Result};

/// Outputs of one outer iteration `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationEstimate {
    /// `O^k`, flow induced by the field.
    pub flow: FlowField,
    /// Intermediate flow `O^{k,pre}`, when a front-end provides one.
    pub flow_pre: Option<FlowField>,
    /// `Λ₂^k`, inverse depth of the moved points.
    pub invdepth: InverseDepthMap,
    /// `Tc^k`.
    pub camera: RigidTransform,
}

/// Ground truth for the diagnostic loss.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossTargets {
    pub flow: Option<FlowField>,
    pub invdepth: Option<InverseDepthMap>,
    /// `T̄c`.
    pub camera: Option<RigidTransform>,
}

/// Weighted terms of the loss; `total` is their sum.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub pose_pre: f64,
    pub flow: f64,
    pub flow_pre: f64,
    pub depth: f64,
    pub pose: f64,
    pub total: f64,
    /// `γ^{M−k}`-weighted contribution of each iteration.
    pub per_iteration: Vec<f64>,
}

fn pose_error(a: &RigidTransform, b: &RigidTransform) -> Result<f64> {
    // a·a⁻¹ rounds to a few ulps off the identity
    if a == b {
        return Ok(0.0);
    }
    Ok(log_se3(&a.compose(&b.inverse()))?.l1_norm())
}

fn flow_l1(est: &FlowField, gt: &FlowField) -> Result<f64> {
    est.ensure_dims(gt.dims())?;
    Ok((0..est.len())
        .filter(|&i| est.is_valid(i) && gt.is_valid(i))
        .map(|i| (est.value(i) - gt.value(i)).abs().sum())
        .sum())
}

/// `L = L_pose^pre + Σ_k γ^{M−k} (L_flow^k + L_depth^k + L_pose^k)` with
/// L1 flow (plus `w1`-weighted intermediate flow when present), `w2`-weighted
/// L1 inverse depth, `w3`-weighted pose log-norm and `w4`-weighted initial
/// pose log-norm. Sums run over pixels valid in both estimate and truth.
pub fn diagnostic_loss(
    iterations: &[IterationEstimate],
    camera_pre: &RigidTransform,
    targets: &LossTargets,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    weights.validate()?;
    if iterations.is_empty() {
        return Err(Error::EmptyInput("diagnostic loss needs at least one iteration".into()));
    }
    let missing = |what: &str| Error::UnavailableLabel(format!("ground-truth {what} is required"));
    let gt_flow = targets.flow.as_ref().ok_or_else(|| missing("flow"))?;
    let gt_inv = targets.invdepth.as_ref().ok_or_else(|| missing("inverse depth"))?;
    let gt_cam = targets.camera.as_ref().ok_or_else(|| missing("camera motion"))?;

    let m = iterations.len();
    let mut out = LossBreakdown {
        pose_pre: weights.w4 * pose_error(camera_pre, gt_cam)?,
        ..Default::default()
    };
    for (idx, it) in iterations.iter().enumerate() {
        let decay = weights.gamma.powi((m - 1 - idx) as i32);
        let flow = flow_l1(&it.flow, gt_flow)?;
        let flow_pre = match &it.flow_pre {
            Some(f) => weights.w1 * flow_l1(f, gt_flow)?,
            None => 0.0,
        };
        it.invdepth.ensure_dims(gt_inv.dims())?;
        let depth = weights.w2
            * (0..gt_inv.len())
                .filter(|&i| it.invdepth.is_valid(i) && gt_inv.is_valid(i))
                .map(|i| (it.invdepth.value(i) - gt_inv.value(i)).abs())
                .sum::<f64>();
        let pose = weights.w3 * pose_error(&it.camera, gt_cam)?;
        out.flow += decay * flow;
        out.flow_pre += decay * flow_pre;
        out.depth += decay * depth;
        out.pose += decay * pose;
        out.per_iteration.push(decay * (flow + flow_pre + depth + pose));
    }
    out.total = out.pose_pre + out.flow + out.flow_pre + out.depth + out.pose;
    Ok(out)
}
