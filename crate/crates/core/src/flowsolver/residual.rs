use nalgebra::{Matrix3x6, Vector3};

use super::{SolverConfig, WeightMap};
use crate::camera::{DepthMap, FlowField, Intrinsics, InverseDepthMap, PixelCoord, Raster, MIN_PROJECTION_DEPTH};
use crate::geometry::{skew, RigidTransform, TransformField};
use crate::{par, Result};

/// Huber penalty: `r²/2` inside `[-δ, δ]`, linear outside.
pub fn huber(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        0.5 * r * r
    } else {
        delta * (a - 0.5 * delta)
    }
}

/// IRLS weight `ψ(r)/r` of the Huber penalty.
pub(crate) fn huber_weight(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        1.0
    } else {
        delta / a
    }
}

/// Predicted `(flow u, flow v, inverse depth)` of `point` moved by `t`, with
/// flow measured from `u`, the reprojection of `point` (see
/// [`Intrinsics::lift`]), together with its Jacobian with
/// respect to a twist `δ` applied on the left (`exp(δ)·t`).
///
/// `None` when the moved point is not in front of the camera.
pub fn pixel_model(
    intr: &Intrinsics,
    u: PixelCoord,
    point: &Vector3<f64>,
    t: &RigidTransform,
) -> Option<(Vector3<f64>, Matrix3x6<f64>)> {
    let x = t.act(point);
    if !(x.z > MIN_PROJECTION_DEPTH) {
        return None;
    }
    let iz = 1.0 / x.z;
    let value = Vector3::new(
        intr.fx * x.x / x.z + intr.cx - u.u,
        intr.fy * x.y / x.z + intr.cy - u.v,
        iz,
    );
    // d(model)/dX
    let dm = nalgebra::Matrix3::new(
        intr.fx * iz,
        0.0,
        -intr.fx * x.x * iz * iz,
        0.0,
        intr.fy * iz,
        -intr.fy * x.y * iz * iz,
        0.0,
        0.0,
        -iz * iz,
    );
    // dX/dδ = [-[X]× | I]
    let mut jx = Matrix3x6::zeros();
    jx.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-skew(&x)));
    jx.fixed_view_mut::<3, 3>(0, 3).copy_from(&nalgebra::Matrix3::identity());
    Some((value, dm * jx))
}

/// Per-pixel residuals and the total robust cost.
#[derive(Clone, Debug, PartialEq)]
pub struct Residuals {
    pub cost: f64,
    /// `(flow − target flow, inverse depth − target inverse depth)`; invalid
    /// where any input is invalid or the moved point is behind the camera.
    pub residuals: Raster<Vector3<f64>>,
}

/// [`residuals_with`] under the default robust thresholds.
pub fn residuals(
    intr: &Intrinsics,
    depth1: &DepthMap,
    field: &TransformField,
    target_flow: &FlowField,
    target_invdepth: &InverseDepthMap,
    weights: &WeightMap,
) -> Result<Residuals> {
    residuals_with(intr, depth1, field, target_flow, target_invdepth, weights, &SolverConfig::default())
}

pub fn residuals_with(
    intr: &Intrinsics,
    depth1: &DepthMap,
    field: &TransformField,
    target_flow: &FlowField,
    target_invdepth: &InverseDepthMap,
    weights: &WeightMap,
    cfg: &SolverConfig,
) -> Result<Residuals> {
    let dims = intr.dims();
    depth1.ensure_dims(dims)?;
    field.ensure_dims(dims)?;
    target_flow.ensure_dims(dims)?;
    target_invdepth.ensure_dims(dims)?;
    weights.ensure_dims(dims)?;

    let per_pixel = par::map_range(intr.pixel_count(), |i| {
        let d = depth1.get(i)?;
        let flow = target_flow.get(i)?;
        let inv = target_invdepth.get(i)?;
        let (p, u) = intr.lift(intr.pixel(i), d).ok()?;
        let x = field[i].act(&p);
        let predicted = intr.project(&x).ok()? - u;
        let r = Vector3::new(predicted.x - flow.x, predicted.y - flow.y, 1.0 / x.z - inv);
        let w = weights.get(i);
        let cost = w[0] * huber(r.x, cfg.huber_flow)
            + w[1] * huber(r.y, cfg.huber_flow)
            + w[2] * huber(r.z, cfg.huber_invdepth);
        Some((r, cost))
    });
    // row-major, left to right
    let cost = per_pixel.iter().flatten().map(|(_, c)| c).sum();
    let (w, h) = dims;
    let residuals = Raster::from_options(w, h, per_pixel.into_iter().map(|p| p.map(|(r, _)| r)).collect(), Vector3::zeros())?;
    Ok(Residuals { cost, residuals })
}
