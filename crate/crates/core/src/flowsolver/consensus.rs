use nalgebra::Vector6;

use super::WeightMap;
use crate::geometry::{exp_se3, log_se3, RigidTransform, TransformField, Twist};
use crate::{par, Error, Result};

const MAX_KARCHER_ITERS: usize = 100;
const MAX_WEISZFELD_ITERS: usize = 200;
const DISTANCE_FLOOR: f64 = 1e-12;
const STEP_TOL: f64 = 1e-15;

/// Weighted tangent vectors `log(center⁻¹ T[u])` of all positive-weight pixels.
fn tangents(center: &RigidTransform, field: &TransformField, active: &[(usize, f64)]) -> Result<Vec<Vector6<f64>>> {
    let inv = center.inverse();
    par::map_slice(active, |&(i, _)| log_se3(&inv.compose(&field[i])).map(|t| t.to_vector()))
        .into_iter()
        .collect()
}

fn step(center: &RigidTransform, delta: &Vector6<f64>) -> Result<RigidTransform> {
    Ok(center.compose(&exp_se3(&Twist::from_vector(delta))?))
}

/// Robust rigid consensus of a transform field.
///
/// Minimizes `Σ w(u)·‖log(T⁻¹ field[u])‖` (the weighted geometric median in
/// se(3), one unsquared norm per pixel) by Weiszfeld iterations on the
/// manifold, seeded with the weighted Karcher mean, which itself starts at
/// the heaviest pixel. Pixel weights are the mean of the three channels.
pub fn estimate_camera(field: &TransformField, weights: &WeightMap) -> Result<RigidTransform> {
    weights.ensure_dims(field.dims())?;
    let active: Vec<(usize, f64)> = (0..field.len())
        .map(|i| (i, weights.pixel_weight(i)))
        .filter(|(_, w)| *w > 0.0)
        .collect();
    if active.is_empty() {
        return Err(Error::DegenerateInput("estimate_camera needs a pixel with positive weight".into()));
    }
    let total: f64 = active.iter().map(|(_, w)| w).sum();
    let heaviest = active
        .iter()
        .fold(active[0], |best, &cur| if cur.1 > best.1 { cur } else { best });
    let mut center = field[heaviest.0];

    for _ in 0..MAX_KARCHER_ITERS {
        let logs = tangents(&center, field, &active)?;
        let mean = logs
            .iter()
            .zip(&active)
            .fold(Vector6::zeros(), |acc, (l, (_, w))| acc + l * *w)
            / total;
        if mean.norm() < STEP_TOL {
            break;
        }
        center = step(&center, &mean)?;
    }

    for _ in 0..MAX_WEISZFELD_ITERS {
        let logs = tangents(&center, field, &active)?;
        let mut num = Vector6::zeros();
        let mut den = 0.0;
        for (l, (_, w)) in logs.iter().zip(&active) {
            let a = w / l.norm().max(DISTANCE_FLOOR);
            num += l * a;
            den += a;
        }
        let delta = num / den;
        if delta.norm() < STEP_TOL {
            break;
        }
        center = step(&center, &delta)?;
    }
    Ok(center)
}
