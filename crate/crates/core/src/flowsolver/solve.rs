use nalgebra::{Matrix6, Vector3, Vector6};

use super::residual::{huber, huber_weight, pixel_model};
use super::{SolverConfig, WeightMap};
use crate::camera::{DepthMap, FlowField, Intrinsics, InverseDepthMap, PixelCoord};
use crate::geometry::{exp_se3, log_se3, Field, RigidTransform, TransformField, Twist};
use crate::{par, Error, Result};

/// Outcome of [`solve_field_report`].
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub field: TransformField,
    /// Robust data cost plus smoothness penalty of `field`.
    pub cost: f64,
    pub data_cost: f64,
    /// Robust data cost before the block-rigid pass and after each of its
    /// levels; never increases.
    pub block_history: Vec<f64>,
    /// Total cost before the pixel pass and after each of its red and black
    /// half-sweeps; never increases.
    pub history: Vec<f64>,
    /// Longest block iteration count per level, summed, plus pixel sweeps.
    pub iterations: usize,
}

/// Fits a dense SE(3) field to target flow and inverse depth, starting from
/// `init`.
pub fn solve_field(
    intr: &Intrinsics,
    depth1: &DepthMap,
    target_flow: &FlowField,
    target_invdepth: &InverseDepthMap,
    weights: &WeightMap,
    init: &TransformField,
    cfg: &SolverConfig,
) -> Result<TransformField> {
    solve_field_report(intr, depth1, target_flow, target_invdepth, weights, init, cfg).map(|r| r.field)
}

#[derive(Clone, Copy, Debug)]
struct PixelData {
    u: PixelCoord,
    point: Vector3<f64>,
    target: Vector3<f64>,
    weight: [f64; 3],
}

struct Problem<'a> {
    intr: Intrinsics,
    cfg: &'a SolverConfig,
    width: usize,
    height: usize,
    pixels: Vec<Option<PixelData>>,
}

/// Local energy with the number of data pixels whose moved point left the
/// front of the camera.
#[derive(Clone, Copy, Debug)]
struct Energy {
    value: f64,
    lost: usize,
}

impl Energy {
    fn no_worse_than(&self, other: &Energy) -> bool {
        self.value.is_finite() && self.value <= other.value && self.lost <= other.lost
    }
}

/// `exp(δ)·t`, written as the right retraction `t·exp(Ad_{t⁻¹} δ)`.
fn left_step(t: &RigidTransform, delta: &Vector6<f64>) -> Option<RigidTransform> {
    let xi = Twist::from_vector(&(t.inverse().adjoint() * delta));
    let next = t.compose(&exp_se3(&xi).ok()?);
    next.is_finite().then_some(next)
}

fn damped_step(h: &Matrix6<f64>, g: &Vector6<f64>, lambda: f64) -> Option<Vector6<f64>> {
    let mut a = *h;
    let floor = 1e-12 * h.diagonal().max().max(1e-12);
    for k in 0..6 {
        a[(k, k)] += lambda * h[(k, k)].max(floor);
    }
    let step = a.cholesky()?.solve(&-g);
    step.iter().all(|v| v.is_finite()).then_some(step)
}

impl<'a> Problem<'a> {
    fn new(
        intr: &Intrinsics,
        depth1: &DepthMap,
        target_flow: &FlowField,
        target_invdepth: &InverseDepthMap,
        weights: &WeightMap,
        cfg: &'a SolverConfig,
    ) -> Self {
        let pixels = par::map_range(intr.pixel_count(), |i| {
            let d = depth1.get(i)?;
            let flow = target_flow.get(i)?;
            let mut weight = weights.get(i);
            let inv = match target_invdepth.get(i) {
                Some(v) => v,
                None => {
                    weight[2] = 0.0;
                    0.0
                }
            };
            if weight.iter().all(|w| *w == 0.0) {
                return None;
            }
            let (point, u) = intr.lift(intr.pixel(i), d).ok()?;
            Some(PixelData {
                u,
                point,
                target: Vector3::new(flow.x, flow.y, inv),
                weight,
            })
        });
        Self {
            intr: *intr,
            cfg,
            width: intr.width,
            height: intr.height,
            pixels,
        }
    }

    fn deltas(&self) -> [f64; 3] {
        [self.cfg.huber_flow, self.cfg.huber_flow, self.cfg.huber_invdepth]
    }

    /// Robust cost of pixel `i` under `t`; `None` if the point is lost.
    fn data_cost(&self, i: usize, t: &RigidTransform) -> Option<f64> {
        let Some(px) = &self.pixels[i] else {
            return Some(0.0);
        };
        let (m, _) = pixel_model(&self.intr, px.u, &px.point, t)?;
        let r = m - px.target;
        let d = self.deltas();
        Some((0..3).map(|c| px.weight[c] * huber(r[c], d[c])).sum())
    }

    fn data_energy(&self, i: usize, t: &RigidTransform) -> Energy {
        match self.data_cost(i, t) {
            Some(value) => Energy { value, lost: 0 },
            None => Energy { value: 0.0, lost: 1 },
        }
    }

    fn accumulate_data(&self, i: usize, t: &RigidTransform, h: &mut Matrix6<f64>, g: &mut Vector6<f64>) {
        let Some(px) = &self.pixels[i] else {
            return;
        };
        let Some((m, j)) = pixel_model(&self.intr, px.u, &px.point, t) else {
            return;
        };
        let r = m - px.target;
        let d = self.deltas();
        for c in 0..3 {
            let w = px.weight[c] * huber_weight(r[c], d[c]);
            if w == 0.0 {
                continue;
            }
            let row = j.row(c);
            *h += w * row.transpose() * row;
            *g += w * row.transpose() * r[c];
        }
    }

    fn edge_cost(&self, a: &RigidTransform, b: &RigidTransform) -> f64 {
        match log_se3(&a.inverse().compose(b)) {
            Ok(e) => self.cfg.smoothness_weight * e.to_vector().norm_squared(),
            Err(_) => f64::INFINITY,
        }
    }

    /// Gauss–Newton terms of `λ_s‖log(a⁻¹b)‖²` for a left step on `a`.
    fn accumulate_edge(&self, a: &RigidTransform, b: &RigidTransform, h: &mut Matrix6<f64>, g: &mut Vector6<f64>) {
        let Ok(e) = log_se3(&a.inverse().compose(b)) else {
            return;
        };
        let js = -a.inverse().adjoint();
        let s = 2.0 * self.cfg.smoothness_weight;
        *h += s * js.transpose() * js;
        *g += s * js.transpose() * e.to_vector();
    }

    fn neighbours(&self, i: usize) -> impl Iterator<Item = usize> {
        let (w, h) = (self.width, self.height);
        let (x, y) = (i % w, i / w);
        [
            (x > 0).then(|| i - 1),
            (x + 1 < w).then(|| i + 1),
            (y > 0).then(|| i - w),
            (y + 1 < h).then(|| i + w),
        ]
        .into_iter()
        .flatten()
    }

    /// Data cost and total cost, summed row-major.
    fn objective(&self, field: &[RigidTransform]) -> (f64, f64) {
        let w = self.width;
        let smooth = !self.cfg.rigid;
        let per_pixel = par::map_range(field.len(), |i| {
            let data = self.data_cost(i, &field[i]).unwrap_or(0.0);
            let mut s = 0.0;
            if smooth {
                if (i % w) + 1 < w {
                    s += self.edge_cost(&field[i], &field[i + 1]);
                }
                if i + w < field.len() {
                    s += self.edge_cost(&field[i], &field[i + w]);
                }
            }
            (data, s)
        });
        let data: f64 = per_pixel.iter().map(|p| p.0).sum();
        let smooth: f64 = per_pixel.iter().map(|p| p.1).sum();
        (data, data + smooth)
    }

    /// Data cost of a block plus `(μ/n)·Σ‖log(anchor⁻¹ T)‖²`, which ties the
    /// block to its value at the start of the level.
    fn block_energy(&self, ids: &[usize], cand: &[RigidTransform], anchors: &[RigidTransform], mu: f64) -> Energy {
        let mut e = Energy { value: 0.0, lost: 0 };
        for (&i, t) in ids.iter().zip(cand) {
            let d = self.data_energy(i, t);
            e.value += d.value;
            e.lost += d.lost;
        }
        if mu > 0.0 {
            let scale = mu / ids.len() as f64;
            for (a, t) in anchors.iter().zip(cand) {
                e.value += match log_se3(&a.inverse().compose(t)) {
                    Ok(x) => scale * x.to_vector().norm_squared(),
                    Err(_) => f64::INFINITY,
                };
            }
        }
        e
    }

    /// Levenberg–Marquardt on one shared left twist for all pixels of a
    /// block, with the anchor prior of weight `mu`. Also reports whether the
    /// iteration cap was hit before convergence.
    fn solve_block(&self, ids: &[usize], field: &[RigidTransform], mu: f64) -> (Option<Vec<RigidTransform>>, usize, bool) {
        let cfg = self.cfg;
        let anchors: Vec<RigidTransform> = ids.iter().map(|&i| field[i]).collect();
        let mut cur = anchors.clone();
        let mut energy = self.block_energy(ids, &cur, &anchors, mu);
        if !energy.value.is_finite() {
            return (None, 0, false);
        }
        let mut lambda = cfg.lambda_init;
        let mut changed = false;
        let mut iters = 0;
        let mut capped = true;
        while iters < cfg.max_gn_iters {
            iters += 1;
            let mut h = Matrix6::zeros();
            let mut g = Vector6::zeros();
            for (&i, t) in ids.iter().zip(&cur) {
                self.accumulate_data(i, t, &mut h, &mut g);
            }
            if mu > 0.0 {
                let scale = 2.0 * mu / ids.len() as f64;
                for (a, t) in anchors.iter().zip(&cur) {
                    let inv = a.inverse();
                    if let Ok(e) = log_se3(&inv.compose(t)) {
                        let j = inv.adjoint();
                        h += scale * j.transpose() * j;
                        g += scale * j.transpose() * e.to_vector();
                    }
                }
            }
            if g.iter().all(|v| *v == 0.0) {
                capped = false;
                break;
            }
            let Some(delta) = damped_step(&h, &g, lambda) else {
                lambda *= cfg.lambda_up;
                continue;
            };
            if delta.norm() < 1e-15 {
                capped = false;
                break;
            }
            let cand: Option<Vec<_>> = cur.iter().map(|t| left_step(t, &delta)).collect();
            let next = cand.as_ref().map(|c| self.block_energy(ids, c, &anchors, mu));
            match (cand, next) {
                (Some(c), Some(e)) if e.no_worse_than(&energy) => {
                    let decrease = energy.value - e.value;
                    let converged = decrease <= cfg.convergence_tol * energy.value;
                    cur = c;
                    energy = e;
                    changed = true;
                    lambda *= cfg.lambda_down;
                    if converged {
                        capped = false;
                        break;
                    }
                }
                _ => {
                    lambda *= cfg.lambda_up;
                    if lambda > 1e16 {
                        capped = false;
                        break;
                    }
                }
            }
        }
        (changed.then_some(cur), iters, capped)
    }

    fn pixel_energy(&self, i: usize, t: &RigidTransform, field: &[RigidTransform]) -> Energy {
        let mut e = self.data_energy(i, t);
        for j in self.neighbours(i) {
            e.value += self.edge_cost(t, &field[j]);
        }
        e
    }

    /// One damped step for pixel `i` with its neighbours fixed. Returns the
    /// accepted transform (if any) and the updated damping.
    fn update_pixel(&self, i: usize, field: &[RigidTransform], mut lambda: f64) -> (Option<RigidTransform>, f64) {
        let cfg = self.cfg;
        let t = field[i];
        let mut h = Matrix6::zeros();
        let mut g = Vector6::zeros();
        self.accumulate_data(i, &t, &mut h, &mut g);
        for j in self.neighbours(i) {
            self.accumulate_edge(&t, &field[j], &mut h, &mut g);
        }
        if g.iter().all(|v| *v == 0.0) {
            return (None, lambda);
        }
        let before = self.pixel_energy(i, &t, field);
        for _ in 0..4 {
            if let Some(delta) = damped_step(&h, &g, lambda) {
                if delta.norm() < 1e-15 {
                    return (None, lambda);
                }
                if let Some(cand) = left_step(&t, &delta) {
                    let after = self.pixel_energy(i, &cand, field);
                    if after.no_worse_than(&before) && after.value < before.value {
                        return (Some(cand), (lambda * cfg.lambda_down).max(1e-12));
                    }
                }
            }
            lambda *= cfg.lambda_up;
        }
        (None, lambda.min(1e16))
    }
}

fn divergence(iterations: usize, field: &[RigidTransform], w: usize, h: usize) -> Error {
    Error::Divergence {
        iterations,
        last_finite: Box::new(Field::from_vec(w, h, field.to_vec()).expect("dims")),
    }
}

/// [`solve_field`] with the cost trace.
pub fn solve_field_report(
    intr: &Intrinsics,
    depth1: &DepthMap,
    target_flow: &FlowField,
    target_invdepth: &InverseDepthMap,
    weights: &WeightMap,
    init: &TransformField,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let dims = intr.dims();
    let (w, h) = dims;
    cfg.check_dims(w, h)?;
    depth1.ensure_dims(dims)?;
    target_flow.ensure_dims(dims)?;
    target_invdepth.ensure_dims(dims)?;
    weights.ensure_dims(dims)?;
    init.ensure_dims(dims)?;
    if !init.as_slice().iter().all(RigidTransform::is_finite) {
        return Err(Error::InvalidArgument("initial field is not finite".into()));
    }

    let prob = Problem::new(intr, depth1, target_flow, target_invdepth, weights, cfg);
    let mut field = init.as_slice().to_vec();
    let (mut data_cost, mut cost) = prob.objective(&field);
    let mut block_history = vec![data_cost];
    let mut history = Vec::new();
    if !cost.is_finite() {
        return Err(divergence(0, &field, w, h));
    }
    let finish = |field: Vec<RigidTransform>, cost, data_cost, block_history, history, iterations| -> Result<SolveReport> {
        Ok(SolveReport {
            field: Field::from_vec(w, h, field)?,
            cost,
            data_cost,
            block_history,
            history,
            iterations,
        })
    };
    if weights.is_all_zero() || prob.pixels.iter().all(Option::is_none) {
        history.push(cost);
        return finish(field, cost, data_cost, block_history, history, 0);
    }

    // Block-rigid pass, coarse to fine: the whole image first, then blocks
    // halving in size down to `segment_grid`. Blocks of one level are
    // independent; each is anchored to its value from the coarser level.
    // Finer levels and the pixel pass wait until the whole-image fit has
    // converged: local refinement of a poorly aligned field drifts along
    // directions the data cannot see, and a later shared update cannot undo
    // that.
    let mut sizes = vec![w.max(h)];
    if !cfg.rigid {
        let mut s = cfg.segment_grid;
        let mut finer = Vec::new();
        while s < w.max(h) {
            finer.push(s);
            s *= 2;
        }
        sizes.extend(finer.into_iter().rev());
    }
    let mut block_iters = 0;
    let mut coarse_only = false;
    for (level, &size) in sizes.iter().enumerate() {
        let mu = if level == 0 { 0.0 } else { cfg.smoothness_weight * size as f64 };
        let blocks: Vec<Vec<usize>> = (0..h.div_ceil(size))
            .flat_map(|by| (0..w.div_ceil(size)).map(move |bx| (bx, by)))
            .map(|(bx, by)| {
                (by * size..((by + 1) * size).min(h))
                    .flat_map(|y| (bx * size..((bx + 1) * size).min(w)).map(move |x| y * w + x))
                    .collect()
            })
            .collect();
        let results = par::map_slice(&blocks, |ids| prob.solve_block(ids, &field, mu));
        let mut level_iters = 0;
        let mut level_capped = false;
        for (ids, (res, iters, capped)) in blocks.iter().zip(results) {
            level_iters = level_iters.max(iters);
            level_capped |= capped;
            if let Some(values) = res {
                for (&i, t) in ids.iter().zip(values) {
                    field[i] = t;
                }
            }
        }
        block_iters += level_iters;
        let (d, _) = prob.objective(&field);
        block_history.push(d);
        if level == 0 && level_capped {
            coarse_only = true;
            break;
        }
    }
    (data_cost, cost) = prob.objective(&field);
    if !cost.is_finite() {
        return Err(divergence(block_iters, &field, w, h));
    }
    history.push(cost);
    if cfg.rigid || coarse_only {
        return finish(field, cost, data_cost, block_history, history, block_iters);
    }

    // Per-pixel pass, red-black.
    let mut lambdas = vec![cfg.lambda_init; field.len()];
    let mut sweeps = 0;
    let colour_ids: [Vec<usize>; 2] = [0, 1].map(|c| (0..field.len()).filter(|i| (i % w + i / w) % 2 == c).collect());
    while sweeps < cfg.max_gn_iters {
        sweeps += 1;
        let before = cost;
        let mut moved = false;
        for ids in &colour_ids {
            let results = par::map_slice(ids, |&i| prob.update_pixel(i, &field, lambdas[i]));
            for (&i, (t, lambda)) in ids.iter().zip(results) {
                lambdas[i] = lambda;
                if let Some(t) = t {
                    field[i] = t;
                    moved = true;
                }
            }
            (data_cost, cost) = prob.objective(&field);
            if !cost.is_finite() {
                return Err(divergence(block_iters + sweeps, &field, w, h));
            }
            history.push(cost);
        }
        if !moved || before - cost <= cfg.convergence_tol * before {
            break;
        }
    }
    finish(field, cost, data_cost, block_history, history, block_iters + sweeps)
}
