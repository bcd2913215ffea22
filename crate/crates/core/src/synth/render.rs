use nalgebra::{Vector2, Vector3};

use super::{SceneSpec, Surface};
use crate::camera::{ColorRaster, DepthMap, FlowField, NormalMap, PixelCoord, Raster};
use crate::geometry::{Field, RigidTransform};
use crate::{par, Error, Result};

/// Max depth disagreement between a tracked point and the surface visible at
/// its projection before the point counts as occluded.
pub const OCCLUSION_TOLERANCE: f64 = 1e-6;

const NEWTON_MAX_ITERS: usize = 32;
const NEWTON_TOL: f64 = 1e-10;
const MARCH_STEPS: usize = 16;
const MIN_RAY_DEPTH: f64 = 1e-6;

/// First intersection of a camera ray with the scene.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub surface: usize,
    pub material: [f64; 2],
    /// Depth along the optical axis of the viewing camera.
    pub depth: f64,
}

/// Labels of a single frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameLabels {
    /// World-from-camera.
    pub pose: RigidTransform,
    pub depth: DepthMap,
    /// Absent for the last frame.
    pub flow_to_next: Option<FlowField>,
    pub normals: NormalMap,
    pub color: ColorRaster,
}

/// Ray parameter where a ray (patch coordinates) meets the deformed patch.
///
/// The ray is `o + s·d`; `s` is returned together with the material point.
fn intersect(surface: &Surface, t: f64, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<(f64, [f64; 2])> {
    if d.z.abs() < 1e-12 {
        return None;
    }
    let deform = &surface.deformation;
    let accept = |s: f64| {
        let m = [o.x + s * d.x, o.y + s * d.y];
        (s > MIN_RAY_DEPTH && surface.contains(m)).then_some((s, m))
    };
    if deform.amplitude == 0.0 {
        return accept(-o.z / d.z);
    }

    let g = |s: f64| o.z + s * d.z - deform.displacement([o.x + s * d.x, o.y + s * d.y], t);
    let dg = |s: f64| {
        let [gx, gy] = deform.gradient([o.x + s * d.x, o.y + s * d.y], t);
        d.z - gx * d.x - gy * d.y
    };

    // |displacement| ≤ A, so every root lies inside the slab |z| ≤ A.
    let a = deform.amplitude;
    let (s1, s2) = ((-a - o.z) / d.z, (a - o.z) / d.z);
    let (lo, hi) = (s1.min(s2).max(MIN_RAY_DEPTH), s1.max(s2));
    if hi <= lo {
        return None;
    }

    // nearest sign change
    let step = (hi - lo) / MARCH_STEPS as f64;
    let mut bracket = None;
    let mut prev = (lo, g(lo));
    if prev.1 == 0.0 {
        return accept(lo);
    }
    for k in 1..=MARCH_STEPS {
        let s = if k == MARCH_STEPS { hi } else { lo + step * k as f64 };
        let v = g(s);
        if v == 0.0 {
            return accept(s);
        }
        if v.signum() != prev.1.signum() {
            bracket = Some((prev.0, s, prev.1));
            break;
        }
        prev = (s, v);
    }
    let (mut a_s, mut b_s, g_a) = bracket?;

    // Newton safeguarded by bisection inside [a_s, b_s].
    let mut s = 0.5 * (a_s + b_s);
    for _ in 0..NEWTON_MAX_ITERS {
        let v = g(s);
        if v == 0.0 {
            break;
        }
        if v.signum() == g_a.signum() {
            a_s = s;
        } else {
            b_s = s;
        }
        let slope = dg(s);
        let mut next = s - v / slope;
        if !(next > a_s && next < b_s) || !next.is_finite() {
            next = 0.5 * (a_s + b_s);
        }
        let delta = (next - s).abs();
        s = next;
        if delta < NEWTON_TOL {
            // one extra step to reach rounding level
            let v = g(s);
            let slope = dg(s);
            if v != 0.0 && slope != 0.0 {
                let polished = s - v / slope;
                if polished.is_finite() && (polished - s).abs() < NEWTON_TOL {
                    s = polished;
                }
            }
            break;
        }
    }
    accept(s)
}

/// Casts the ray through pixel `u` of a camera at `pose` (world-from-camera)
/// against the scene at frame time `t`.
pub fn trace(scene: &SceneSpec, t: f64, pose: &RigidTransform, u: PixelCoord) -> Option<Hit> {
    let ray_cam = scene.intrinsics.ray(u);
    let origin = *pose.translation();
    let dir = pose.rotation() * ray_cam;
    let mut best: Option<Hit> = None;
    for (idx, surface) in scene.surfaces.iter().enumerate() {
        let inv = surface.pose.inverse();
        let o = inv.act(&origin);
        let d = inv.rotation() * dir;
        if let Some((s, m)) = intersect(surface, t, &o, &d) {
            // ray_cam has unit z, so the ray parameter is the camera depth
            if best.is_none_or(|b| s < b.depth) {
                best = Some(Hit {
                    surface: idx,
                    material: m,
                    depth: s,
                });
            }
        }
    }
    best
}

/// Where a material point seen at frame `src` lands in frame `dst`, or `None`
/// if it leaves the image, goes behind the camera, or is occluded.
fn track(scene: &SceneSpec, hit: &Hit, dst: usize) -> Option<PixelCoord> {
    let surface = &scene.surfaces[hit.surface];
    let world = surface.pose.act(&surface.local_point(hit.material, dst as f64));
    let pose = &scene.trajectory[dst];
    let p = pose.inverse().act(&world);
    let intr = &scene.intrinsics;
    let u = intr.project(&p).ok()?;
    if !intr.contains(u) {
        return None;
    }
    let seen = trace(scene, dst as f64, pose, u)?;
    (seen.surface == hit.surface && (seen.depth - p.z).abs() <= OCCLUSION_TOLERANCE).then_some(u)
}

fn hits(scene: &SceneSpec, t: usize) -> Vec<Option<Hit>> {
    let intr = scene.intrinsics;
    let pose = scene.trajectory[t];
    par::map_range(intr.pixel_count(), |i| trace(scene, t as f64, &pose, intr.pixel(i)))
}

fn flow_from_hits(scene: &SceneSpec, hits: &[Option<Hit>], src: usize, dst: usize) -> FlowField {
    let intr = scene.intrinsics;
    let flows = par::map_range(hits.len(), |i| {
        let hit = hits[i].as_ref()?;
        if src == dst {
            // a frame onto itself; tracking would only add rounding
            return Some(Vector2::zeros());
        }
        let target = track(scene, hit, dst)?;
        Some(target - intr.pixel(i))
    });
    Raster::from_options(intr.width, intr.height, flows, Vector2::zeros()).expect("dims")
}

fn check_frame(scene: &SceneSpec, t: usize) -> Result<()> {
    if t >= scene.frame_count {
        return Err(Error::InvalidArgument(format!(
            "frame {t} out of range (sequence has {})",
            scene.frame_count
        )));
    }
    Ok(())
}

/// Depth of frame `t` alone (no flow tracking).
pub fn render_depth(scene: &SceneSpec, t: usize) -> Result<DepthMap> {
    check_frame(scene, t)?;
    let (w, h) = scene.intrinsics.dims();
    DepthMap::from_depths(w, h, hits(scene, t).iter().map(|h| h.map_or(0.0, |h| h.depth)).collect())
}

/// Exact correspondence flow from frame `src` to frame `dst`.
pub fn render_flow(scene: &SceneSpec, src: usize, dst: usize) -> Result<FlowField> {
    check_frame(scene, src)?;
    check_frame(scene, dst)?;
    Ok(flow_from_hits(scene, &hits(scene, src), src, dst))
}

// Value noise on a 5 cm lattice over material coordinates.
fn texture(surface: &Surface, m: [f64; 2]) -> Vector3<f64> {
    const CELL: f64 = 0.05;
    fn hash(mut x: u64) -> u64 {
        // splitmix64 finalizer
        x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^ (x >> 31)
    }
    let lattice = |ix: i64, iy: i64, channel: u64| {
        let h = hash(surface.texture_seed ^ hash((ix as u64) ^ hash((iy as u64) ^ hash(channel))));
        (h >> 11) as f64 / (1u64 << 53) as f64
    };
    let (fx, fy) = (m[0] / CELL, m[1] / CELL);
    let (ix, iy) = (fx.floor() as i64, fy.floor() as i64);
    let (ax, ay) = (fx - ix as f64, fy - iy as f64);
    let smooth = |a: f64| a * a * (3.0 - 2.0 * a);
    let (sx, sy) = (smooth(ax), smooth(ay));
    Vector3::from_fn(|c, _| {
        let c = c as u64;
        let top = lattice(ix, iy, c) * (1.0 - sx) + lattice(ix + 1, iy, c) * sx;
        let bottom = lattice(ix, iy + 1, c) * (1.0 - sx) + lattice(ix + 1, iy + 1, c) * sx;
        top * (1.0 - sy) + bottom * sy
    })
}

// Camera-frame normals, facing the camera.
fn normals_from_hits(scene: &SceneSpec, hits: &[Option<Hit>], t: usize) -> Result<NormalMap> {
    let intr = scene.intrinsics;
    let (w, h) = intr.dims();
    let cam_rot = scene.trajectory[t].rotation().inverse();
    let normals = par::map_range(hits.len(), |i| {
        let hit = hits[i].as_ref()?;
        let s = &scene.surfaces[hit.surface];
        let n = cam_rot * s.normal(hit.material, t as f64);
        let ray = intr.ray(intr.pixel(i));
        Some(if n.dot(&ray) > 0.0 { -n } else { n })
    });
    Raster::from_options(w, h, normals, Vector3::zeros())
}

/// Camera-frame surface normals of frame `t`.
pub fn render_normals(scene: &SceneSpec, t: usize) -> Result<NormalMap> {
    check_frame(scene, t)?;
    normals_from_hits(scene, &hits(scene, t), t)
}

/// Renders depth, normals, colour, and flow to the next frame.
pub fn render_frame(scene: &SceneSpec, t: usize) -> Result<FrameLabels> {
    check_frame(scene, t)?;
    let intr = scene.intrinsics;
    let (w, h) = intr.dims();
    let pose = scene.trajectory[t];
    let hits = hits(scene, t);

    let depth = DepthMap::from_depths(
        w,
        h,
        hits.iter().map(|h| h.map_or(0.0, |h| h.depth)).collect(),
    )?;
    let normals = normals_from_hits(scene, &hits, t)?;
    let colors = par::map_range(hits.len(), |i| {
        hits[i].map(|hit| texture(&scene.surfaces[hit.surface], hit.material))
    });
    let color = Raster::from_options(w, h, colors, Vector3::zeros())?;
    let flow_to_next = (t + 1 < scene.frame_count).then(|| flow_from_hits(scene, &hits, t, t + 1));

    Ok(FrameLabels {
        pose,
        depth,
        flow_to_next,
        normals,
        color,
    })
}

/// Surface id per pixel (or `None` on a miss); handy for diagnostics.
pub fn surface_ids(scene: &SceneSpec, t: usize) -> Result<Field<Option<usize>>> {
    check_frame(scene, t)?;
    let (w, h) = scene.intrinsics.dims();
    Field::from_vec(w, h, hits(scene, t).into_iter().map(|h| h.map(|h| h.surface)).collect())
}
