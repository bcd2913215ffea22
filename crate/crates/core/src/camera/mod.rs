//! Pinhole camera, label rasters, and dense pixel correspondences.
//!
//! Pixel centres sit at integer coordinates: pixel `(x, y)` of a raster is the
//! continuous coordinate `u = x, v = y`. Flow is target minus source.

mod io;
mod raster;

pub use io::{
    decode_raster, encode_raster, read_intrinsics, read_raster, write_intrinsics, write_raster,
    RasterKind, RasterPixel, RASTER_MAGIC,
};
pub use raster::{
    bilinear_sample, bilinear_taps, ColorRaster, DepthMap, FlowField, InverseDepthMap, NormalMap, Raster,
};

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::TransformField;
use crate::{par, Error, Result};

/// Minimum depth a point must have to be projected.
pub const MIN_PROJECTION_DEPTH: f64 = 1e-6;

/// Continuous pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
}

impl PixelCoord {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.u, self.v)
    }

    pub fn offset(self, d: &Vector2<f64>) -> Self {
        Self::new(self.u + d.x, self.v + d.y)
    }
}

impl std::ops::Sub for PixelCoord {
    type Output = Vector2<f64>;
    fn sub(self, rhs: Self) -> Vector2<f64> {
        Vector2::new(self.u - rhs.u, self.v - rhs.v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    /// Square-pixel camera with the principal point at the image centre and
    /// the given horizontal field of view.
    pub fn with_fov(width: usize, height: usize, hfov_rad: f64) -> Result<Self> {
        let f = 0.5 * width as f64 / (0.5 * hfov_rad).tan();
        Self::new(
            f,
            f,
            0.5 * (width as f64 - 1.0),
            0.5 * (height as f64 - 1.0),
            width,
            height,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.fx.is_finite()
            && self.fy.is_finite()
            && self.width > 0
            && self.height > 0
            && (0.0..self.width as f64).contains(&self.cx)
            && (0.0..self.height as f64).contains(&self.cy);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid intrinsics {self:?}")))
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Pixel coordinate of raster index `i` (row-major).
    #[inline]
    pub fn pixel(&self, i: usize) -> PixelCoord {
        PixelCoord::new((i % self.width) as f64, (i / self.width) as f64)
    }

    /// Back-projects `u` at depth `z` (along the optical axis).
    pub fn unproject(&self, u: PixelCoord, z: f64) -> Result<Vector3<f64>> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::InvalidDepth(z));
        }
        Ok(Vector3::new(
            (u.u - self.cx) * z / self.fx,
            (u.v - self.cy) * z / self.fy,
            z,
        ))
    }

    /// Back-projects `u` at depth `z` and returns the point with its own
    /// reprojection. Flow measured from the reprojection rather than from `u`
    /// is exactly zero under the identity transform.
    pub fn lift(&self, u: PixelCoord, z: f64) -> Result<(Vector3<f64>, PixelCoord)> {
        let p = self.unproject(u, z)?;
        Ok((p, self.project(&p)?))
    }

    pub fn project(&self, p: &Vector3<f64>) -> Result<PixelCoord> {
        if !(p.z > MIN_PROJECTION_DEPTH) {
            return Err(Error::BehindCamera(p.z));
        }
        Ok(PixelCoord::new(
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }

    /// Direction (not normalized) of the ray through `u`, with unit z.
    pub fn ray(&self, u: PixelCoord) -> Vector3<f64> {
        Vector3::new((u.u - self.cx) / self.fx, (u.v - self.cy) / self.fy, 1.0)
    }

    /// Whether `u` lies in the closed sampling domain `[0, w−1] × [0, h−1]`.
    pub fn contains(&self, u: PixelCoord) -> bool {
        u.u >= 0.0
            && u.v >= 0.0
            && u.u <= (self.width - 1) as f64
            && u.v <= (self.height - 1) as f64
    }
}

/// Evaluates `u' = π(T[u] · π⁻¹(u, z₁[u]))` for every pixel.
///
/// Returns the flow `u' − u` and the inverse depth `1 / z'` of the moved
/// point. Pixels with invalid depth or whose moved point falls behind the
/// camera are marked invalid in both outputs.
pub fn correspondence_map(
    intr: &Intrinsics,
    depth1: &DepthMap,
    field: &TransformField,
) -> Result<(FlowField, InverseDepthMap)> {
    depth1.ensure_dims(intr.dims())?;
    field.ensure_dims(intr.dims())?;
    let per_pixel = par::map_range(intr.pixel_count(), |i| {
        if !depth1.is_valid(i) {
            return None;
        }
        let (p, u) = intr.lift(intr.pixel(i), depth1.value(i)).ok()?;
        let moved = field[i].act(&p);
        let target = intr.project(&moved).ok()?;
        Some((target - u, 1.0 / moved.z))
    });
    let (w, h) = intr.dims();
    let mut flow = FlowField::invalid(w, h, Vector2::zeros());
    let mut inv = InverseDepthMap::invalid(w, h, 0.0);
    for (i, r) in per_pixel.into_iter().enumerate() {
        if let Some((f, l)) = r {
            flow.set(i, f);
            inv.set(i, l);
        }
    }
    Ok((flow, inv))
}
