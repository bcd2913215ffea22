use nalgebra::{Vector2, Vector3};

use super::PixelCoord;
use crate::geometry::Field;
use crate::{Error, Result};

/// Row-major raster with a parallel validity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster<T> {
    values: Field<T>,
    valid: Vec<bool>,
}

/// Depth along the optical axis in meters; values ≤ 0 are invalid.
pub type DepthMap = Raster<f64>;
/// Inverse depth in 1/m.
pub type InverseDepthMap = Raster<f64>;
/// Per-pixel `(du, dv)` in pixels, target minus source.
pub type FlowField = Raster<Vector2<f64>>;
/// Unit normals in the camera frame.
pub type NormalMap = Raster<Vector3<f64>>;
/// Linear RGB in `[0, 1]`.
pub type ColorRaster = Raster<Vector3<f64>>;

impl<T: Clone> Raster<T> {
    /// A raster with every pixel invalid, filled with `fill`.
    pub fn invalid(width: usize, height: usize, fill: T) -> Self {
        Self {
            values: Field::filled(width, height, fill),
            valid: vec![false; width * height],
        }
    }
}

impl<T> Raster<T> {
    pub fn new(values: Field<T>, valid: Vec<bool>) -> Result<Self> {
        if valid.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "validity mask has {} entries for {} pixels",
                valid.len(),
                values.len()
            )));
        }
        Ok(Self { values, valid })
    }

    /// All pixels valid.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> T + Sync + Send) -> Self
    where
        T: Send,
    {
        Self {
            values: Field::from_fn(width, height, f),
            valid: vec![true; width * height],
        }
    }

    /// Builds from optional per-pixel values (`None` = invalid).
    pub fn from_options(width: usize, height: usize, items: Vec<Option<T>>, fill: T) -> Result<Self>
    where
        T: Clone,
    {
        let valid: Vec<bool> = items.iter().map(Option::is_some).collect();
        let data = items.into_iter().map(|o| o.unwrap_or_else(|| fill.clone())).collect();
        Self::new(Field::from_vec(width, height, data)?, valid)
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &Field<T> {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn is_valid(&self, i: usize) -> bool {
        self.valid[i]
    }

    #[inline]
    pub fn value(&self, i: usize) -> T
    where
        T: Copy,
    {
        self.values[i]
    }

    /// Value at `i` if valid.
    #[inline]
    pub fn get(&self, i: usize) -> Option<T>
    where
        T: Copy,
    {
        self.valid[i].then(|| self.values[i])
    }

    pub fn set(&mut self, i: usize, v: T) {
        self.values[i] = v;
        self.valid[i] = true;
    }

    pub fn invalidate(&mut self, i: usize) {
        self.valid[i] = false;
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub(crate) fn ensure_dims(&self, dims: (usize, usize)) -> Result<()> {
        self.values.ensure_dims(dims)
    }
}

impl Raster<f64> {
    /// Depth raster; non-positive or non-finite entries are invalid.
    pub fn from_depths(width: usize, height: usize, depths: Vec<f64>) -> Result<Self> {
        let valid = depths.iter().map(|d| *d > 0.0 && d.is_finite()).collect();
        Self::new(Field::from_vec(width, height, depths)?, valid)
    }

    /// `1/d` on valid pixels.
    pub fn to_inverse_depth(&self) -> InverseDepthMap {
        let values = self.values.map(|d| if *d > 0.0 { 1.0 / d } else { 0.0 });
        Raster {
            values,
            valid: self.valid.clone(),
        }
    }
}

/// Bilinear interpolation at continuous coordinate `u`.
///
/// Returns `None` when `u` is outside `[0, w−1] × [0, h−1]` or when any tap
/// with non-zero weight is invalid. At integer coordinates only the exact
/// pixel is read.
pub fn bilinear_sample<T>(raster: &Raster<T>, u: PixelCoord) -> Option<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let (w, h) = raster.dims();
    if !(u.u >= 0.0 && u.v >= 0.0 && u.u <= (w - 1) as f64 && u.v <= (h - 1) as f64) {
        return None;
    }
    let x0 = u.u.floor() as usize;
    let y0 = u.v.floor() as usize;
    let ax = u.u - x0 as f64;
    let ay = u.v - y0 as f64;
    let tap = |x: usize, y: usize| raster.get(y * w + x);

    let row = |y: usize| -> Option<T> {
        let a = tap(x0, y)?;
        if ax > 0.0 {
            Some(a * (1.0 - ax) + tap(x0 + 1, y)? * ax)
        } else {
            Some(a)
        }
    };
    let top = row(y0)?;
    if ay > 0.0 {
        Some(top * (1.0 - ay) + row(y0 + 1)? * ay)
    } else {
        Some(top)
    }
}

/// Indices of the taps [`bilinear_sample`] reads at `u`, in a `w × h` raster.
/// The first `n` entries of the returned array are used.
pub fn bilinear_taps(w: usize, h: usize, u: PixelCoord) -> Option<([usize; 4], usize)> {
    if !(u.u >= 0.0 && u.v >= 0.0 && u.u <= (w - 1) as f64 && u.v <= (h - 1) as f64) {
        return None;
    }
    let x0 = u.u.floor() as usize;
    let y0 = u.v.floor() as usize;
    let xs = if u.u > x0 as f64 { 2 } else { 1 };
    let ys = if u.v > y0 as f64 { 2 } else { 1 };
    let mut taps = [0; 4];
    let mut n = 0;
    for y in y0..y0 + ys {
        for x in x0..x0 + xs {
            taps[n] = y * w + x;
            n += 1;
        }
    }
    Some((taps, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taps_skip_zero_weights() {
        assert_eq!(bilinear_taps(4, 3, PixelCoord::new(1.0, 2.0)), Some(([9, 0, 0, 0], 1)));
        assert_eq!(bilinear_taps(4, 3, PixelCoord::new(1.5, 1.0)), Some(([5, 6, 0, 0], 2)));
        assert_eq!(bilinear_taps(4, 3, PixelCoord::new(2.5, 0.5)), Some(([2, 3, 6, 7], 4)));
        assert_eq!(bilinear_taps(4, 3, PixelCoord::new(3.5, 0.0)), None);
    }

    #[test]
    fn integer_coordinates_are_exact() {
        let r = Raster::from_fn(5, 4, |x, y| (x * 10 + y) as f64 * 0.37);
        for y in 0..4 {
            for x in 0..5 {
                let s = bilinear_sample(&r, PixelCoord::new(x as f64, y as f64)).unwrap();
                assert_eq!(s, *r.values().get(x, y));
            }
        }
    }

    #[test]
    fn constant_raster_is_constant() {
        let r = Raster::from_fn(6, 6, |_, _| 2.5);
        for (u, v) in [(0.3, 4.9), (2.5, 2.5), (5.0, 0.01)] {
            assert!((bilinear_sample(&r, PixelCoord::new(u, v)).unwrap() - 2.5).abs() < 1e-15);
        }
    }

    #[test]
    fn ramp_is_reproduced() {
        let r = Raster::from_fn(4, 4, |x, _| x as f64);
        assert_eq!(bilinear_sample(&r, PixelCoord::new(1.5, 2.0)), Some(1.5));
        assert_eq!(bilinear_sample(&r, PixelCoord::new(1.5, 1.25)), Some(1.5));
        let v = Raster::from_fn(4, 4, |x, y| Vector2::new(x as f64, 2.0 * y as f64));
        let s = bilinear_sample(&v, PixelCoord::new(0.25, 2.5)).unwrap();
        assert!((s - Vector2::new(0.25, 5.0)).norm() < 1e-15);
    }

    #[test]
    fn out_of_domain_and_invalid_taps() {
        let mut r = Raster::from_fn(4, 4, |x, _| x as f64);
        assert_eq!(bilinear_sample(&r, PixelCoord::new(-0.1, 1.0)), None);
        assert_eq!(bilinear_sample(&r, PixelCoord::new(3.01, 1.0)), None);
        assert_eq!(bilinear_sample(&r, PixelCoord::new(3.0, 3.0)), Some(3.0));
        r.invalidate(1 * 4 + 2);
        assert_eq!(bilinear_sample(&r, PixelCoord::new(1.5, 1.0)), None);
        assert_eq!(bilinear_sample(&r, PixelCoord::new(1.0, 1.0)), Some(1.0));
    }

    #[test]
    fn depth_validity() {
        let d = DepthMap::from_depths(2, 2, vec![1.0, 0.0, -2.0, f64::NAN]).unwrap();
        assert_eq!(d.mask(), &[true, false, false, false]);
        let inv = d.to_inverse_depth();
        assert_eq!(inv.get(0), Some(1.0));
        assert_eq!(inv.get(1), None);
    }
}
