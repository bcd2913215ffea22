//! `DRKR` binary rasters and the plain-text intrinsics file.
//!
//! Raster layout: `b"DRKR"`, `u8` kind, `u32` LE width, `u32` LE height, then
//! `width·height·channels` little-endian `f32` values, row-major with channels
//! interleaved. Invalid depth pixels are stored as `0`, every other invalid
//! pixel as NaN in all channels.

use std::fs;
use std::path::Path;

use nalgebra::{Vector2, Vector3};

use super::{Intrinsics, Raster};
use crate::geometry::Field;
use crate::{Error, Result};

pub const RASTER_MAGIC: &[u8; 4] = b"DRKR";
const HEADER_LEN: usize = 4 + 1 + 4 + 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum RasterKind {
    Depth = 1,
    InverseDepth = 2,
    Flow = 3,
    Normal = 4,
    Color = 5,
}

impl RasterKind {
    pub fn channels(self) -> usize {
        match self {
            RasterKind::Depth | RasterKind::InverseDepth => 1,
            RasterKind::Flow => 2,
            RasterKind::Normal | RasterKind::Color => 3,
        }
    }

    fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            1 => RasterKind::Depth,
            2 => RasterKind::InverseDepth,
            3 => RasterKind::Flow,
            4 => RasterKind::Normal,
            5 => RasterKind::Color,
            _ => return None,
        })
    }
}

/// Pixel types storable in a `DRKR` raster.
pub trait RasterPixel: Copy + Sized {
    const CHANNELS: usize;
    fn write_channels(&self, out: &mut Vec<f32>);
    fn read_channels(c: &[f32]) -> Self;
    fn zero() -> Self;
}

impl RasterPixel for f64 {
    const CHANNELS: usize = 1;
    fn write_channels(&self, out: &mut Vec<f32>) {
        out.push(*self as f32);
    }
    fn read_channels(c: &[f32]) -> Self {
        c[0] as f64
    }
    fn zero() -> Self {
        0.0
    }
}

impl RasterPixel for Vector2<f64> {
    const CHANNELS: usize = 2;
    fn write_channels(&self, out: &mut Vec<f32>) {
        out.extend(self.iter().map(|v| *v as f32));
    }
    fn read_channels(c: &[f32]) -> Self {
        Vector2::new(c[0] as f64, c[1] as f64)
    }
    fn zero() -> Self {
        Vector2::zeros()
    }
}

impl RasterPixel for Vector3<f64> {
    const CHANNELS: usize = 3;
    fn write_channels(&self, out: &mut Vec<f32>) {
        out.extend(self.iter().map(|v| *v as f32));
    }
    fn read_channels(c: &[f32]) -> Self {
        Vector3::new(c[0] as f64, c[1] as f64, c[2] as f64)
    }
    fn zero() -> Self {
        Vector3::zeros()
    }
}

fn check_kind<T: RasterPixel>(kind: RasterKind) -> Result<()> {
    if kind.channels() != T::CHANNELS {
        return Err(Error::InvalidArgument(format!(
            "raster kind {kind:?} has {} channels, pixel type has {}",
            kind.channels(),
            T::CHANNELS
        )));
    }
    Ok(())
}

pub fn encode_raster<T: RasterPixel>(kind: RasterKind, raster: &Raster<T>) -> Result<Vec<u8>> {
    check_kind::<T>(kind)?;
    let (w, h) = raster.dims();
    let mut floats = Vec::with_capacity(w * h * T::CHANNELS);
    for i in 0..raster.len() {
        if raster.is_valid(i) {
            raster.value(i).write_channels(&mut floats);
        } else {
            let fill = if kind == RasterKind::Depth { 0.0 } else { f32::NAN };
            floats.extend(std::iter::repeat_n(fill, T::CHANNELS));
        }
    }
    let mut out = Vec::with_capacity(HEADER_LEN + floats.len() * 4);
    out.extend_from_slice(RASTER_MAGIC);
    out.push(kind as u8);
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    for f in floats {
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_raster<T: RasterPixel>(expected: RasterKind, bytes: &[u8]) -> std::result::Result<Raster<T>, String> {
    check_kind::<T>(expected).map_err(|e| e.to_string())?;
    if bytes.len() < HEADER_LEN || &bytes[..4] != RASTER_MAGIC {
        return Err("missing DRKR header".into());
    }
    let kind = RasterKind::from_u8(bytes[4]).ok_or_else(|| format!("unknown raster kind {}", bytes[4]))?;
    if kind != expected {
        return Err(format!("expected {expected:?} raster, found {kind:?}"));
    }
    let w = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    let n = w
        .checked_mul(h)
        .and_then(|p| p.checked_mul(T::CHANNELS))
        .ok_or("raster dimensions overflow")?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != n * 4 {
        return Err(format!("payload has {} bytes, expected {}", payload.len(), n * 4));
    }
    let floats: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut data = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for c in floats.chunks_exact(T::CHANNELS) {
        let ok = if kind == RasterKind::Depth {
            c[0] > 0.0 && c[0].is_finite()
        } else {
            c.iter().all(|v| v.is_finite())
        };
        valid.push(ok);
        data.push(if ok { T::read_channels(c) } else { T::zero() });
    }
    let values = Field::from_vec(w, h, data).map_err(|e| e.to_string())?;
    Raster::new(values, valid).map_err(|e| e.to_string())
}

pub fn write_raster<T: RasterPixel>(path: &Path, kind: RasterKind, raster: &Raster<T>) -> Result<()> {
    let bytes = encode_raster(kind, raster)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_raster<T: RasterPixel>(path: &Path, kind: RasterKind) -> Result<Raster<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_raster(kind, &bytes).map_err(|m| Error::format(path, m))
}

pub fn write_intrinsics(path: &Path, k: &Intrinsics) -> Result<()> {
    let text = format!(
        "fx {}\nfy {}\ncx {}\ncy {}\nwidth {}\nheight {}\n",
        k.fx, k.fy, k.cx, k.cy, k.width, k.height
    );
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_intrinsics(path: &Path) -> Result<Intrinsics> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_intrinsics(&text).map_err(|m| Error::format(path, m))
}

fn parse_intrinsics(text: &str) -> std::result::Result<Intrinsics, String> {
    let mut vals: [Option<f64>; 6] = [None; 6];
    const KEYS: [&str; 6] = ["fx", "fy", "cx", "cy", "width", "height"];
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(key), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(format!("malformed line {line:?}"));
        };
        let slot = KEYS
            .iter()
            .position(|k| *k == key)
            .ok_or_else(|| format!("unknown key {key:?}"))?;
        vals[slot] = Some(v.parse().map_err(|_| format!("bad value for {key}: {v:?}"))?);
    }
    let get = |i: usize| vals[i].ok_or_else(|| format!("missing key {}", KEYS[i]));
    let dim = |i: usize| -> std::result::Result<usize, String> {
        let v = get(i)?;
        if v.fract() != 0.0 || v < 1.0 {
            return Err(format!("{} must be a positive integer", KEYS[i]));
        }
        Ok(v as usize)
    };
    Intrinsics::new(get(0)?, get(1)?, get(2)?, get(3)?, dim(4)?, dim(5)?).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{DepthMap, FlowField};
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let d = DepthMap::from_depths(3, 2, vec![1.0, 2.0, 0.0, 4.0, 5.0, 6.0]).unwrap();
        let b = encode_raster(RasterKind::Depth, &d).unwrap();
        assert_eq!(&b[..4], b"DRKR");
        assert_eq!(b[4], 1);
        assert_eq!(&b[5..9], &3u32.to_le_bytes());
        assert_eq!(&b[9..13], &2u32.to_le_bytes());
        assert_eq!(b.len(), 13 + 6 * 4);
        assert_eq!(&b[13..17], &1.0f32.to_le_bytes());
        assert_eq!(&b[21..25], &0.0f32.to_le_bytes());
    }

    #[test]
    fn invalid_flow_is_nan_on_disk() {
        let mut f = FlowField::from_fn(2, 1, |x, _| Vector2::new(x as f64, 0.5));
        f.invalidate(0);
        let b = encode_raster(RasterKind::Flow, &f).unwrap();
        assert!(f32::from_le_bytes(b[13..17].try_into().unwrap()).is_nan());
        let back: FlowField = decode_raster(RasterKind::Flow, &b).unwrap();
        assert_eq!(back.mask(), &[false, true]);
        assert_eq!(back.value(1), Vector2::new(1.0, 0.5));
    }

    #[test]
    fn decode_rejects_wrong_kind_and_truncation() {
        let d = DepthMap::from_depths(2, 2, vec![1.0; 4]).unwrap();
        let b = encode_raster(RasterKind::Depth, &d).unwrap();
        assert!(decode_raster::<f64>(RasterKind::InverseDepth, &b).is_err());
        assert!(decode_raster::<f64>(RasterKind::Depth, &b[..b.len() - 1]).is_err());
        assert!(decode_raster::<f64>(RasterKind::Depth, b"XXXX").is_err());
        assert!(encode_raster(RasterKind::Flow, &d).is_err());
    }

    #[test]
    fn intrinsics_text_roundtrip() {
        let k = Intrinsics::new(101.5, 99.25, 63.5, 63.5, 128, 128).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("intrinsics.txt");
        write_intrinsics(&p, &k).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("fx 101.5\nfy 99.25\n"));
        assert_eq!(read_intrinsics(&p).unwrap(), k);
        assert!(parse_intrinsics("fx 1\nfy 1\ncx 0\ncy 0\nwidth 4\n").is_err());
        assert!(parse_intrinsics("fx 1\nfy 1\ncx 0\ncy 0\nwidth 4.5\nheight 4\n").is_err());
    }

    proptest! {
        #[test]
        fn f32_exact_values_roundtrip(vals in prop::collection::vec(0.001f32..100.0, 12)) {
            let r = Raster::from_fn(4, 3, |x, y| Vector3::new(vals[y * 4 + x] as f64, 1.0, -(vals[y * 4 + x] as f64)));
            let b = encode_raster(RasterKind::Normal, &r).unwrap();
            let back: Raster<Vector3<f64>> = decode_raster(RasterKind::Normal, &b).unwrap();
            prop_assert_eq!(back, r);
        }
    }
}
