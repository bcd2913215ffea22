use serde::{Deserialize, Serialize};

use super::{exp_se3, log_se3, RigidTransform, Twist};
use crate::{par, Error, Result};

/// Dense row-major grid of per-pixel values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Field<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Per-pixel rigid transforms (scene flow).
pub type TransformField = Field<RigidTransform>;
/// Per-pixel twists.
pub type TwistField = Field<Twist>;

impl<T: Clone> Field<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Field<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "field of {width}x{height} needs {} elements, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> T + Sync + Send) -> Self
    where
        T: Send,
    {
        let data = par::map_range(width * height, |i| f(i % width, i / width));
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U: Send>(&self, f: impl Fn(&T) -> U + Sync + Send) -> Field<U>
    where
        T: Sync,
    {
        Field {
            width: self.width,
            height: self.height,
            data: par::map_slice(&self.data, f),
        }
    }

    pub(crate) fn ensure_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                got: self.dims(),
            });
        }
        Ok(())
    }
}

impl<T> std::ops::Index<usize> for Field<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T> std::ops::IndexMut<usize> for Field<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.data[i]
    }
}

impl TransformField {
    pub fn identity(width: usize, height: usize) -> Self {
        Self::filled(width, height, RigidTransform::identity())
    }

    /// Scene-flow update `T[u] ← T[u] · exp(ξ[u])`.
    pub fn retract(&self, twists: &TwistField) -> Result<TransformField> {
        twists.ensure_dims(self.dims())?;
        let data = par::map_range(self.len(), |i| {
            exp_se3(&twists[i]).map(|e| self[i].compose(&e))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Field::from_vec(self.width, self.height, data)
    }

    /// Per-pixel logarithm.
    pub fn log(&self) -> Result<TwistField> {
        let data = par::map_slice(&self.data, log_se3)
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Field::from_vec(self.width, self.height, data)
    }

    /// `G · T[u]` for every pixel.
    pub fn left_compose(&self, g: &RigidTransform) -> TransformField {
        self.map(|t| g.compose(t))
    }
}
