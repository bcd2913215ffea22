use super::estimate_camera;
use crate::geometry::{log_se3, RigidTransform, TransformField};
use crate::{par, Result};

/// Percentiles of `‖log(Td[u])‖` over the field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DeformationStats {
    pub p50: f64,
    pub p90: f64,
    pub max: f64,
    pub mean: f64,
}

impl DeformationStats {
    pub fn from_magnitudes(mut m: Vec<f64>) -> Self {
        if m.is_empty() {
            return Self::default();
        }
        let mean = m.iter().sum::<f64>() / m.len() as f64;
        m.sort_by(f64::total_cmp);
        // nearest rank
        let rank = |q: f64| m[((q * m.len() as f64).ceil() as usize).clamp(1, m.len()) - 1];
        Self {
            p50: rank(0.5),
            p90: rank(0.9),
            max: m[m.len() - 1],
            mean,
        }
    }
}

/// `field[u] = camera · deformation[u]`.
///
/// `deformation` holds the rounded values of `camera⁻¹ · field[u]`. Each pixel
/// also keeps the component-wise rounding error of recomposing it, so that
/// [`recompose`](Self::recompose) returns the input field bit for bit.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub camera: RigidTransform,
    pub deformation: TransformField,
    pub residual_stats: DeformationStats,
    correction: Vec<[f64; 7]>,
}

impl Decomposition {
    /// `camera ∘ deformation[i]` plus the stored rounding correction.
    pub fn recompose(&self, i: usize) -> RigidTransform {
        let a = self.camera.compose(&self.deformation[i]).to_array();
        let c = &self.correction[i];
        RigidTransform::from_array_unchecked(std::array::from_fn(|k| a[k] + c[k]))
    }

    pub fn recompose_field(&self) -> TransformField {
        let (w, h) = self.deformation.dims();
        TransformField::from_vec(w, h, par::map_range(self.deformation.len(), |i| self.recompose(i))).expect("dims")
    }

    /// Per-pixel `‖log(Td[u])‖`; pixels whose deformation is at the log
    /// branch cut count as `π`.
    pub fn magnitudes(&self) -> Vec<f64> {
        par::map_slice(self.deformation.as_slice(), |t| {
            log_se3(t).map_or(std::f64::consts::PI, |x| x.norm())
        })
    }
}

/// Finds a correction `c` with `a + c == target` exactly.
fn exact_correction(a: f64, target: f64) -> f64 {
    let c = target - a;
    if a + c == target {
        return c;
    }
    // Rounding of `target − a` lost the information; walk a few ulps.
    let mut lo = c;
    let mut hi = c;
    for _ in 0..64 {
        lo = lo.next_down();
        hi = hi.next_up();
        if a + lo == target {
            return lo;
        }
        if a + hi == target {
            return hi;
        }
    }
    c
}

/// Splits `field` into `camera` and the per-pixel remainder
/// `camera⁻¹ · field[u]`.
pub fn decompose(field: &TransformField, camera: &RigidTransform) -> Decomposition {
    let inv = camera.inverse();
    let parts = par::map_slice(field.as_slice(), |f| {
        let td = inv.compose(f);
        let a = camera.compose(&td).to_array();
        let target = f.to_array();
        let corr: [f64; 7] = std::array::from_fn(|k| exact_correction(a[k], target[k]));
        (td, corr)
    });
    let (w, h) = field.dims();
    let (td, correction): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    let mut out = Decomposition {
        camera: *camera,
        deformation: TransformField::from_vec(w, h, td).expect("dims"),
        residual_stats: DeformationStats::default(),
        correction,
    };
    out.residual_stats = DeformationStats::from_magnitudes(out.magnitudes());
    out
}

/// [`estimate_camera`] followed by [`decompose`].
pub fn decompose_field(field: &TransformField, weights: &super::WeightMap) -> Result<Decomposition> {
    Ok(decompose(field, &estimate_camera(field, weights)?))
}
