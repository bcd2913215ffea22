use serde::{Deserialize, Serialize};

use crate::camera::Raster;
use crate::geometry::Field;
use crate::{Error, Result};

/// Knobs of the damped Gauss–Newton field solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Levenberg–Marquardt iterations per block, and sweeps of the pixel pass.
    pub max_gn_iters: usize,
    pub lambda_init: f64,
    /// Damping multiplier after a rejected step.
    pub lambda_up: f64,
    /// Damping multiplier after an accepted step.
    pub lambda_down: f64,
    /// Huber threshold on flow residuals, pixels.
    pub huber_flow: f64,
    /// Huber threshold on inverse-depth residuals, 1/m.
    pub huber_invdepth: f64,
    /// Weight of `‖log(T[u]⁻¹T[v])‖²` over 4-neighbours in the pixel pass.
    pub smoothness_weight: f64,
    /// Side of the square blocks of the block-rigid pass, pixels.
    pub segment_grid: usize,
    /// Stop once an iteration lowers the cost by less than this fraction.
    pub convergence_tol: f64,
    /// Fit a single rigid motion to the whole image (no pixel pass).
    pub rigid: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_gn_iters: 10,
            lambda_init: 1e-4,
            lambda_up: 10.0,
            lambda_down: 0.5,
            huber_flow: 1.0,
            huber_invdepth: 0.05,
            smoothness_weight: 1.0,
            segment_grid: 8,
            convergence_tol: 1e-10,
            rigid: false,
        }
    }
}

impl SolverConfig {
    pub fn rigid() -> Self {
        Self {
            rigid: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_init", self.lambda_init),
            ("lambda_up", self.lambda_up),
            ("lambda_down", self.lambda_down),
            ("huber_flow", self.huber_flow),
            ("huber_invdepth", self.huber_invdepth),
            ("smoothness_weight", self.smoothness_weight),
            ("convergence_tol", self.convergence_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_gn_iters == 0 || self.segment_grid == 0 {
            return Err(Error::InvalidArgument("max_gn_iters and segment_grid must be positive".into()));
        }
        if self.lambda_up <= 1.0 || self.lambda_down >= 1.0 {
            return Err(Error::InvalidArgument("damping must grow on rejection and shrink on acceptance".into()));
        }
        Ok(())
    }

    /// Checks that blocks tile the image exactly.
    pub fn check_dims(&self, width: usize, height: usize) -> Result<()> {
        if !self.rigid && (width % self.segment_grid != 0 || height % self.segment_grid != 0) {
            return Err(Error::InvalidArgument(format!(
                "segment_grid {} does not divide {width}x{height}",
                self.segment_grid
            )));
        }
        Ok(())
    }
}

/// Per-pixel confidences for the `(flow u, flow v, inverse depth)` residuals.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMap {
    weights: Field<[f64; 3]>,
}

impl WeightMap {
    pub fn new(weights: Field<[f64; 3]>) -> Result<Self> {
        if weights.as_slice().iter().flatten().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        Ok(Self { weights })
    }

    pub fn uniform(width: usize, height: usize, w: f64) -> Self {
        Self {
            weights: Field::filled(width, height, [w; 3]),
        }
    }

    /// Unit weight where the mask is set, zero elsewhere.
    pub fn from_mask(width: usize, height: usize, mask: &[bool]) -> Result<Self> {
        let w = mask.iter().map(|&m| if m { [1.0; 3] } else { [0.0; 3] }).collect();
        Ok(Self {
            weights: Field::from_vec(width, height, w)?,
        })
    }

    /// Unit weight where every raster is valid.
    pub fn from_validity<A, B>(a: &Raster<A>, b: &Raster<B>) -> Result<Self> {
        a.ensure_dims(b.dims())?;
        let mask: Vec<bool> = a.mask().iter().zip(b.mask()).map(|(x, y)| *x && *y).collect();
        Self::from_mask(a.width(), a.height(), &mask)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.weights.dims()
    }

    pub fn get(&self, i: usize) -> [f64; 3] {
        self.weights[i]
    }

    /// Mean of the three channels, used as the pixel weight for consensus.
    pub fn pixel_weight(&self, i: usize) -> f64 {
        let [a, b, c] = self.weights[i];
        (a + b + c) / 3.0
    }

    pub fn is_all_zero(&self) -> bool {
        self.weights.as_slice().iter().flatten().all(|w| *w == 0.0)
    }

    pub(crate) fn ensure_dims(&self, dims: (usize, usize)) -> Result<()> {
        self.weights.ensure_dims(dims)
    }
}
