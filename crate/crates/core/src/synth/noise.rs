use std::f64::consts::PI;

use nalgebra::Vector6;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{exp_se3, RigidTransform, Twist};
use crate::{Error, Result};

// Keeps the trajectory noise stream independent from the scene-layout stream.
const NOISE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// Camera-noise magnitudes. The walk is `x_{i+1} = ρ x_i + σ n_i` per twist
/// coordinate with σ scaled by `level_multiplier[level]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// meters per frame
    pub translation_sigma: f64,
    /// radians per frame
    pub rotation_sigma: f64,
    pub correlation: f64,
    pub level_multiplier: [f64; 4],
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            translation_sigma: 0.01,
            rotation_sigma: 0.005,
            correlation: 0.8,
            level_multiplier: [0.0, 1.0, 2.0, 4.0],
        }
    }
}

/// Perturbs `base` with a smooth level-scaled random walk in se(3).
///
/// The walk is windowed to zero at both ends, so the first and last poses are
/// returned unchanged (and a closed loop stays closed). Level 0 returns `base`.
pub fn drunken_trajectory(
    base: &[RigidTransform],
    level: u8,
    seed: u64,
    params: &NoiseParams,
) -> Result<Vec<RigidTransform>> {
    let multiplier = *params
        .level_multiplier
        .get(level as usize)
        .ok_or_else(|| Error::InvalidArgument(format!("level {level} out of range")))?;
    let n = base.len();
    if multiplier == 0.0 || n < 3 {
        return Ok(base.to_vec());
    }

    let sigma = Vector6::new(
        params.rotation_sigma,
        params.rotation_sigma,
        params.rotation_sigma,
        params.translation_sigma,
        params.translation_sigma,
        params.translation_sigma,
    ) * multiplier;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ NOISE_STREAM);
    let mut walk = Vector6::zeros();
    let mut out = Vec::with_capacity(n);
    for (i, pose) in base.iter().enumerate() {
        let innovation = Vector6::from_fn(|_, _| StandardNormal.sample(&mut rng));
        walk = walk * params.correlation + sigma.component_mul(&innovation);
        if i == 0 || i == n - 1 {
            out.push(*pose);
            continue;
        }
        let window = (PI * i as f64 / (n - 1) as f64).sin();
        let xi = Twist::from_vector(&(walk * window));
        out.push(pose.compose(&exp_se3(&xi)?));
    }
    Ok(out)
}
