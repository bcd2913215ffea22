use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::noise::{drunken_trajectory, NoiseParams};
use crate::camera::Intrinsics;
use crate::geometry::{exp_se3, pose_distance, RigidTransform, Twist};
use crate::{Error, Result};

/// Frame rate used to convert frame indices into seconds.
pub const FPS: f64 = 30.0;
pub const MAX_LEVEL: u8 = 3;

const TAU: f64 = 2.0 * PI;

/// Separable sinusoidal displacement along a patch normal.
///
/// `d(m, t) = A · sin(2π(m_x/λ_x + φ_x)) · sin(2π(m_y/λ_y + φ_y)) · sin(2π f t/FPS + φ_t)`
/// with phases expressed in cycles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformationDescriptor {
    pub amplitude: f64,
    pub wavelengths: [f64; 2],
    pub temporal_frequency: f64,
    pub phases: [f64; 3],
}

impl DeformationDescriptor {
    pub fn rigid() -> Self {
        Self {
            amplitude: 0.0,
            wavelengths: [1.0, 1.0],
            temporal_frequency: 0.0,
            phases: [0.0; 3],
        }
    }

    fn factors(&self, m: [f64; 2], t: f64) -> ([f64; 2], [f64; 2], f64) {
        let ax = TAU * (m[0] / self.wavelengths[0] + self.phases[0]);
        let ay = TAU * (m[1] / self.wavelengths[1] + self.phases[1]);
        let at = TAU * (self.temporal_frequency * t / FPS + self.phases[2]);
        (ax.sin_cos().into(), ay.sin_cos().into(), at.sin())
    }

    /// Displacement along the normal at material point `m`, frame time `t`.
    pub fn displacement(&self, m: [f64; 2], t: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let ([sx, _], [sy, _], st) = self.factors(m, t);
        self.amplitude * sx * sy * st
    }

    /// `(∂d/∂m_x, ∂d/∂m_y)`.
    pub fn gradient(&self, m: [f64; 2], t: f64) -> [f64; 2] {
        if self.amplitude == 0.0 {
            return [0.0, 0.0];
        }
        let ([sx, cx], [sy, cy], st) = self.factors(m, t);
        let a = self.amplitude * st;
        [
            a * TAU / self.wavelengths[0] * cx * sy,
            a * TAU / self.wavelengths[1] * sx * cy,
        ]
    }
}

/// Rectangular height-field patch. Material coordinates span
/// `[−extent/2, extent/2]` on each axis of the patch frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    /// World-from-patch.
    pub pose: RigidTransform,
    pub extent: [f64; 2],
    pub deformation: DeformationDescriptor,
    pub texture_seed: u64,
}

impl Surface {
    pub fn contains(&self, m: [f64; 2]) -> bool {
        m[0].abs() <= 0.5 * self.extent[0] && m[1].abs() <= 0.5 * self.extent[1]
    }

    /// Deformed point in patch coordinates (no extent check).
    pub fn local_point(&self, m: [f64; 2], t: f64) -> Vector3<f64> {
        Vector3::new(m[0], m[1], self.deformation.displacement(m, t))
    }

    /// World position of material point `m` at frame time `t`.
    pub fn deform_point(&self, m: [f64; 2], t: f64) -> Result<Vector3<f64>> {
        if !self.contains(m) || !m.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "material point {m:?} outside patch extent {:?}",
                self.extent
            )));
        }
        Ok(self.pose.act(&self.local_point(m, t)))
    }

    /// Unit normal (world frame) of the deformed surface.
    pub fn normal(&self, m: [f64; 2], t: f64) -> Vector3<f64> {
        let [gx, gy] = self.deformation.gradient(m, t);
        self.pose.rotation() * Vector3::new(-gx, -gy, 1.0).normalize()
    }
}

/// Per-level simulator magnitudes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelParams {
    /// Deformation amplitude in meters, indexed by level.
    pub amplitude: [f64; 4],
    pub wavelengths: [f64; 2],
    /// Hz
    pub temporal_frequency: f64,
    pub noise: NoiseParams,
}

impl Default for LevelParams {
    fn default() -> Self {
        Self {
            amplitude: [0.0, 0.01, 0.02, 0.04],
            wavelengths: [1.1, 0.9],
            temporal_frequency: 0.5,
            noise: NoiseParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenePreset {
    /// Camera inside a closed room.
    Box,
    /// Camera travelling down a corridor and back.
    Corridor,
    /// A single large sheet in front of the camera.
    Sheet,
}

impl std::str::FromStr for ScenePreset {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "box" => Ok(ScenePreset::Box),
            "corridor" => Ok(ScenePreset::Corridor),
            "sheet" => Ok(ScenePreset::Sheet),
            _ => Err(format!("unknown scene preset {s:?} (expected box, corridor or sheet)")),
        }
    }
}

impl std::fmt::Display for ScenePreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScenePreset::Box => "box",
            ScenePreset::Corridor => "corridor",
            ScenePreset::Sheet => "sheet",
        })
    }
}

/// Plane placements: (translation, rotation axis-angle, extent).
type Placement = ([f64; 3], [f64; 3], [f64; 2]);

impl ScenePreset {
    fn placements(self) -> Vec<Placement> {
        // Patch z is the displacement axis. Rotations map patch axes onto walls.
        let about_y = [0.0, FRAC_PI_2, 0.0];
        let about_x = [FRAC_PI_2, 0.0, 0.0];
        match self {
            ScenePreset::Sheet => vec![([0.0, 0.0, 2.2], [0.0; 3], [8.0, 8.0])],
            ScenePreset::Box => {
                let (hx, hy, hz) = (2.0, 1.5, 2.0);
                vec![
                    ([0.0, 0.0, hz], [0.0; 3], [2.0 * hx + 0.2, 2.0 * hy + 0.2]),
                    ([0.0, 0.0, -hz], [0.0; 3], [2.0 * hx + 0.2, 2.0 * hy + 0.2]),
                    ([-hx, 0.0, 0.0], about_y, [2.0 * hz + 0.2, 2.0 * hy + 0.2]),
                    ([hx, 0.0, 0.0], about_y, [2.0 * hz + 0.2, 2.0 * hy + 0.2]),
                    ([0.0, hy, 0.0], about_x, [2.0 * hx + 0.2, 2.0 * hz + 0.2]),
                    ([0.0, -hy, 0.0], about_x, [2.0 * hx + 0.2, 2.0 * hz + 0.2]),
                ]
            }
            ScenePreset::Corridor => {
                let (hx, hy) = (0.9, 1.1);
                let (z0, z1) = (-1.0, 7.0);
                let (zc, len) = (0.5 * (z0 + z1), z1 - z0 + 0.2);
                vec![
                    ([-hx, 0.0, zc], about_y, [len, 2.0 * hy + 0.2]),
                    ([hx, 0.0, zc], about_y, [len, 2.0 * hy + 0.2]),
                    ([0.0, hy, zc], about_x, [2.0 * hx + 0.2, len]),
                    ([0.0, -hy, zc], about_x, [2.0 * hx + 0.2, len]),
                    ([0.0, 0.0, z1], [0.0; 3], [2.0 * hx + 0.2, 2.0 * hy + 0.2]),
                    ([0.0, 0.0, z0], [0.0; 3], [2.0 * hx + 0.2, 2.0 * hy + 0.2]),
                ]
            }
        }
    }

    /// Smooth base camera pose at loop phase `phi ∈ [0, 2π]`; identity at 0.
    /// `reach` scales the whole excursion.
    pub fn base_pose(self, phi: f64, reach: f64) -> RigidTransform {
        let (s, c) = phi.sin_cos();
        let s2 = (2.0 * phi).sin();
        let (rot, trans) = match self {
            ScenePreset::Sheet => (
                [0.04 * s, -0.06 * s, 0.03 * s2],
                [0.15 * s, 0.06 * s2, 0.1 * (1.0 - c)],
            ),
            ScenePreset::Box => (
                [0.05 * s2, 0.35 * s, 0.02 * s],
                [0.6 * s, 0.1 * s2, 0.6 * (1.0 - c)],
            ),
            ScenePreset::Corridor => (
                [0.02 * s, 0.1 * s, 0.0],
                [0.15 * s2, 0.05 * s, 0.5 * (1.0 - c)],
            ),
        };
        exp_se3(&Twist::new(Vector3::from(rot) * reach, Vector3::from(trans) * reach))
            .expect("finite preset twist")
    }
}

/// Inputs for building a [`SceneSpec`] from a preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub preset: ScenePreset,
    pub level: u8,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    /// Horizontal field of view in radians.
    pub hfov: f64,
    pub closed_loop: bool,
    pub params: LevelParams,
}

impl SceneConfig {
    pub fn new(preset: ScenePreset, level: u8, frames: usize, width: usize, height: usize, seed: u64) -> Self {
        Self {
            preset,
            level,
            frames,
            width,
            height,
            seed,
            hfov: 65f64.to_radians(),
            closed_loop: true,
            params: LevelParams::default(),
        }
    }

    pub fn build(&self) -> Result<SceneSpec> {
        if self.level > MAX_LEVEL {
            return Err(Error::InvalidArgument(format!("level must be 0..=3, got {}", self.level)));
        }
        if self.frames < 2 {
            return Err(Error::InvalidArgument("at least 2 frames are required".into()));
        }
        let intrinsics = Intrinsics::with_fov(self.width, self.height, self.hfov)?;

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let amplitude = self.params.amplitude[self.level as usize];
        let surfaces = self
            .preset
            .placements()
            .into_iter()
            .map(|(t, r, extent)| {
                let phases = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
                Surface {
                    pose: RigidTransform::new(
                        UnitQuaternion::from_scaled_axis(Vector3::from(r)),
                        Vector3::from(t),
                    ),
                    extent,
                    deformation: DeformationDescriptor {
                        amplitude,
                        wavelengths: self.params.wavelengths,
                        temporal_frequency: self.params.temporal_frequency,
                        phases,
                    },
                    texture_seed: rng.random(),
                }
            })
            .collect();

        let n = self.frames;
        // Short closed loops shrink so that frame-to-frame motion stays at
        // most that of the 30-frame loop.
        let reach = ((n - 1) as f64 / 29.0).min(1.0);
        let base: Vec<RigidTransform> = (0..n)
            .map(|i| {
                if self.closed_loop {
                    // last frame returns exactly to the first pose
                    let i = if i == n - 1 { 0 } else { i };
                    self.preset.base_pose(TAU * i as f64 / (n - 1) as f64, reach)
                } else {
                    self.preset.base_pose(TAU * i as f64 / 30.0, 1.0)
                }
            })
            .collect();
        let trajectory = drunken_trajectory(&base, self.level, self.seed, &self.params.noise)?;

        let spec = SceneSpec {
            surfaces,
            trajectory,
            level: self.level,
            seed: self.seed,
            intrinsics,
            frame_count: n,
            closed_loop: self.closed_loop,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Complete description of a synthetic sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub surfaces: Vec<Surface>,
    /// World-from-camera, one per frame.
    pub trajectory: Vec<RigidTransform>,
    pub level: u8,
    pub seed: u64,
    pub intrinsics: Intrinsics,
    pub frame_count: usize,
    pub closed_loop: bool,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frame_count < 2 {
            return Err(Error::InvalidArgument("frame_count must be >= 2".into()));
        }
        if self.level > MAX_LEVEL {
            return Err(Error::InvalidArgument(format!("level {} out of range", self.level)));
        }
        if self.trajectory.len() != self.frame_count {
            return Err(Error::InvalidArgument(format!(
                "trajectory has {} poses for {} frames",
                self.trajectory.len(),
                self.frame_count
            )));
        }
        if self.closed_loop {
            let (dt, dr) = pose_distance(&self.trajectory[0], &self.trajectory[self.frame_count - 1]);
            if dt > 1e-12 || dr > 1e-12 {
                return Err(Error::InvalidArgument("closed-loop trajectory does not return to its start".into()));
            }
        }
        for s in &self.surfaces {
            let d = &s.deformation;
            if d.amplitude < 0.0 || (self.level == 0 && d.amplitude != 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "amplitude {} invalid for level {}",
                    d.amplitude, self.level
                )));
            }
            if !(d.wavelengths[0] > 0.0 && d.wavelengths[1] > 0.0) {
                return Err(Error::InvalidArgument("wavelengths must be positive".into()));
            }
        }
        self.intrinsics.validate()
    }

    /// Ground-truth relative motions `W_t⁻¹ W_{t+1}`.
    pub fn relative_poses(&self) -> Vec<RigidTransform> {
        self.trajectory
            .windows(2)
            .map(|w| w[0].inverse().compose(&w[1]))
            .collect()
    }
}
