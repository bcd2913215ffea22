use serde::{Deserialize, Serialize};

use crate::flowsolver::SolverConfig;
use crate::{Error, Result};

/// Where target flow comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowSource {
    /// Labels re-rendered in double precision from the stored scene.
    #[default]
    Oracle,
    /// Flow (and depth) rasters read from the dataset directory.
    File,
}

impl std::str::FromStr for FlowSource {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "file" => Ok(Self::File),
            _ => Err(format!("unknown flow source {s:?} (expected oracle or file)")),
        }
    }
}

/// Initial camera motion of each pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    #[default]
    Identity,
    /// The previous pair's estimate.
    Previous,
}

impl std::str::FromStr for InitMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "identity" => Ok(Self::Identity),
            "previous" => Ok(Self::Previous),
            _ => Err(format!("unknown init mode {s:?} (expected identity or previous)")),
        }
    }
}

/// `(w1, w2, w3, w4, γ)` of the diagnostic loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Intermediate flow.
    pub w1: f64,
    /// Inverse depth.
    pub w2: f64,
    /// Camera pose per iteration.
    pub w3: f64,
    /// Initial camera pose.
    pub w4: f64,
    /// Per-iteration decay.
    pub gamma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w1: 0.2,
            w2: 100.0,
            w3: 200.0,
            w4: 6.0,
            gamma: 0.8,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if [self.w1, self.w2, self.w3, self.w4].iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("loss weights must be finite and nonnegative".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdometryConfig {
    /// Outer iterations `M`.
    pub iterations: usize,
    pub flow_source: FlowSource,
    pub init_mode: InitMode,
    pub solver: SolverConfig,
    pub loss_weights: LossWeights,
}

impl Default for OdometryConfig {
    fn default() -> Self {
        Self {
            iterations: 12,
            flow_source: FlowSource::Oracle,
            init_mode: InitMode::Identity,
            solver: SolverConfig::default(),
            loss_weights: LossWeights::default(),
        }
    }
}

impl OdometryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("at least one iteration is required".into()));
        }
        self.solver.validate()?;
        self.loss_weights.validate()
    }
}
