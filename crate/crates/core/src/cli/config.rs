//! Declarative run configuration (TOML) and its validation.

use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Idmde,
    /// `f ≡ 0`, for debugging the pipeline.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelKind,
    pub p: f64,
    pub q: f64,
    /// `[lo, hi, steps]`-style ranges for the sweeps.
    pub p_range: Option<[f64; 2]>,
    pub p_steps: Option<usize>,
    pub q_range: Option<[f64; 2]>,
    pub q_steps: Option<usize>,
    pub integrator: IntegratorConfig,
    pub lyapunov: LyapunovBlock,
    pub basin: BasinBlock,
    pub divergence: DivergenceBlock,
    pub output: Option<PathBuf>,
    pub jobs: usize,
    pub desk_scale: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Idmde,
            p: 5.0,
            q: 0.995,
            p_range: None,
            p_steps: None,
            q_range: None,
            q_steps: None,
            integrator: IntegratorConfig::default(),
            lyapunov: LyapunovBlock::default(),
            basin: BasinBlock::default(),
            divergence: DivergenceBlock::default(),
            output: None,
            jobs: 1,
            desk_scale: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub h: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub x0: Vec<f64>,
    /// Number of history terms kept; absent means full memory.
    pub short_memory: Option<usize>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            h: 0.02,
            t_end: 1700.0,
            x0: vec![1e-3, 1e-3, 1e-3],
            short_memory: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovBlock {
    pub h_norm: f64,
    pub transient_skip: f64,
    pub threshold: f64,
}

impl Default for LyapunovBlock {
    fn default() -> Self {
        Self {
            h_norm: crate::lyapunov::DEFAULT_H_NORM,
            transient_skip: crate::lyapunov::DEFAULT_TRANSIENT_SKIP,
            threshold: crate::lyapunov::DEFAULT_CHAOS_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasinBlock {
    pub grid: [usize; 2],
    /// `[x1_lo, x1_hi, x2_lo, x2_hi]`
    pub window: [f64; 4],
    pub radius: f64,
    pub epsilon: f64,
    /// Defaults to `0.1 T`.
    pub trailing_window: Option<f64>,
    pub escape_bound: f64,
    /// In-plane start `(x1, x2)` of the trajectory whose section is emitted.
    pub section_start: [f64; 2],
}

impl Default for BasinBlock {
    fn default() -> Self {
        Self {
            grid: [100, 100],
            window: [-5.0, 5.0, -5.0, 5.0],
            radius: crate::basin::DEFAULT_RADIUS,
            epsilon: crate::basin::DEFAULT_EPSILON,
            trailing_window: None,
            escape_bound: crate::basin::DEFAULT_ESCAPE_BOUND,
            section_start: [-2.5, 4.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DivergenceBlock {
    /// `[x1_lo, x1_hi, x2_lo, x2_hi]`, open positive quadrant only.
    pub window: [f64; 4],
    pub grid: [usize; 2],
}

impl Default for DivergenceBlock {
    fn default() -> Self {
        Self {
            window: [0.05, 5.0, 0.05, 5.0],
            grid: [100, 100],
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn memory(&self) -> crate::fode::Memory {
        match self.integrator.short_memory.and_then(NonZeroUsize::new) {
            Some(terms) => crate::fode::Memory::Short { terms },
            None => crate::fode::Memory::Full,
        }
    }

    /// Checks that do not depend on the subcommand.
    pub fn validate_common(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        if !(self.p.is_finite() && self.p > 0.0) {
            return bad(format!("p must be positive, got {}", self.p));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return bad(format!("q must lie in (0, 1], got {}", self.q));
        }
        for (name, r) in [("p_range", self.p_range), ("q_range", self.q_range)] {
            if let Some([lo, hi]) = r {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return bad(format!("{name} must be an increasing pair, got [{lo}, {hi}]"));
                }
            }
        }
        for (name, s) in [("p_steps", self.p_steps), ("q_steps", self.q_steps)] {
            if s == Some(0) {
                return bad(format!("{name} must be at least 1"));
            }
        }
        Ok(())
    }
}
