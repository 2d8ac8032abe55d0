//! Experiment configuration, read from JSON.

use std::fmt;
use std::path::{Path, PathBuf};

use cgo_core::almost_holo::MAX_ORDER;
use cgo_core::contour::ContourConfig;
use cgo_core::geometry::{ConvexDomain, DomainSpec};
use cgo_core::quadrature::log_space;
use cgo_core::Complex64;
use serde::{Deserialize, Serialize};

/// A rejected configuration; maps to exit status 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn reject<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Area oracle against boundary oracle.
    Validate,
    /// Four-term contour decomposition against the boundary oracle.
    Decompose,
    /// Log-log decay slope of `|f|`.
    Decay,
    /// Convergence order of the leading-order asymptotic model.
    AsymError,
    /// Node counts of the contour and the boundary rule, and the Gaussian constant.
    ContourCost,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Validate => "validate",
            Experiment::Decompose => "decompose",
            Experiment::Decay => "decay",
            Experiment::AsymError => "asym_error",
            Experiment::ContourCost => "contour_cost",
        }
    }
}

/// The moduli of a sweep: an explicit list or `count` log-spaced values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Moduli {
    List(Vec<f64>),
    LogSpaced { from: f64, to: f64, count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KSweep {
    /// Fixed `arg k` in radians.
    pub arg: f64,
    pub moduli: Moduli,
}

impl KSweep {
    pub fn moduli(&self) -> Result<Vec<f64>, ConfigError> {
        let values = match &self.moduli {
            Moduli::List(v) => v.clone(),
            Moduli::LogSpaced { from, to, count } => {
                if *count < 2 || !(*from > 0.0 && to > from && to.is_finite()) {
                    return reject(format!("log-spaced moduli need 0 < from < to and count >= 2, got {from}, {to}, {count}"));
                }
                log_space(*from, *to, *count)
            }
        };
        if values.is_empty() {
            return reject("k_sweep.moduli is empty");
        }
        if values.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return reject("k_sweep.moduli must be positive and finite");
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return reject("k_sweep.moduli must be strictly increasing");
        }
        if !self.arg.is_finite() {
            return reject("k_sweep.arg must be finite");
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of the boundary oracle.
    pub oracle: f64,
    /// Relative tolerance of the area oracle.
    pub area: f64,
    /// Target accuracy of the contour-cost search.
    pub accuracy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            oracle: 1e-12,
            area: 1e-9,
            accuracy: 1e-6,
        }
    }
}

/// Pass/fail thresholds; each belongs to one named acceptance criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// oracle_equivalence: largest relative difference of the two oracles.
    pub oracle_rel_diff: f64,
    /// four_term_identity: largest relative error of the decomposition.
    pub identity_rel_error: f64,
    /// decay_rates: expected slopes and half-widths.
    pub decay_slope_outside: f64,
    pub decay_band_outside: f64,
    pub decay_slope_inside: f64,
    pub decay_band_inside: f64,
    /// decay_rates: `|f| |k| / pi` range inside, for `|k| >= jump_min_modulus`.
    pub jump_ratio_min: f64,
    pub jump_ratio_max: f64,
    pub jump_min_modulus: f64,
    /// asymptotic_convergence_order: largest admissible error slopes.
    pub asym_slope_outside: f64,
    pub asym_slope_inside: f64,
    /// gaussian_concentration: largest admissible constant.
    pub gaussian_constant: f64,
    /// performance: contour node growth at most, boundary node growth at least.
    pub contour_growth: f64,
    pub boundary_growth: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            oracle_rel_diff: 1e-6,
            identity_rel_error: 1e-6,
            decay_slope_outside: -1.5,
            decay_band_outside: 0.15,
            decay_slope_inside: -1.0,
            decay_band_inside: 0.1,
            jump_ratio_min: 0.8,
            jump_ratio_max: 1.2,
            jump_min_modulus: 50.0,
            asym_slope_outside: -2.3,
            asym_slope_inside: -1.9,
            gaussian_constant: 50.0,
            contour_growth: 2.0,
            boundary_growth: 50.0,
        }
    }
}

fn default_order() -> usize {
    cgo_core::almost_holo::DEFAULT_ORDER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    /// Evaluation points as `[re, im]`.
    #[serde(default)]
    pub z_points: Vec<[f64; 2]>,
    pub k_sweep: KSweep,
    pub experiment: Experiment,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Truncation order `N` of the phase extension.
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub contour: ContourConfig,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// A configuration that passed validation, with its derived values.
#[derive(Debug, Clone)]
pub struct Validated {
    pub config: ExperimentConfig,
    pub domain: ConvexDomain,
    pub z_points: Vec<Complex64>,
    pub moduli: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    /// Checks the configuration and builds the domain.
    pub fn validate(&self) -> Result<Validated, ConfigError> {
        let moduli = self.k_sweep.moduli()?;
        let tol = &self.tolerances;
        if [tol.oracle, tol.area, tol.accuracy].iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return reject("tolerances must be positive");
        }
        if self.order == 0 || self.order > MAX_ORDER {
            return reject(format!("order must lie in 1..={MAX_ORDER}, got {}", self.order));
        }
        if self.z_points.is_empty() {
            return reject("z_points is empty");
        }
        if self.z_points.iter().flatten().any(|v| !v.is_finite()) {
            return reject("z_points must be finite");
        }
        if matches!(self.experiment, Experiment::Decay | Experiment::AsymError) && moduli.len() < 4 {
            return reject("slope experiments need at least 4 moduli");
        }
        let domain = self.domain.build().map_err(|e| ConfigError(format!("domain: {e}")))?;
        Ok(Validated {
            config: self.clone(),
            domain,
            z_points: self.z_points.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
            moduli,
        })
    }

    /// Contour dumps need only the domain and the sweep.
    pub fn validate_for_dump(&self) -> Result<(ConvexDomain, Vec<f64>), ConfigError> {
        let moduli = self.k_sweep.moduli()?;
        if self.order == 0 || self.order > MAX_ORDER {
            return reject(format!("order must lie in 1..={MAX_ORDER}, got {}", self.order));
        }
        let domain = self.domain.build().map_err(|e| ConfigError(format!("domain: {e}")))?;
        Ok((domain, moduli))
    }
}
