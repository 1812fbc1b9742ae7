//! Run configuration, read from TOML (or JSON, for config echoes).

use std::path::Path;

use muskat::evolution::{BlowUpSettings, MonitorConfig, SchemeConfig};
use muskat::{Grid, PhysicalParams, SpectralField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `1e-3 cos x`
    SmallCos,
    /// `0.5 cos x`
    ModerateCos,
    /// `0.5 cos x + 1e-3 sum_m exp(-0.05 m) cos(m x)`
    RoughTail,
    /// `0.3 cos x + 0.2 sin 2x - 0.1 cos 3x`
    ZeroMeanMix,
    /// Degree-8 trigonometric polynomial with `max |f'| = 1`, drawn from `seed`.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    /// `(m, a_m, b_m)` triples for `a_m cos(m x) + b_m sin(m x)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<(u32, f64, f64)>>,
    #[serde(default)]
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotFormat {
    Csv,
    Json,
    Bin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Rows of the time series and snapshots every `cadence` accepted steps.
    #[serde(default = "default_cadence")]
    pub cadence: u64,
    pub directory: String,
    #[serde(default)]
    pub formats: Vec<SnapshotFormat>,
}

fn default_cadence() -> u64 {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSection {
    #[serde(default = "default_indices")]
    pub sobolev_indices: Vec<f64>,
    #[serde(default)]
    pub blow_up: Option<BlowUpSettings>,
}

fn default_indices() -> Vec<f64> {
    vec![0.0, 1.75, 2.0]
}

impl Default for MonitorSection {
    fn default() -> Self {
        Self { sobolev_indices: default_indices(), blow_up: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    pub physics: PhysicalParams,
    pub initial: InitialCondition,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub monitor: MonitorSection,
    pub output: OutputConfig,
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config { field: field.into(), message: message.into() }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
        let config: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| CliError::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            })?
        } else {
            toml::from_str(&text).map_err(|e| CliError::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            })?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        let grid = self.grid()?;
        let params = self.params()?;
        self.scheme
            .validate(&params, grid)
            .map_err(|e| invalid("scheme", e.to_string()))?;
        if self.output.cadence == 0 {
            return Err(invalid("output.cadence", "must be at least 1"));
        }
        for &s in &self.monitor.sobolev_indices {
            if !(s.is_finite() && s >= 0.0) {
                return Err(invalid("monitor.sobolev_indices", format!("index {s} must be >= 0")));
            }
        }
        if let Some(b) = self.monitor.blow_up {
            muskat::evolution::BlowUpMonitor::new(b)
                .map_err(|e| invalid("monitor.blow_up", e.to_string()))?;
        }
        self.initial_interface()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Grid::new(self.grid.n_points).map_err(|e| invalid("grid.n_points", e.to_string()))
    }

    pub fn params(&self) -> Result<PhysicalParams, CliError> {
        self.physics.validate().map_err(|e| invalid("physics", e.to_string()))?;
        Ok(self.physics)
    }

    pub fn monitor_config(&self) -> MonitorConfig {
        MonitorConfig {
            cadence: self.output.cadence,
            sobolev_indices: self.monitor.sobolev_indices.clone(),
            blow_up: self.monitor.blow_up,
        }
    }

    pub fn initial_interface(&self) -> Result<SpectralField, CliError> {
        let grid = self.grid()?;
        let f = match (&self.initial.preset, &self.initial.modes) {
            (Some(preset), None) => preset_field(*preset, grid, self.seed),
            (None, Some(modes)) => SpectralField::from_modes(grid, modes)
                .map_err(|e| invalid("initial.modes", e.to_string()))?,
            _ => return Err(invalid("initial", "set exactly one of `preset` and `modes`")),
        };
        if !self.initial.mean.is_finite() {
            return Err(invalid("initial.mean", "must be finite"));
        }
        Ok(f.add_constant(self.initial.mean))
    }
}

pub fn preset_field(preset: Preset, grid: Grid, seed: u64) -> SpectralField {
    let n = grid.n_points();
    match preset {
        Preset::SmallCos => SpectralField::from_fn(grid, |x| 1e-3 * x.cos()),
        Preset::ModerateCos => SpectralField::from_fn(grid, |x| 0.5 * x.cos()),
        Preset::RoughTail => SpectralField::from_fn(grid, |x| {
            let tail: f64 = (1..n / 2).map(|m| (-0.05 * m as f64).exp() * (m as f64 * x).cos()).sum();
            0.5 * x.cos() + 1e-3 * tail
        }),
        Preset::ZeroMeanMix => SpectralField::from_fn(grid, |x| {
            0.3 * x.cos() + 0.2 * (2.0 * x).sin() - 0.1 * (3.0 * x).cos()
        }),
        Preset::Random => random_interface(&mut ChaCha8Rng::seed_from_u64(seed), grid, 1.0),
    }
}

/// Trigonometric polynomial of degree up to 8 with coefficients
/// `U(-1, 1) / m^2`, rescaled to `max |f'| = slope`.
pub fn random_interface(rng: &mut ChaCha8Rng, grid: Grid, slope: f64) -> SpectralField {
    let degree = 8.min(grid.nyquist() as u32 - 1);
    let modes: Vec<(u32, f64, f64)> = (1..=degree)
        .map(|m| {
            let w = 1.0 / (m * m) as f64;
            (m, w * rng.gen_range(-1.0..1.0), w * rng.gen_range(-1.0..1.0))
        })
        .collect();
    let raw = SpectralField::from_modes(grid, &modes).expect("degree below Nyquist");
    let current = raw.derivative(1).max_abs();
    if current > 0.0 {
        raw.scale(slope / current)
    } else {
        raw
    }
}
