//! Run configuration: one JSON object whose "command" key selects the
//! parameter block. Unknown keys are rejected everywhere.

use num_complex::Complex64;
use serde::Deserialize;
use tunnelpump::ray::{CavityGeometry, RayBundle};
use tunnelpump::{ChaoticMode, Measurement, ModeEnsemble, PumpDrive};

use crate::output::Format;
use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    Steady(SteadyConfig),
    Scan(ScanConfig),
    Invert(InvertConfig),
    Raysim(RaysimConfig),
    Transient(TransientConfig),
    Series(SeriesConfig),
    Spectrum(SpectrumConfig),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Steady(_) => "steady",
            Command::Scan(_) => "scan",
            Command::Invert(_) => "invert",
            Command::Raysim(_) => "raysim",
            Command::Transient(_) => "transient",
            Command::Series(_) => "series",
            Command::Spectrum(_) => "spectrum",
        }
    }
}

/// Keys accepted next to any command; command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Common {
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Real number or [re, im] pair.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ComplexInput {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexInput {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexInput::Real(x) => Complex64::new(x, 0.0),
            ComplexInput::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

impl Default for ComplexInput {
    fn default() -> Self {
        ComplexInput::Real(1.0)
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub gamma: f64,
    pub g: f64,
    #[serde(default)]
    pub a: ComplexInput,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub gamma_r: f64,
    #[serde(default)]
    pub omega_r: f64,
    pub modes: Vec<ModeConfig>,
}

impl EnsembleConfig {
    pub fn build(&self) -> Result<ModeEnsemble, CliError> {
        let modes = self
            .modes
            .iter()
            .enumerate()
            .map(|(i, m)| ChaoticMode::new(m.gamma, m.g, m.a.value()).map_err(|e| CliError::config(format!("modes[{i}]: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        ModeEnsemble::new(self.gamma_r, self.omega_r, modes).map_err(CliError::config)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    #[serde(default)]
    pub e0: ComplexInput,
    /// Detuning in units of gamma_r.
    #[serde(default)]
    pub delta: f64,
    #[serde(default, rename = "gamma_L")]
    pub gamma_l: f64,
}

impl DriveConfig {
    pub fn build(&self) -> Result<PumpDrive, CliError> {
        PumpDrive::new(self.e0.value(), self.delta, self.gamma_l).map_err(CliError::config)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyConfig {
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub drive: DriveConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// Explicit points or an inclusive {start, stop, step} range.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DeltaGrid {
    Points(Vec<f64>),
    Range(GridRange),
}

impl DeltaGrid {
    /// Grid points; must be finite and strictly increasing.
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let pts = match *self {
            DeltaGrid::Points(ref p) => p.clone(),
            DeltaGrid::Range(GridRange { start, stop, step }) => {
                if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite() && stop >= start) {
                    return Err(CliError::config("delta_grid: need finite start <= stop and step > 0"));
                }
                let n = ((stop - start) / step + 1e-9).floor();
                if n > 1e7 {
                    return Err(CliError::config("delta_grid: more than 1e7 points"));
                }
                (0..=n as usize).map(|i| start + i as f64 * step).collect()
            }
        };
        if pts.is_empty() {
            return Err(CliError::config("delta_grid: no points"));
        }
        if pts.iter().any(|x| !x.is_finite()) || pts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::config("delta_grid: points must be finite and strictly increasing"));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub e0: ComplexInput,
    /// Pump linewidth [1/s].
    #[serde(default, rename = "gamma_L")]
    pub gamma_l: f64,
    #[serde(default = "one")]
    pub beta_p: f64,
    #[serde(default = "one")]
    pub beta_r: f64,
    pub delta_grid: DeltaGrid,
}

fn default_samples() -> usize {
    2000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvertConfig {
    pub measurements: Vec<Measurement>,
    /// Reference for the gamma_p consistency summary [1/s].
    #[serde(default)]
    pub gamma_p_reference: Option<f64>,
    /// Monte Carlo samples for the uncertainties; 0 skips propagation.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_max_bounces() -> usize {
    10_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaysimConfig {
    pub geometry: CavityGeometry,
    pub bundle: RayBundle,
    #[serde(default = "default_max_bounces")]
    pub max_bounces: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default = "zero")]
    pub e_r: ComplexInput,
    #[serde(default)]
    pub e_n: Vec<ComplexInput>,
}

fn zero() -> ComplexInput {
    ComplexInput::Real(0.0)
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            e_r: zero(),
            e_n: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransientConfig {
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub drive: DriveConfig,
    /// End time [s]; defaults to 20 / gamma_r'.
    #[serde(default)]
    pub t_end: Option<f64>,
    /// Output spacing [s]; defaults to t_end / 1000.
    #[serde(default)]
    pub sample_interval: Option<f64>,
    #[serde(default)]
    pub initial: InitialConfig,
}

fn default_rounds() -> usize {
    40
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub e0: ComplexInput,
    #[serde(default = "default_rounds")]
    pub k_max: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub ensemble: EnsembleConfig,
}

/// Split the shared output keys off and decode the command block.
pub fn parse(text: &str) -> Result<(Command, Common), CliError> {
    let bad = |e: serde_json::Error| CliError::config(format!("config: {e}"));
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(bad)?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| CliError::config("config: expected a JSON object"))?;
    let mut common = serde_json::Map::new();
    for key in ["out", "format", "seed"] {
        if let Some(v) = obj.remove(key) {
            common.insert(key.to_string(), v);
        }
    }
    let common: Common = serde_json::from_value(common.into()).map_err(bad)?;
    let command: Command = serde_json::from_value(value).map_err(bad)?;
    Ok((command, common))
}
