//! Uncoupled modes and the external drive.
//!
//! All decay rates are field (amplitude) rates in 1/s; the matching
//! intensity decay rate is twice the value stored here.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Ratio |g_n|/gamma_n above which the over-damped assumption is considered
/// violated and a warning is logged.
pub const OVERDAMPED_LIMIT: f64 = 0.1;

/// A low-Q chaotic mode driven by the pump and coupled to the regular mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChaoticMode {
    /// Field decay rate [1/s].
    pub gamma: f64,
    /// Real tunneling coupling to the regular mode [1/s].
    pub g: f64,
    /// Pump coupling coefficient.
    pub a: Complex64,
}

impl ChaoticMode {
    pub fn new(gamma: f64, g: f64, a: Complex64) -> Result<Self> {
        let mode = Self { gamma, g, a };
        mode.validate()?;
        if mode.overdamping_ratio() > OVERDAMPED_LIMIT {
            log::warn!(
                "chaotic mode with |g|/gamma = {:.3} exceeds {OVERDAMPED_LIMIT}; \
                 over-damped coupling assumed by the model",
                mode.overdamping_ratio()
            );
        }
        Ok(mode)
    }

    /// Real-valued pump coupling.
    pub fn real(gamma: f64, g: f64, a: f64) -> Result<Self> {
        Self::new(gamma, g, Complex64::new(a, 0.0))
    }

    /// |g_n| / gamma_n.
    pub fn overdamping_ratio(&self) -> f64 {
        self.g.abs() / self.gamma
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(invalid("gamma_n", format!("must be > 0, got {}", self.gamma)));
        }
        if !self.g.is_finite() {
            return Err(invalid("g_n", "must be finite"));
        }
        if !(self.a.re.is_finite() && self.a.im.is_finite()) {
            return Err(invalid("a_n", "must be finite"));
        }
        Ok(())
    }
}

/// One regular mode plus the chaotic modes it tunnels into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEnsemble {
    /// Field decay rate of the uncoupled regular mode [1/s].
    pub gamma_r: f64,
    /// Regular-mode angular frequency [rad/s]; informational only.
    pub omega_r: f64,
    pub modes: Vec<ChaoticMode>,
}

impl ModeEnsemble {
    pub fn new(gamma_r: f64, omega_r: f64, modes: Vec<ChaoticMode>) -> Result<Self> {
        let ens = Self {
            gamma_r,
            omega_r,
            modes,
        };
        ens.validate()?;
        Ok(ens)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_r.is_finite() && self.gamma_r > 0.0) {
            return Err(invalid(
                "gamma_r",
                format!("must be > 0, got {}", self.gamma_r),
            ));
        }
        if self.modes.is_empty() {
            return Err(invalid("modes", "at least one chaotic mode is required"));
        }
        self.modes.iter().try_for_each(ChaoticMode::validate)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Sum of g_n^2 / gamma_n, the total tunneling rate gamma_r * G.
    pub fn tunneling_rate(&self) -> f64 {
        self.modes.iter().map(|m| m.g * m.g / m.gamma).sum()
    }

    /// Enhancement factor G = sum g_n^2 / (gamma_n gamma_r).
    pub fn enhancement(&self) -> f64 {
        self.tunneling_rate() / self.gamma_r
    }

    /// Largest |g_n| / gamma_n.
    pub fn max_overdamping_ratio(&self) -> f64 {
        self.modes
            .iter()
            .map(ChaoticMode::overdamping_ratio)
            .fold(0.0, f64::max)
    }

    /// Non-resonant amplitudes a_n E0 / gamma_n.
    pub fn nonresonant_amplitudes(&self, e0: Complex64) -> Vec<Complex64> {
        self.modes.iter().map(|m| m.a * e0 / m.gamma).collect()
    }

    /// The real decay matrix for zero detuning, ordered (regular, chaotic 1..N):
    ///
    /// ```text
    /// [ gamma_r  -g_1   ...  -g_N   ]
    /// [ g_1      gamma_1 ...  0     ]
    /// [ ...                         ]
    /// [ g_N      0      ...  gamma_N]
    /// ```
    pub fn decay_matrix(&self) -> DMatrix<f64> {
        let n = self.modes.len() + 1;
        let mut m = DMatrix::zeros(n, n);
        m[(0, 0)] = self.gamma_r;
        for (k, mode) in self.modes.iter().enumerate() {
            m[(0, k + 1)] = -mode.g;
            m[(k + 1, 0)] = mode.g;
            m[(k + 1, k + 1)] = mode.gamma;
        }
        m
    }

    /// Complex decay matrix with gamma_r + i*Delta in the regular entry.
    pub fn decay_matrix_detuned(&self, detuning: f64) -> DMatrix<Complex64> {
        let mut m = self.decay_matrix().map(|x| Complex64::new(x, 0.0));
        m[(0, 0)] = Complex64::new(self.gamma_r, detuning);
        m
    }
}

/// External pump laser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpDrive {
    /// Drive amplitude E0.
    pub e0: Complex64,
    /// Normalized detuning delta = Delta / gamma_r.
    pub delta: f64,
    /// Pump laser linewidth [1/s]; 0 means monochromatic.
    pub gamma_l: f64,
}

impl PumpDrive {
    pub fn new(e0: Complex64, delta: f64, gamma_l: f64) -> Result<Self> {
        let d = Self { e0, delta, gamma_l };
        d.validate()?;
        Ok(d)
    }

    /// Monochromatic drive with real amplitude.
    pub fn monochromatic(e0: f64, delta: f64) -> Self {
        Self {
            e0: Complex64::new(e0, 0.0),
            delta,
            gamma_l: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_l.is_finite() && self.gamma_l >= 0.0) {
            return Err(invalid(
                "gamma_L",
                format!("must be >= 0, got {}", self.gamma_l),
            ));
        }
        if !self.delta.is_finite() {
            return Err(invalid("delta", "must be finite"));
        }
        if !(self.e0.re.is_finite() && self.e0.im.is_finite()) {
            return Err(invalid("E0", "must be finite"));
        }
        Ok(())
    }

    /// Dimensional detuning Delta = delta * gamma_r [rad/s].
    pub fn detuning(&self, gamma_r: f64) -> f64 {
        self.delta * gamma_r
    }
}
