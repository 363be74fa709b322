//! Pump-mode reduction: effective coupling, pump-mode decay rate and the
//! efficiencies that follow from the enhancement factor G.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{ModeEnsemble, PumpDrive};
use crate::error::{Error, Result};

/// Coupling efficiency alpha = G(2+G)/(1+G)^2.
pub fn coupling_efficiency(g: f64) -> f64 {
    g * (2.0 + g) / ((1.0 + g) * (1.0 + g))
}

/// Transfer efficiency alpha' = G/(1+G).
pub fn transfer_efficiency(g: f64) -> f64 {
    g / (1.0 + g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Uncoupled regular-mode decay rate, carried along for the lineshape.
    pub gamma_r: f64,
    /// Non-resonant pump-mode amplitude, sqrt(sum |E_n^0|^2).
    pub e_p0: f64,
    /// |E_p^0|^2.
    pub i_p0: f64,
    /// Effective pump-mode coupling. Complex when some a_n are complex.
    pub g_bar: Complex64,
    /// Pump-mode decay rate; `None` when every g_n vanishes.
    pub gamma_p: Option<f64>,
    /// Enhancement factor.
    #[serde(rename = "G")]
    pub g: f64,
    pub gamma_r_prime: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
}

impl DerivedParams {
    /// Total tunneling rate gamma_r * G.
    pub fn tunneling_rate(&self) -> f64 {
        self.gamma_r * self.g
    }

    /// Parameters of a single effective pump mode with unit non-resonant
    /// intensity, built from (gamma_r, G, gamma_p) alone. The coupling is
    /// g_bar = sqrt(gamma_p gamma_r G).
    pub fn effective(gamma_r: f64, g: f64, gamma_p: f64) -> Self {
        let g_bar = (gamma_p * gamma_r * g).sqrt();
        Self {
            gamma_r,
            e_p0: 1.0,
            i_p0: 1.0,
            g_bar: Complex64::new(g_bar, 0.0),
            gamma_p: (g > 0.0).then_some(gamma_p),
            g,
            gamma_r_prime: gamma_r * (1.0 + g),
            alpha: coupling_efficiency(g),
            alpha_prime: transfer_efficiency(g),
        }
    }

    /// Intensity build-up ratio gamma_p / gamma_r'; zero in the uncoupled case.
    pub fn buildup_ratio(&self) -> f64 {
        self.gamma_p.map_or(0.0, |gp| gp / self.gamma_r_prime)
    }
}

/// Reduce the chaotic modes excited by `drive` to a single pump mode.
pub fn derive_params(ensemble: &ModeEnsemble, drive: &PumpDrive) -> Result<DerivedParams> {
    ensemble.validate()?;
    drive.validate()?;

    let e_n0 = ensemble.nonresonant_amplitudes(drive.e0);
    let i_p0: f64 = e_n0.iter().map(|e| e.norm_sqr()).sum();
    if i_p0 == 0.0 {
        return Err(Error::ZeroPump);
    }
    let e_p0 = i_p0.sqrt();

    let g_bar = ensemble
        .modes
        .iter()
        .zip(&e_n0)
        .map(|(m, e)| m.g * e)
        .sum::<Complex64>()
        / e_p0;

    let gamma_r = ensemble.gamma_r;
    let g = ensemble.enhancement();
    let gbar_sq = g_bar.norm_sqr();

    // Weighted with |g_n/g_bar|^2 so that |g_bar|^2/gamma_p = sum g_n^2/gamma_n
    // holds for complex pump couplings too.
    let gamma_p = if gbar_sq > 0.0 {
        let inv: f64 = ensemble
            .modes
            .iter()
            .map(|m| m.g * m.g / (gbar_sq * m.gamma))
            .sum();
        Some(1.0 / inv)
    } else {
        None
    };

    Ok(DerivedParams {
        gamma_r,
        e_p0,
        i_p0,
        g_bar,
        gamma_p,
        g,
        gamma_r_prime: gamma_r * (1.0 + g),
        alpha: coupling_efficiency(g),
        alpha_prime: transfer_efficiency(g),
    })
}
