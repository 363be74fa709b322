//! Round-by-round construction of the on-resonance steady state: amplitude
//! tunnels from the chaotic modes into the regular mode, back out, and so
//! on, with each round scaled by -G relative to the previous one.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{ModeEnsemble, PumpDrive};
use crate::error::{invalid, Error, Result};
use crate::params::derive_params;
use crate::steady::steady_state_exact;

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    re: (f64, f64),
    im: (f64, f64),
}

fn neumaier(acc: &mut (f64, f64), x: f64) {
    let (sum, comp) = acc;
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    pub fn add(&mut self, z: Complex64) {
        neumaier(&mut self.re, z.re);
        neumaier(&mut self.im, z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundContributions {
    /// E_r^(k) for k = 1..=k_max.
    pub e_r_rounds: Vec<Complex64>,
    /// e_n_rounds[n][k-1] = E_n^(k).
    pub e_n_rounds: Vec<Vec<Complex64>>,
    /// Non-resonant starting amplitudes E_n^0.
    pub e_n0: Vec<Complex64>,
    pub k_max: usize,
    /// Enhancement factor; the series converges only for G < 1.
    #[serde(rename = "G")]
    pub g: f64,
}

impl RoundContributions {
    pub fn converges(&self) -> bool {
        self.g < 1.0
    }

    /// Compensated partial sums S_k = sum_{j<=k} E_r^(j).
    pub fn partial_sums(&self) -> Vec<Complex64> {
        let mut acc = CompensatedSum::default();
        self.e_r_rounds
            .iter()
            .map(|z| {
                acc.add(*z);
                acc.value()
            })
            .collect()
    }

    pub fn regular_sum(&self) -> Complex64 {
        self.partial_sums().last().copied().unwrap_or_default()
    }

    /// E_n^0 + sum_k E_n^(k) for every chaotic mode.
    pub fn chaotic_sums(&self) -> Vec<Complex64> {
        self.e_n_rounds
            .iter()
            .zip(&self.e_n0)
            .map(|(rounds, e0)| {
                let mut acc = CompensatedSum::default();
                acc.add(*e0);
                rounds.iter().for_each(|z| acc.add(*z));
                acc.value()
            })
            .collect()
    }
}

/// Compute `k_max` interference rounds on resonance.
///
/// Rounds are produced for any G so that partial sums can be studied in the
/// divergent regime; [`RoundContributions::converges`] reports whether the
/// series has a limit. If the first round vanishes (no coupling to the pumped
/// modes) the series stops after one round.
pub fn interference_rounds(
    ensemble: &ModeEnsemble,
    drive: &PumpDrive,
    k_max: usize,
) -> Result<RoundContributions> {
    ensemble.validate()?;
    drive.validate()?;
    if drive.delta != 0.0 {
        return Err(invalid("delta", "interference series is defined on resonance only"));
    }
    if k_max == 0 {
        return Err(invalid("k_max", "need at least one round"));
    }
    let g = ensemble.enhancement();
    let e_n0 = ensemble.nonresonant_amplitudes(drive.e0);
    let first: Complex64 = ensemble
        .modes
        .iter()
        .zip(&e_n0)
        .map(|(m, e)| m.g * e)
        .sum::<Complex64>()
        / ensemble.gamma_r;

    let rounds = if first == Complex64::new(0.0, 0.0) { 1 } else { k_max };
    let mut e_r_rounds = Vec::with_capacity(rounds);
    let mut current = first;
    for _ in 0..rounds {
        e_r_rounds.push(current);
        current *= -g;
    }
    let e_n_rounds = ensemble
        .modes
        .iter()
        .map(|m| e_r_rounds.iter().map(|er| -(m.g / m.gamma) * er).collect())
        .collect();

    Ok(RoundContributions {
        e_r_rounds,
        e_n_rounds,
        e_n0,
        k_max: rounds,
        g,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResummationReport {
    #[serde(rename = "G")]
    pub g: f64,
    pub rounds: usize,
    pub e_r_series: Complex64,
    pub e_r_closed_form: Complex64,
    /// |sum - closed form|
    pub e_r_error: f64,
    /// |E_r^(1)| G^k / (1+G): the exact size of the truncated tail.
    pub remainder: f64,
    /// |E_r^(1)| G^k / (1-G): the geometric tail bound.
    pub remainder_bound: f64,
    /// max_n |E_n^0 + sum_k E_n^(k) - E_n(exact)|
    pub e_n_max_error: f64,
    /// max_k |E_r^(k+1)/E_r^(k) + G|
    pub ratio_deviation: f64,
    /// |E_r^(1) - (g_bar/gamma_r) E_p^0|
    pub first_round_identity_error: f64,
}

/// Sum `k_max` rounds and compare with the closed-form steady state.
pub fn series_resummation_check(
    ensemble: &ModeEnsemble,
    drive: &PumpDrive,
    k_max: usize,
) -> Result<ResummationReport> {
    let rc = interference_rounds(ensemble, drive, k_max)?;
    if !rc.converges() {
        return Err(Error::DivergentSeries { g: rc.g });
    }
    let exact = steady_state_exact(ensemble, drive)?;
    let e_r_series = rc.regular_sum();
    let first = rc.e_r_rounds[0];

    let e_n_max_error = rc
        .chaotic_sums()
        .iter()
        .zip(&exact.e_n)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    let ratio_deviation = rc
        .e_r_rounds
        .windows(2)
        // rounds near underflow carry too few significant bits for a ratio
        .filter(|w| w[1].norm() > f64::MIN_POSITIVE / f64::EPSILON)
        // scaled first: complex division squares the divisor
        .map(|w| {
            let s = w[0].norm();
            ((w[1] / s) / (w[0] / s) + rc.g).norm()
        })
        .fold(0.0, f64::max);

    let first_round_identity_error = match derive_params(ensemble, drive) {
        Ok(p) => (first - p.g_bar * p.e_p0 / ensemble.gamma_r).norm(),
        Err(Error::ZeroPump) => first.norm(),
        Err(e) => return Err(e),
    };

    let gk = rc.g.powi(rc.k_max as i32);
    Ok(ResummationReport {
        g: rc.g,
        rounds: rc.k_max,
        e_r_series,
        e_r_closed_form: exact.e_r,
        e_r_error: (e_r_series - exact.e_r).norm(),
        remainder: first.norm() * gk / (1.0 + rc.g),
        remainder_bound: first.norm() * gk / (1.0 - rc.g),
        e_n_max_error,
        ratio_deviation,
        first_round_identity_error,
    })
}
