use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{extract, extract_with_g, solve_g, ExtractedParams, Measurement, Uncertain};
use crate::error::{invalid, Error, Result};

/// Draws per input before a sample is given up as unphysical.
const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
}

impl MonteCarloSummary {
    pub fn rejection_fraction(&self) -> f64 {
        self.rejected as f64 / (self.accepted + self.rejected) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainExtraction {
    pub params: ExtractedParams,
    pub n_samples: usize,
    pub rejection_fraction: f64,
}

/// Gaussian draw truncated to `value > lower` (or `>= lower` when
/// `inclusive`) by redrawing.
fn truncated(rng: &mut ChaCha20Rng, u: Uncertain, lower: f64, inclusive: bool) -> Option<f64> {
    if u.sigma == 0.0 {
        return Some(u.value);
    }
    let dist = Normal::new(u.value, u.sigma).ok()?;
    (0..MAX_REDRAWS)
        .map(|_| dist.sample(rng))
        .find(|&x| if inclusive { x >= lower } else { x > lower })
}

fn sample_measurement(meas: &Measurement, rng: &mut ChaCha20Rng) -> Option<Measurement> {
    Some(Measurement {
        mode_label: meas.mode_label.clone(),
        epsilon0: Uncertain::exact(truncated(rng, meas.epsilon0, 0.0, false)?),
        gamma_r_prime_meas: Uncertain::exact(truncated(rng, meas.gamma_r_prime_meas, 0.0, false)?),
        beta_r: Uncertain::exact(truncated(rng, meas.beta_r, 0.0, true)?),
        beta_p: Uncertain::exact(truncated(rng, meas.beta_p, 0.0, false)?),
        gamma_p: Uncertain::exact(truncated(rng, meas.gamma_p, 0.0, false)?),
        gamma_l: meas.gamma_l,
    })
}

/// Push independent Gaussian input errors through `f`.
///
/// Sample `i` draws from its own ChaCha stream (`seed`, stream `i`), and
/// results are reduced in sample order, so the summary does not depend on
/// the thread count. Samples for which `f` fails are counted as rejected.
pub fn monte_carlo<F>(meas: &Measurement, n_samples: usize, seed: u64, f: F) -> Result<MonteCarloSummary>
where
    F: Fn(&Measurement) -> Result<Vec<f64>> + Sync,
{
    meas.validate()?;
    if n_samples == 0 {
        return Err(invalid("n_samples", "must be >= 1"));
    }
    let outputs: Vec<Option<Vec<f64>>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let m = sample_measurement(meas, &mut rng)?;
            f(&m).ok()
        })
        .collect();

    let ok: Vec<&Vec<f64>> = outputs.iter().flatten().collect();
    let accepted = ok.len();
    let width = ok.first().map_or(0, |v| v.len());
    let mut mean = vec![0.0; width];
    let mut sigma = vec![0.0; width];
    if accepted > 0 {
        let n = accepted as f64;
        for j in 0..width {
            // shifted by the first sample so identical samples give exactly zero
            let shift = ok[0][j];
            let (s1, s2) = ok.iter().fold((0.0, 0.0), |(s1, s2), v| {
                let d = v[j] - shift;
                (s1 + d, s2 + d * d)
            });
            mean[j] = shift + s1 / n;
            if accepted > 1 {
                sigma[j] = ((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0).sqrt();
            }
        }
    }
    Ok(MonteCarloSummary {
        mean,
        sigma,
        accepted,
        rejected: n_samples - accepted,
    })
}

/// Central values from [`extract`] with Monte Carlo standard deviations.
///
/// Samples without a root are rejected; samples with two roots take the
/// one nearest the central G.
pub fn propagate_uncertainty(meas: &Measurement, n_samples: usize, seed: u64) -> Result<UncertainExtraction> {
    if n_samples < 1000 {
        return Err(invalid("n_samples", "need at least 1000 samples"));
    }
    let mut central = extract(meas)?;
    let g0 = central.g.value;
    let summary = monte_carlo(meas, n_samples, seed, |m| {
        let roots = solve_g(m)?;
        let g = roots
            .iter()
            .copied()
            .min_by(|a, b| (a - g0).abs().total_cmp(&(b - g0).abs()))
            .ok_or(Error::NoRoot {
                epsilon0: m.epsilon0.value,
                min: f64::NAN,
                max: f64::NAN,
            })?;
        Ok(extract_with_g(m, g).values().to_vec())
    })?;
    if summary.accepted == 0 {
        return Err(Error::NoRoot {
            epsilon0: meas.epsilon0.value,
            min: f64::NAN,
            max: f64::NAN,
        });
    }
    let s = &summary.sigma;
    central.gamma_r.sigma = s[0];
    central.g.sigma = s[1];
    central.g_bar.sigma = s[2];
    central.alpha.sigma = s[3];
    central.alpha_prime.sigma = s[4];
    central.gamma_r_g.sigma = s[5];
    Ok(UncertainExtraction {
        params: central,
        n_samples,
        rejection_fraction: summary.rejection_fraction(),
    })
}
