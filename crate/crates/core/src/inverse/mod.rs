//! Extraction of the regular-mode decay rate and the enhancement factor from
//! a measured on-resonance pumping efficiency and a measured linewidth.
//!
//! With gamma_r' fixed by the linewidth, the on-resonance efficiency as a
//! function of G is
//!
//! ```text
//! eps(G) = 1 + L0 (1 - u)(K - 1 - u),   u = 1/(1+G)
//! L0 = 1 / (1 + gamma_L/gamma_r'),     K = gamma_p beta_r / (gamma_r' beta_p)
//! ```
//!
//! a parabola in u with its vertex at u = K/2. For K >= 2 it is monotone on
//! G >= 0; otherwise it first dips below 1 and turns at G* = 2/K - 1, and an
//! efficiency below 1 can have two solutions.

mod montecarlo;

pub use montecarlo::{monte_carlo, propagate_uncertainty, MonteCarloSummary, UncertainExtraction};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lineshape::efficiency;
use crate::params::{coupling_efficiency, transfer_efficiency, DerivedParams};

/// Upper end of the G search interval.
pub const G_MAX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Uncertain {
    pub value: f64,
    #[serde(default)]
    pub sigma: f64,
}

impl Uncertain {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, sigma: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measurement {
    pub mode_label: String,
    /// Relative pumping efficiency on resonance.
    pub epsilon0: Uncertain,
    /// Measured regular-mode linewidth gamma_r' [1/s].
    pub gamma_r_prime_meas: Uncertain,
    pub beta_r: Uncertain,
    pub beta_p: Uncertain,
    /// Pump-mode decay rate [1/s].
    pub gamma_p: Uncertain,
    /// Pump linewidth [1/s].
    #[serde(rename = "gamma_L")]
    pub gamma_l: f64,
}

impl Measurement {
    pub fn validate(&self) -> Result<()> {
        for (name, u) in [
            ("epsilon0", self.epsilon0),
            ("gamma_r_prime_meas", self.gamma_r_prime_meas),
            ("beta_r", self.beta_r),
            ("beta_p", self.beta_p),
            ("gamma_p", self.gamma_p),
        ] {
            if !(u.value.is_finite() && u.sigma.is_finite() && u.sigma >= 0.0) {
                return Err(invalid(name, "value and sigma must be finite, sigma >= 0"));
            }
        }
        if self.beta_p.value <= 0.0 {
            return Err(Error::InvalidOverlap {
                beta_p: self.beta_p.value,
            });
        }
        if self.epsilon0.value <= 0.0 {
            return Err(invalid("epsilon0", "must be > 0"));
        }
        if self.gamma_r_prime_meas.value <= 0.0 {
            return Err(invalid("gamma_r_prime_meas", "must be > 0"));
        }
        if self.gamma_p.value <= 0.0 {
            return Err(invalid("gamma_p", "must be > 0"));
        }
        if self.beta_r.value < 0.0 {
            return Err(invalid("beta_r", "must be >= 0"));
        }
        if !(self.gamma_l.is_finite() && self.gamma_l >= 0.0) {
            return Err(invalid("gamma_L", "must be >= 0"));
        }
        Ok(())
    }

    /// Build-up-weighted overlap ratio K = gamma_p beta_r / (gamma_r' beta_p).
    pub fn overlap_gain(&self) -> f64 {
        self.gamma_p.value * self.beta_r.value / (self.gamma_r_prime_meas.value * self.beta_p.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedColumns {
    pub gamma_r_prime: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
    #[serde(rename = "gamma_rG")]
    pub gamma_r_g: f64,
    pub g_bar: f64,
}

/// Table columns implied by (gamma_r, G, gamma_p).
pub fn derived_columns(gamma_r: f64, g: f64, gamma_p: f64) -> DerivedColumns {
    DerivedColumns {
        gamma_r_prime: gamma_r * (1.0 + g),
        alpha: coupling_efficiency(g),
        alpha_prime: transfer_efficiency(g),
        gamma_r_g: gamma_r * g,
        g_bar: (gamma_p * gamma_r * g).sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedParams {
    pub mode_label: String,
    pub gamma_r: Uncertain,
    #[serde(rename = "G")]
    pub g: Uncertain,
    pub g_bar: Uncertain,
    pub alpha: Uncertain,
    pub alpha_prime: Uncertain,
    #[serde(rename = "gamma_rG")]
    pub gamma_r_g: Uncertain,
}

impl ExtractedParams {
    fn central(mode_label: &str, gamma_r: f64, g: f64, gamma_p: f64) -> Self {
        let c = derived_columns(gamma_r, g, gamma_p);
        Self {
            mode_label: mode_label.to_string(),
            gamma_r: Uncertain::exact(gamma_r),
            g: Uncertain::exact(g),
            g_bar: Uncertain::exact(c.g_bar),
            alpha: Uncertain::exact(c.alpha),
            alpha_prime: Uncertain::exact(c.alpha_prime),
            gamma_r_g: Uncertain::exact(c.gamma_r_g),
        }
    }

    /// Output columns in a fixed order: gamma_r, G, g_bar, alpha, alpha', gamma_rG.
    pub fn values(&self) -> [f64; 6] {
        [
            self.gamma_r.value,
            self.g.value,
            self.g_bar.value,
            self.alpha.value,
            self.alpha_prime.value,
            self.gamma_r_g.value,
        ]
    }
}

/// On-resonance efficiency predicted by the coupled-mode model.
pub fn forward_epsilon0(
    gamma_r: f64,
    g: f64,
    gamma_p: f64,
    beta_r: f64,
    beta_p: f64,
    gamma_l: f64,
) -> Result<f64> {
    efficiency(&DerivedParams::effective(gamma_r, g, gamma_p), 0.0, beta_p, beta_r, gamma_l)
}

/// eps(0) as a function of G with gamma_r = gamma_r'/(1+G).
fn model(meas: &Measurement, g: f64) -> Result<f64> {
    let gamma_r = meas.gamma_r_prime_meas.value / (1.0 + g);
    forward_epsilon0(
        gamma_r,
        g,
        meas.gamma_p.value,
        meas.beta_r.value,
        meas.beta_p.value,
        meas.gamma_l,
    )
}

/// Bisection on a bracket with a sign change, down to adjacent floats.
fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Solve eps(0; G) = epsilon0 for G in [0, G_MAX].
///
/// The interval is split at the turning point G* when it lies inside, so
/// each piece is monotone and holds at most one root.
pub fn solve_g(meas: &Measurement) -> Result<Vec<f64>> {
    meas.validate()?;
    let target = meas.epsilon0.value;
    let k = meas.overlap_gain();
    let mut knots = vec![0.0];
    if k > 0.0 {
        let turn = 2.0 / k - 1.0;
        if turn > 0.0 && turn < G_MAX {
            knots.push(turn);
        }
    }
    knots.push(G_MAX);

    let resid = |g: f64| model(meas, g).map(|e| e - target);
    let values: Vec<f64> = knots.iter().map(|&g| resid(g)).collect::<Result<_>>()?;

    let mut roots: Vec<f64> = Vec::new();
    for i in 0..knots.len() - 1 {
        let (a, b) = (knots[i], knots[i + 1]);
        let (fa, fb) = (values[i], values[i + 1]);
        let root = if fa == 0.0 {
            Some(a)
        } else if fb == 0.0 {
            Some(b)
        } else if (fa > 0.0) != (fb > 0.0) {
            Some(bisect(resid, a, b, fa)?)
        } else {
            None
        };
        if let Some(r) = root {
            if roots.last().map_or(true, |&last| last != r) {
                roots.push(r);
            }
        }
    }
    if roots.is_empty() {
        let (min, max) = values
            .iter()
            .map(|v| v + target)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        return Err(Error::NoRoot {
            epsilon0: target,
            min,
            max,
        });
    }
    Ok(roots)
}

/// Central-value extraction of (gamma_r, G) and the columns derived from
/// them. Two admissible values of G give [`Error::AmbiguousRoot`].
pub fn extract(meas: &Measurement) -> Result<ExtractedParams> {
    let roots = solve_g(meas)?;
    if roots.len() > 1 {
        return Err(Error::AmbiguousRoot {
            roots: [roots[0], roots[1]],
        });
    }
    Ok(extract_with_g(meas, roots[0]))
}

fn extract_with_g(meas: &Measurement, g: f64) -> ExtractedParams {
    let gamma_r = meas.gamma_r_prime_meas.value / (1.0 + g);
    ExtractedParams::central(&meas.mode_label, gamma_r, g, meas.gamma_p.value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaPConsistency {
    /// gamma_p = g_bar^2 / (gamma_r G) for every row [1/s].
    pub per_mode: Vec<f64>,
    pub mean: f64,
    /// (max - min) / mean.
    pub spread: f64,
    /// max |gamma_p - reference| / reference, when a reference is given.
    pub max_deviation: Option<f64>,
}

/// Pump-mode decay rate implied by each (g_bar, gamma_rG) row.
pub fn gamma_p_consistency(rows: &[(f64, f64)], reference: Option<f64>) -> Result<GammaPConsistency> {
    if rows.len() < 2 {
        return Err(invalid("rows", "need at least two modes"));
    }
    let per_mode: Vec<f64> = rows.iter().map(|&(gb, tr)| gb * gb / tr).collect();
    if per_mode.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(invalid("rows", "g_bar and gamma_rG must be positive"));
    }
    let mean = per_mode.iter().sum::<f64>() / per_mode.len() as f64;
    let (lo, hi) = per_mode
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let max_deviation = reference.map(|r| per_mode.iter().map(|v| (v - r).abs() / r).fold(0.0, f64::max));
    Ok(GammaPConsistency {
        per_mode,
        mean,
        spread: (hi - lo) / mean,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn synthetic(gamma_r: f64, g: f64, ratio: f64, gamma_l: f64) -> Measurement {
        let gamma_p = 1.7e12;
        let eps = forward_epsilon0(gamma_r, g, gamma_p, ratio, 1.0, gamma_l).unwrap();
        Measurement {
            mode_label: "s".into(),
            epsilon0: Uncertain::exact(eps),
            gamma_r_prime_meas: Uncertain::exact(gamma_r * (1.0 + g)),
            beta_r: Uncertain::exact(ratio),
            beta_p: Uncertain::exact(1.0),
            gamma_p: Uncertain::exact(gamma_p),
            gamma_l,
        }
    }

    #[test]
    fn round_trip_mode_one_scale() {
        let m = synthetic(1.7e9, 0.19, 0.2, 5e8);
        let e = extract(&m).unwrap();
        assert_relative_eq!(e.g.value, 0.19, max_relative = 1e-9);
        assert_relative_eq!(e.gamma_r.value, 1.7e9, max_relative = 1e-9);
        assert_eq!(e.gamma_r.value * (1.0 + e.g.value), m.gamma_r_prime_meas.value);
    }

    #[test]
    fn efficiency_rises_with_overlap_ratio() {
        let a = forward_epsilon0(1.7e9, 0.3, 1.7e12, 0.1, 1.0, 0.0).unwrap();
        let b = forward_epsilon0(1.7e9, 0.3, 1.7e12, 0.2, 1.0, 0.0).unwrap();
        assert!(b > a);
    }

    #[test]
    fn table_row_two_columns() {
        let c = derived_columns(7.9e9 / 1.75, 0.75, 1.7e12);
        assert!((c.gamma_r_prime / 1e9 - 7.9).abs() < 1e-12);
        assert!((7.9f64 / 1.75 - 4.5).abs() < 0.05);
        assert!((c.alpha - 0.67).abs() < 0.005);
        assert!((c.alpha_prime - 0.43).abs() < 0.005);
        assert!((c.gamma_r_g / 1e9 - 3.4).abs() < 0.05);
    }

    #[test]
    fn table_row_five_columns() {
        let c = derived_columns(4.4e11, 0.80, 1.7e12);
        assert_relative_eq!(c.gamma_r_prime, 7.92e11, max_relative = 1e-14);
        assert!((c.alpha - 0.691).abs() < 5e-4);
        assert!((c.alpha_prime - 0.444).abs() < 5e-4);
        assert_relative_eq!(c.gamma_r_g, 3.52e11, max_relative = 1e-14);
        assert!((c.g_bar / 1e10 - 77.0).abs() < 1.0);
    }

    #[test]
    fn zero_coupling_columns() {
        let c = derived_columns(3e9, 0.0, 1.7e12);
        assert_eq!((c.alpha, c.alpha_prime, c.g_bar), (0.0, 0.0, 0.0));
        assert_eq!(c.gamma_r_prime, 3e9);
    }

    #[test]
    fn unit_efficiency_without_regular_overlap() {
        let mut m = synthetic(1.7e9, 0.19, 0.0, 0.0);
        m.epsilon0 = Uncertain::exact(1.0);
        let e = extract(&m).unwrap();
        assert_eq!(e.g.value, 0.0);
        assert_eq!(e.gamma_r.value, m.gamma_r_prime_meas.value);
        assert_eq!(e.g_bar.value, 0.0);
    }

    #[test]
    fn unreachable_efficiency_is_no_root() {
        let mut m = synthetic(1.7e9, 0.19, 0.2, 0.0);
        m.epsilon0 = Uncertain::exact(1e6);
        assert!(matches!(extract(&m), Err(Error::NoRoot { .. })));
        // without regular overlap eps(0) <= 1
        let mut m = synthetic(1.7e9, 0.19, 0.0, 0.0);
        m.epsilon0 = Uncertain::exact(1.5);
        assert!(matches!(extract(&m), Err(Error::NoRoot { .. })));
    }

    #[test]
    fn dip_below_one_is_ambiguous() {
        // K = 1.5: eps(0) dips to a minimum at G* = 1/3 and comes back up
        let mut m = synthetic(1.0, 0.1, 1.5, 0.0);
        m.gamma_p = Uncertain::exact(1.1);
        m.gamma_r_prime_meas = Uncertain::exact(1.1);
        let k = m.overlap_gain();
        assert_relative_eq!(k, 1.5, max_relative = 1e-15);
        let u_lo = 0.9;
        m.epsilon0 = Uncertain::exact(1.0 + (1.0 - u_lo) * (k - 1.0 - u_lo));
        match extract(&m) {
            Err(Error::AmbiguousRoot { roots }) => {
                assert_relative_eq!(roots[0], 1.0 / 0.9 - 1.0, max_relative = 1e-9);
                assert_relative_eq!(roots[1], 1.0 / 0.6 - 1.0, max_relative = 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_beta_p_rejected() {
        let mut m = synthetic(1.7e9, 0.19, 0.2, 0.0);
        m.beta_p = Uncertain::exact(0.0);
        assert!(matches!(extract(&m), Err(Error::InvalidOverlap { .. })));
    }

    #[test]
    fn consistency_of_identical_and_synthetic_rows() {
        let c = gamma_p_consistency(&[(2.3e10, 3.2e8), (2.3e10, 3.2e8)], None).unwrap();
        assert_eq!(c.spread, 0.0);
        let rows: Vec<(f64, f64)> = [(1.7e9, 0.19), (4.5e9, 0.75), (1.5e10, 0.3)]
            .iter()
            .map(|&(gr, g)| {
                let c = derived_columns(gr, g, 1.7e12);
                (c.g_bar, c.gamma_r_g)
            })
            .collect();
        let c = gamma_p_consistency(&rows, Some(1.7e12)).unwrap();
        assert!(c.max_deviation.unwrap() < 1e-14);
        assert!(gamma_p_consistency(&rows[..1], None).is_err());
    }
}
