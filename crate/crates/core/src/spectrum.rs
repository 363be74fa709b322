//! Decay spectrum of the coupled system on resonance.
//!
//! The eigenvalues of the decay matrix are the zeros of
//!
//! ```text
//! s(lambda) = (gamma_r - lambda) + sum_n g_n^2 / (gamma_n - lambda)
//! ```
//!
//! plus gamma_n for every chaotic mode with g_n = 0. `s` has a pole at each
//! coupled gamma_n. Below the smallest pole it is convex, above the largest
//! it is concave, and between adjacent poles it runs from -inf to +inf.
//! Roots are bracketed from that structure and refined by bisection followed
//! by a bracket-preserving secant (Illinois) iteration; the full set is
//! checked against a dense eigenvalue solve of the decay matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::ModeEnsemble;
use crate::error::{Error, Result};
use crate::roots::bracketed_root;

/// Relative tolerance below which two chaotic decay rates count as equal.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMethod {
    /// All N+1 eigenvalues located as real roots of the secular function.
    Secular,
    /// Degenerate rates or complex eigenvalues; values taken from the dense
    /// solve (real parts).
    DenseFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// All N+1 decay eigenvalues in ascending order [1/s].
    pub lambda_exact: Vec<f64>,
    /// Eigenvalues from the dense solve, sorted by real part.
    pub lambda_dense: Vec<Complex64>,
    /// The eigenvalue nearest gamma_r: the modified regular-mode decay rate.
    pub lambda_regular_exact: f64,
    /// gamma_r (1 + G).
    pub lambda_regular_firstorder: f64,
    /// Eigenvector of `lambda_regular_exact`, regular component first and
    /// normalized to 1.
    pub psi_r_prime: Vec<f64>,
    pub method: SpectrumMethod,
    pub degenerate_rates: bool,
    /// max_k |lambda_exact[k] - Re lambda_dense[k]| / max(|lambda|), when
    /// the secular route succeeded.
    pub dense_mismatch: Option<f64>,
}

impl SpectrumResult {
    /// |lambda_exact - gamma_r(1+G)| / lambda_exact.
    pub fn firstorder_gap(&self) -> f64 {
        (self.lambda_regular_exact - self.lambda_regular_firstorder).abs() / self.lambda_regular_exact
    }
}

struct Secular {
    gamma_r: f64,
    /// (pole, summed g^2) for coupled modes, ascending by pole.
    poles: Vec<(f64, f64)>,
}

impl Secular {
    fn value(&self, x: f64) -> f64 {
        (self.gamma_r - x) + self.poles.iter().map(|&(p, w)| w / (p - x)).sum::<f64>()
    }

    fn slope(&self, x: f64) -> f64 {
        -1.0 + self
            .poles
            .iter()
            .map(|&(p, w)| w / ((p - x) * (p - x)))
            .sum::<f64>()
    }
}

/// Zero of a monotone function on (a, b) given sign(f(a)) != sign(f(b)).
fn monotone_zero<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    bracketed_root(f, a, b)
}

/// Step just inside an open pole boundary: the closest float to `pole` in
/// direction `dir` for which `s` has the sign it takes next to the pole.
fn near_pole(sec: &Secular, pole: f64, dir: f64, want_positive: bool) -> Option<f64> {
    let mut off = 1e-12 * pole.abs().max(1.0);
    for _ in 0..60 {
        let x = pole + dir * off;
        let v = sec.value(x);
        if (v > 0.0) == want_positive && v.is_finite() {
            return Some(x);
        }
        off *= 0.1;
        if off < f64::EPSILON * pole.abs() {
            break;
        }
    }
    None
}

fn secular_real_roots(sec: &Secular, lower: f64, upper: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let poles: Vec<f64> = sec.poles.iter().map(|p| p.0).collect();
    let Some((&first, &last)) = poles.first().zip(poles.last()) else {
        // no coupled mode: s is linear
        return vec![sec.gamma_r];
    };

    // Below the first pole: convex, +inf at both ends.
    {
        let mut lo = lower;
        while sec.slope(lo) >= 0.0 {
            lo -= (first - lo).abs().max(1.0);
        }
        let hi = near_pole(sec, first, -1.0, true).unwrap_or(first);
        let turn = if sec.slope(hi) <= 0.0 {
            hi
        } else {
            monotone_zero(|x| sec.slope(x), lo, hi)
        };
        let smin = sec.value(turn);
        if smin < 0.0 {
            let mut left = lo;
            while sec.value(left) <= 0.0 {
                left -= (turn - left).abs().max(1.0);
            }
            roots.push(bracketed_root(|x| sec.value(x), left, turn));
            roots.push(bracketed_root(|x| sec.value(x), turn, hi));
        } else if smin == 0.0 {
            roots.push(turn);
            roots.push(turn);
        }
    }

    // Between poles: -inf -> +inf.
    for w in poles.windows(2) {
        let a = near_pole(sec, w[0], 1.0, false);
        let b = near_pole(sec, w[1], -1.0, true);
        match (a, b) {
            (Some(a), Some(b)) if a < b => roots.push(bracketed_root(|x| sec.value(x), a, b)),
            (None, _) => roots.push(w[0]),
            _ => roots.push(w[1]),
        }
    }

    // Above the last pole: concave, -inf at both ends.
    {
        let lo = near_pole(sec, last, 1.0, false).unwrap_or(last);
        let mut hi = upper;
        while sec.slope(hi) >= 0.0 {
            hi += (hi - last).abs().max(1.0);
        }
        let turn = if sec.slope(lo) <= 0.0 {
            lo
        } else {
            monotone_zero(|x| sec.slope(x), lo, hi)
        };
        let smax = sec.value(turn);
        if smax > 0.0 {
            let mut right = hi;
            while sec.value(right) >= 0.0 {
                right += (right - turn).abs().max(1.0);
            }
            roots.push(bracketed_root(|x| sec.value(x), lo, turn));
            roots.push(bracketed_root(|x| sec.value(x), turn, right));
        } else if smax == 0.0 {
            roots.push(turn);
            roots.push(turn);
        }
    }
    roots
}

fn dense_eigenvalues(ensemble: &ModeEnsemble) -> Vec<Complex64> {
    let mut ev: Vec<Complex64> = ensemble.decay_matrix().complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    ev
}

/// Eigenvector of the decay matrix for an eigenvalue `lambda` by inverse
/// iteration, normalized so the regular component is 1.
fn inverse_iteration(ensemble: &ModeEnsemble, lambda: f64) -> Result<Vec<f64>> {
    let gamma = ensemble.decay_matrix();
    let n = gamma.nrows();
    let shift = lambda * (1.0 + 1e-9) + 1e-300;
    let shifted = &gamma - DMatrix::<f64>::identity(n, n) * shift;
    let lu = shifted.lu();
    let mut x = DVector::<f64>::from_element(n, 1.0);
    for _ in 0..4 {
        let y = lu.solve(&x).ok_or(Error::SingularMatrix)?;
        let norm = y.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::SingularMatrix);
        }
        x = y / norm;
    }
    if x[0] == 0.0 {
        return Err(Error::SingularMatrix);
    }
    let lead = x[0];
    Ok(x.iter().map(|v| v / lead).collect())
}

/// Decay eigenvalues of the coupled system on resonance.
pub fn secular_roots(ensemble: &ModeEnsemble) -> Result<SpectrumResult> {
    ensemble.validate()?;
    let gamma_r = ensemble.gamma_r;
    let n = ensemble.len();
    let dense = dense_eigenvalues(ensemble);

    let mut coupled: Vec<(f64, f64)> = ensemble
        .modes
        .iter()
        .filter(|m| m.g != 0.0)
        .map(|m| (m.gamma, m.g * m.g))
        .collect();
    coupled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let degenerate = coupled
        .windows(2)
        .any(|w| (w[1].0 - w[0].0).abs() <= DEGENERACY_TOL * w[1].0);

    let mut roots = Vec::new();
    let mut complete = false;
    if !degenerate {
        let sec = Secular {
            gamma_r,
            poles: coupled,
        };
        let sum_g: f64 = ensemble.modes.iter().map(|m| m.g.abs()).sum();
        let max_g = ensemble.modes.iter().map(|m| m.g.abs()).fold(0.0, f64::max);
        let min_gamma = ensemble.modes.iter().map(|m| m.gamma).fold(f64::INFINITY, f64::min);
        let max_gamma = ensemble.modes.iter().map(|m| m.gamma).fold(0.0, f64::max);
        // Gershgorin bounds on the real spectrum
        let lower = (gamma_r - sum_g).min(min_gamma - max_g) - 1.0;
        let upper = (gamma_r + sum_g).max(max_gamma + max_g) + 1.0;
        roots = secular_real_roots(&sec, lower, upper);
        roots.extend(ensemble.modes.iter().filter(|m| m.g == 0.0).map(|m| m.gamma));
        roots.sort_by(f64::total_cmp);
        complete = roots.len() == n + 1;
    }

    let (lambda_exact, method) = if complete {
        (roots, SpectrumMethod::Secular)
    } else {
        (dense.iter().map(|z| z.re).collect(), SpectrumMethod::DenseFallback)
    };

    let dense_mismatch = (method == SpectrumMethod::Secular).then(|| {
        let scale = lambda_exact.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        lambda_exact
            .iter()
            .zip(&dense)
            .map(|(a, b)| (a - b.re).abs().max(b.im.abs()))
            .fold(0.0, f64::max)
            / scale
    });

    let lambda_regular_exact = *lambda_exact
        .iter()
        .min_by(|a, b| (*a - gamma_r).abs().total_cmp(&(*b - gamma_r).abs()))
        .expect("at least two eigenvalues");

    // With a nonzero regular component the eigenvector is known in closed
    // form: x_n = -g_n / (gamma_n - lambda).
    let psi_r_prime = if method == SpectrumMethod::Secular
        && ensemble.modes.iter().all(|m| m.g == 0.0 || m.gamma != lambda_regular_exact)
    {
        std::iter::once(1.0)
            .chain(ensemble.modes.iter().map(|m| {
                if m.g == 0.0 {
                    0.0
                } else {
                    -m.g / (m.gamma - lambda_regular_exact)
                }
            }))
            .collect()
    } else {
        inverse_iteration(ensemble, lambda_regular_exact)?
    };

    Ok(SpectrumResult {
        lambda_exact,
        lambda_dense: dense,
        lambda_regular_exact,
        lambda_regular_firstorder: gamma_r * (1.0 + ensemble.enhancement()),
        psi_r_prime,
        method,
        degenerate_rates: degenerate,
        dense_mismatch,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModifiedRegularMode {
    /// (1, -g_1/gamma_1, ..., -g_N/gamma_N)
    pub first_order: Vec<f64>,
    /// Numerically exact eigenvector of the decay matrix.
    pub exact: Vec<f64>,
    pub component_error: Vec<f64>,
    pub max_component_error: f64,
    pub eigenvalue: f64,
}

/// First-order modified regular mode alongside the numerically exact one.
pub fn modified_regular_mode(ensemble: &ModeEnsemble) -> Result<ModifiedRegularMode> {
    let spec = secular_roots(ensemble)?;
    let first_order: Vec<f64> = std::iter::once(1.0)
        .chain(ensemble.modes.iter().map(|m| -m.g / m.gamma))
        .collect();
    let component_error: Vec<f64> = first_order
        .iter()
        .zip(&spec.psi_r_prime)
        .map(|(a, b)| (a - b).abs())
        .collect();
    Ok(ModifiedRegularMode {
        max_component_error: component_error.iter().copied().fold(0.0, f64::max),
        first_order,
        exact: spec.psi_r_prime,
        component_error,
        eigenvalue: spec.lambda_regular_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::ChaoticMode;
    use approx::assert_relative_eq;

    fn ens(gamma_r: f64, modes: &[(f64, f64)]) -> ModeEnsemble {
        ModeEnsemble::new(
            gamma_r,
            0.0,
            modes
                .iter()
                .map(|&(g, c)| ChaoticMode::real(g, c, 1.0).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn two_by_two_quadratic() {
        let s = secular_roots(&ens(1.0, &[(100.0, 5.0)])).unwrap();
        assert_eq!(s.method, SpectrumMethod::Secular);
        let small = (101.0 - 9701f64.sqrt()) / 2.0;
        let large = (101.0 + 9701f64.sqrt()) / 2.0;
        assert_relative_eq!(s.lambda_regular_exact, small, max_relative = 1e-13);
        assert_relative_eq!(s.lambda_exact[1], large, max_relative = 1e-13);
        assert_relative_eq!(s.lambda_regular_firstorder, 1.25, max_relative = 1e-15);
        assert!((s.firstorder_gap() - 0.0025).abs() < 1e-4);
        assert!(s.dense_mismatch.unwrap() < 1e-12);
    }

    #[test]
    fn uncoupled_spectrum_is_diagonal() {
        let s = secular_roots(&ens(2.0, &[(100.0, 0.0), (50.0, 0.0)])).unwrap();
        assert_eq!(s.lambda_exact, vec![2.0, 50.0, 100.0]);
        assert_eq!(s.psi_r_prime, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn trace_is_preserved() {
        let e = ens(1.0, &[(60.0, 3.0), (90.0, -4.0), (400.0, 20.0), (1000.0, 7.0)]);
        let s = secular_roots(&e).unwrap();
        assert_eq!(s.method, SpectrumMethod::Secular);
        let sum: f64 = s.lambda_exact.iter().sum();
        assert_relative_eq!(sum, e.decay_matrix().trace(), max_relative = 1e-12);
        assert!(s.lambda_regular_exact > 0.0 && s.lambda_regular_exact < 60.0);
    }

    #[test]
    fn degenerate_rates_fall_back_to_dense() {
        let e = ens(1.0, &[(100.0, 3.0), (100.0, 4.0)]);
        let s = secular_roots(&e).unwrap();
        assert!(s.degenerate_rates);
        assert_eq!(s.method, SpectrumMethod::DenseFallback);
        // equal rates act as one mode with g^2 = 25, plus a decoupled gamma = 100
        assert_relative_eq!(s.lambda_regular_exact, (101.0 - 9701f64.sqrt()) / 2.0, max_relative = 1e-10);
    }

    #[test]
    fn strong_coupling_complex_pair_falls_back() {
        // (gamma_1 - gamma_r)^2 < 4 g^2 gives an oscillating pair
        let s = secular_roots(&ens(1.0, &[(3.0, 5.0)])).unwrap();
        assert_eq!(s.method, SpectrumMethod::DenseFallback);
        assert!(s.lambda_dense.iter().all(|z| z.im.abs() > 1.0));
    }

    #[test]
    fn closed_form_eigenvector_matches_inverse_iteration() {
        let e = ens(1.0, &[(60.0, 3.0), (90.0, -4.0), (400.0, 20.0)]);
        let s = secular_roots(&e).unwrap();
        let it = inverse_iteration(&e, s.lambda_regular_exact).unwrap();
        for (a, b) in s.psi_r_prime.iter().zip(&it) {
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
    }

    #[test]
    fn modified_mode_two_by_two() {
        let m = modified_regular_mode(&ens(1.0, &[(100.0, 5.0)])).unwrap();
        assert_eq!(m.first_order, vec![1.0, -0.05]);
        let lambda = (101.0 - 9701f64.sqrt()) / 2.0;
        assert_relative_eq!(m.exact[1], -5.0 / (100.0 - lambda), max_relative = 1e-10);
        assert!((m.exact[1] + 0.05063).abs() < 1e-5);
        let g0 = modified_regular_mode(&ens(1.0, &[(100.0, 0.0)])).unwrap();
        assert_eq!(g0.exact, vec![1.0, 0.0]);
        assert_eq!(g0.max_component_error, 0.0);
    }
}
