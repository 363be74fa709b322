//! Intensities, resonance lineshape and relative pumping efficiency as
//! functions of the normalized detuning delta = Delta/gamma_r.

use crate::error::{Error, Result};
use crate::params::DerivedParams;
use crate::quadrature;

/// Regular- and pump-mode intensities (I_r, I_p) at detuning `delta`.
pub fn intensities(params: &DerivedParams, delta: f64) -> (f64, f64) {
    let g = params.g;
    let d2 = delta * delta;
    let denom = (1.0 + g) * (1.0 + g) + d2;
    let i_r = match params.gamma_p {
        Some(gp) => params.i_p0 * (gp / params.gamma_r) * g / denom,
        None => 0.0,
    };
    let i_p = params.i_p0 * (1.0 + d2) / denom;
    (i_r, i_p)
}

/// Unity-peak Lorentzian with half width 1+G.
pub fn lineshape(params: &DerivedParams, delta: f64) -> f64 {
    let w = 1.0 + params.g;
    w * w / (delta * delta + w * w)
}

/// Lineshape averaged over a Lorentzian pump spectrum of half width
/// `gamma_l_over_gamma_r` (in units of gamma_r).
///
/// The convolution of two Lorentzians is again a Lorentzian whose half
/// width is the sum of the two.
pub fn lineshape_convolved(params: &DerivedParams, delta: f64, gamma_l_over_gamma_r: f64) -> f64 {
    let w = 1.0 + params.g;
    if gamma_l_over_gamma_r == 0.0 {
        return lineshape(params, delta);
    }
    let s = w + gamma_l_over_gamma_r;
    w * s / (delta * delta + s * s)
}

/// Broad-pump limit (gamma_r'/gamma_L) * L_L(delta), valid for gamma_L >> gamma_r'.
pub fn lineshape_broad_limit(params: &DerivedParams, delta: f64, gamma_l_over_gamma_r: f64) -> f64 {
    let w = 1.0 + params.g;
    let b = gamma_l_over_gamma_r;
    w * b / (delta * delta + b * b)
}

/// Evaluate the pump-averaged lineshape by adaptive quadrature of the
/// convolution integral. Slow; meant for verifying [`lineshape_convolved`].
pub fn lineshape_convolved_quadrature(
    params: &DerivedParams,
    delta: f64,
    gamma_l_over_gamma_r: f64,
    rel_tol: f64,
) -> f64 {
    let w = 1.0 + params.g;
    let b = gamma_l_over_gamma_r;
    if b == 0.0 {
        return lineshape(params, delta);
    }
    let pi = std::f64::consts::PI;
    let cavity = |x: f64| (w / pi) / (x * x + w * w);
    let pump = |x: f64| (b / pi) / ((x - delta) * (x - delta) + b * b);

    // Map the real line onto (-pi/2, pi/2) centred on the narrower peak, so
    // that peak becomes flat in the new variable.
    let (centre, scale) = if b < w { (delta, b) } else { (0.0, w) };
    let integrand = |u: f64| {
        let t = u.tan();
        let x = centre + scale * t;
        let jac = scale * (1.0 + t * t);
        cavity(x) * pump(x) * jac
    };
    let half = std::f64::consts::FRAC_PI_2;
    let integral = quadrature::integrate(integrand, -half, half, rel_tol, 64);
    pi * w * integral
}

fn check_overlap(beta_p: f64, beta_r: f64) -> Result<()> {
    if !(beta_p.is_finite() && beta_p > 0.0) {
        return Err(Error::InvalidOverlap { beta_p });
    }
    if !(beta_r.is_finite() && beta_r >= 0.0) {
        return Err(Error::InvalidParameter {
            field: "beta_r".into(),
            reason: format!("must be >= 0, got {beta_r}"),
        });
    }
    Ok(())
}

/// Relative pumping efficiency with respect to non-resonant pumping.
///
/// `gamma_l` is the pump linewidth in 1/s. With `gamma_l = 0` this is the
/// monochromatic formula; for `gamma_l >> gamma_r'` it approaches the
/// broad-pump formula.
pub fn efficiency(
    params: &DerivedParams,
    delta: f64,
    beta_p: f64,
    beta_r: f64,
    gamma_l: f64,
) -> Result<f64> {
    check_overlap(beta_p, beta_r)?;
    if !(gamma_l.is_finite() && gamma_l >= 0.0) {
        return Err(Error::InvalidParameter {
            field: "gamma_L".into(),
            reason: format!("must be >= 0, got {gamma_l}"),
        });
    }
    let l = lineshape_convolved(params, delta, gamma_l / params.gamma_r);
    let buildup = params.buildup_ratio() * beta_r / beta_p;
    Ok(1.0 - params.alpha * l + buildup * params.alpha_prime * l)
}

/// Monochromatic efficiency computed from the intensities and overlap
/// factors: (I_p beta_p + I_r beta_r) / (I_p^0 beta_p).
pub fn efficiency_from_intensities(
    params: &DerivedParams,
    delta: f64,
    beta_p: f64,
    beta_r: f64,
) -> Result<f64> {
    check_overlap(beta_p, beta_r)?;
    let (i_r, i_p) = intensities(params, delta);
    Ok((i_p * beta_p + i_r * beta_r) / (params.i_p0 * beta_p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{ChaoticMode, ModeEnsemble, PumpDrive};
    use crate::params::derive_params;
    use crate::steady::steady_state_exact;
    use approx::assert_relative_eq;

    fn params(g_coupling: f64) -> DerivedParams {
        let ens = ModeEnsemble::new(
            1.0,
            0.0,
            vec![ChaoticMode::real(100.0, g_coupling, 1.0).unwrap()],
        )
        .unwrap();
        derive_params(&ens, &PumpDrive::monochromatic(1.0, 0.0)).unwrap()
    }

    #[test]
    fn intensities_on_resonance() {
        let p = params(5.0);
        assert_relative_eq!(p.i_p0, 1e-4, max_relative = 1e-14);
        let (i_r, i_p) = intensities(&p, 0.0);
        assert_relative_eq!(i_r, 1.6e-3, max_relative = 1e-13);
        assert_relative_eq!(i_p, 6.4e-5, max_relative = 1e-13);
        let ens = ModeEnsemble::new(1.0, 0.0, vec![ChaoticMode::real(100.0, 5.0, 1.0).unwrap()]).unwrap();
        let st = steady_state_exact(&ens, &PumpDrive::monochromatic(1.0, 0.0)).unwrap();
        assert_relative_eq!(i_r, st.i_r, max_relative = 1e-13);
        assert_relative_eq!(i_p, st.i_p, max_relative = 1e-13);
    }

    #[test]
    fn intensity_limits() {
        let p = params(5.0);
        let (i_r, i_p) = intensities(&p, 1e8);
        assert!(i_r < 1e-16);
        assert_relative_eq!(i_p, p.i_p0, max_relative = 1e-12);
        let p0 = params(0.0);
        for d in [0.0, 0.5, 3.0] {
            let (i_r, i_p) = intensities(&p0, d);
            assert_eq!(i_r, 0.0);
            assert_relative_eq!(i_p, p0.i_p0, max_relative = 1e-15);
        }
    }

    #[test]
    fn lineshape_points() {
        let p = params(5.0);
        assert_eq!(lineshape(&p, 0.0), 1.0);
        assert_relative_eq!(lineshape(&p, 1.25), 0.5, max_relative = 1e-15);
        assert_relative_eq!(lineshape(&params(0.0), 1.0), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn convolved_points() {
        let p = params(5.0);
        assert_relative_eq!(lineshape_convolved(&p, 0.0, 1.0), 1.25 / 2.25, max_relative = 1e-15);
        for d in [0.0, 0.7, -4.0] {
            assert_eq!(lineshape_convolved(&p, d, 0.0), lineshape(&p, d));
        }
        let broad = lineshape_convolved(&p, 0.0, 100.0);
        assert!((broad / 0.0125 - 1.0).abs() < 0.02);
    }

    #[test]
    fn convolved_matches_quadrature() {
        let p = params(5.0);
        for (d, b) in [(0.0, 1.0), (2.0, 0.05), (-30.0, 7.0), (0.5, 300.0)] {
            let q = lineshape_convolved_quadrature(&p, d, b, 1e-11);
            assert_relative_eq!(q, lineshape_convolved(&p, d, b), max_relative = 1e-9);
        }
    }

    #[test]
    fn efficiency_routes_agree() {
        let p = params(5.0);
        for d in [0.0, 0.4, 2.5, -9.0] {
            let a = efficiency(&p, d, 2.0, 0.7, 0.0).unwrap();
            let b = efficiency_from_intensities(&p, d, 2.0, 0.7).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn efficiency_baselines() {
        let p0 = params(0.0);
        for d in [0.0, 1.0, 50.0] {
            assert_eq!(efficiency(&p0, d, 1.0, 1.0, 0.0).unwrap(), 1.0);
        }
        let p = params(5.0);
        assert!((efficiency(&p, 1e6, 1.0, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-5);
        assert!(matches!(
            efficiency(&p, 0.0, 0.0, 1.0, 0.0),
            Err(Error::InvalidOverlap { .. })
        ));
    }
}
