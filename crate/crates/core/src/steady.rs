//! Steady-state envelopes of the driven coupled modes.
//!
//! Three routes are provided: the exact closed form, the pump-mode
//! approximation that drops the inter-mode bracket, and a direct dense solve
//! of the full linear system used as an oracle for the other two.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{ModeEnsemble, PumpDrive};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    ExactClosedForm,
    ApproximateEq4,
    LinearSolveOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub e_r: Complex64,
    pub e_n: Vec<Complex64>,
    pub e_p: Complex64,
    pub i_r: f64,
    pub i_p: f64,
    pub mode: SolveMode,
    /// Per-mode magnitude of the neglected bracket |E_n^0 G - E_p^0 G_n|.
    /// Only filled by [`steady_state_eq4`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket: Option<Vec<f64>>,
}

impl SteadyState {
    fn assemble(
        ensemble: &ModeEnsemble,
        drive: &PumpDrive,
        e_r: Complex64,
        e_n: Vec<Complex64>,
        e_p: Option<Complex64>,
        mode: SolveMode,
    ) -> Self {
        let e_p = e_p.unwrap_or_else(|| project_on_pump_mode(ensemble, drive, &e_n));
        Self {
            e_r,
            i_r: e_r.norm_sqr(),
            i_p: e_p.norm_sqr(),
            e_n,
            e_p,
            mode,
            bracket: None,
        }
    }

    /// Largest residual of the stationary equations of motion, relative to
    /// max |a_n E0|.
    pub fn residual(&self, ensemble: &ModeEnsemble, drive: &PumpDrive) -> f64 {
        let detuning = drive.detuning(ensemble.gamma_r);
        let scale = ensemble
            .modes
            .iter()
            .map(|m| (m.a * drive.e0).norm())
            .fold(0.0, f64::max);
        let mut worst = 0.0_f64;
        let mut coupled = Complex64::new(0.0, 0.0);
        for (m, e) in ensemble.modes.iter().zip(&self.e_n) {
            let r = m.a * drive.e0 - m.gamma * e - m.g * self.e_r;
            worst = worst.max(r.norm());
            coupled += m.g * e;
        }
        let rr = coupled - Complex64::new(ensemble.gamma_r, detuning) * self.e_r;
        worst = worst.max(rr.norm());
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }
}

/// E_p = sum_n E_n (E_n^0)^* / E_p^0; zero when the pump mode does not exist.
fn project_on_pump_mode(ensemble: &ModeEnsemble, drive: &PumpDrive, e_n: &[Complex64]) -> Complex64 {
    let e_n0 = ensemble.nonresonant_amplitudes(drive.e0);
    let e_p0 = e_n0.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
    if e_p0 == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    e_n.iter().zip(&e_n0).map(|(e, e0)| e * e0.conj()).sum::<Complex64>() / e_p0
}

struct Common {
    e_n0: Vec<Complex64>,
    /// gamma_r + i Delta
    denom: Complex64,
    /// Complex enhancement gamma_r G / (gamma_r + i Delta).
    g_complex: Complex64,
    e_r: Complex64,
}

fn common(ensemble: &ModeEnsemble, drive: &PumpDrive) -> Result<Common> {
    ensemble.validate()?;
    drive.validate()?;
    let e_n0 = ensemble.nonresonant_amplitudes(drive.e0);
    let denom = Complex64::new(ensemble.gamma_r, drive.detuning(ensemble.gamma_r));
    let g_complex = ensemble.tunneling_rate() / denom;
    // g_bar E_p^0 = sum g_n E_n^0
    let drive_sum: Complex64 = ensemble
        .modes
        .iter()
        .zip(&e_n0)
        .map(|(m, e)| m.g * e)
        .sum();
    let e_r = drive_sum / denom / (1.0 + g_complex);
    Ok(Common {
        e_n0,
        denom,
        g_complex,
        e_r,
    })
}

/// Exact stationary solution: E_r from the closed form, E_n = E_n^0 - (g_n/gamma_n) E_r.
pub fn steady_state_exact(ensemble: &ModeEnsemble, drive: &PumpDrive) -> Result<SteadyState> {
    let c = common(ensemble, drive)?;
    let e_n = ensemble
        .modes
        .iter()
        .zip(&c.e_n0)
        .map(|(m, e0)| e0 - (m.g / m.gamma) * c.e_r)
        .collect();
    Ok(SteadyState::assemble(
        ensemble,
        drive,
        c.e_r,
        e_n,
        None,
        SolveMode::ExactClosedForm,
    ))
}

/// Pump-mode approximation: E_n = E_n^0/(1+G), E_p = E_p^0/(1+G).
///
/// The neglected bracket is returned per mode in [`SteadyState::bracket`].
pub fn steady_state_eq4(ensemble: &ModeEnsemble, drive: &PumpDrive) -> Result<SteadyState> {
    let c = common(ensemble, drive)?;
    let scale = 1.0 + c.g_complex;
    let e_n: Vec<Complex64> = c.e_n0.iter().map(|e| e / scale).collect();
    let e_p0 = c.e_n0.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();

    // E_n^0 G - E_p^0 G_n = (1/(gamma_r+i Delta)) sum_m (E_n^0 g_m/gamma_m - E_m^0 g_n/gamma_n) g_m
    let bracket = ensemble
        .modes
        .iter()
        .zip(&c.e_n0)
        .map(|(mn, en0)| {
            let s: Complex64 = ensemble
                .modes
                .iter()
                .zip(&c.e_n0)
                .map(|(mm, em0)| (en0 * (mm.g / mm.gamma) - em0 * (mn.g / mn.gamma)) * mm.g)
                .sum();
            (s / c.denom).norm()
        })
        .collect();

    let mut st = SteadyState::assemble(
        ensemble,
        drive,
        c.e_r,
        e_n,
        Some(Complex64::new(e_p0, 0.0) / scale),
        SolveMode::ApproximateEq4,
    );
    st.bracket = Some(bracket);
    Ok(st)
}

/// Direct solve of Gamma E = E0 A with gamma_r + i Delta in the regular entry.
pub fn steady_state_linear_solve(ensemble: &ModeEnsemble, drive: &PumpDrive) -> Result<SteadyState> {
    ensemble.validate()?;
    drive.validate()?;
    let n = ensemble.len() + 1;
    let m = ensemble.decay_matrix_detuned(drive.detuning(ensemble.gamma_r));
    let mut rhs = DVector::<Complex64>::zeros(n);
    for (k, mode) in ensemble.modes.iter().enumerate() {
        rhs[k + 1] = mode.a * drive.e0;
    }
    let sol = m.lu().solve(&rhs).ok_or(Error::SingularMatrix)?;
    if sol.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::SingularMatrix);
    }
    let e_n = sol.iter().skip(1).copied().collect();
    Ok(SteadyState::assemble(
        ensemble,
        drive,
        sol[0],
        e_n,
        None,
        SolveMode::LinearSolveOracle,
    ))
}

/// Relative distance between two steady states over all envelopes,
/// ||x - y|| / ||y||.
pub fn relative_distance(x: &SteadyState, y: &SteadyState) -> f64 {
    let mut num = (x.e_r - y.e_r).norm_sqr();
    let mut den = y.e_r.norm_sqr();
    for (a, b) in x.e_n.iter().zip(&y.e_n) {
        num += (a - b).norm_sqr();
        den += b.norm_sqr();
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}
