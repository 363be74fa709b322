//! Time-domain behaviour: the envelope equations of motion, the two-mode
//! intensity rate equations and the stationary energy balance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{ModeEnsemble, PumpDrive};
use crate::error::{invalid, Result};
use crate::ode::{self, IntegratorOptions, State, StiffSystem};
use crate::steady::steady_state_exact;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub e_r: Complex64,
    pub e_n: Vec<Complex64>,
    pub i_r: f64,
    /// Sum of |E_n|^2 over the chaotic modes.
    pub i_c_total: f64,
    /// Instantaneous pumping term 2 Re[sum a_n E0 E_n^*].
    pub pump_work: f64,
}

/// Starting envelopes; the default is a dark cavity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InitialEnvelopes {
    pub e_r: Complex64,
    /// Empty means all chaotic envelopes start at zero.
    pub e_n: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransientOptions {
    pub initial: InitialEnvelopes,
    /// Output spacing; `None` records every accepted step.
    pub sample_interval: Option<f64>,
    pub integrator: IntegratorOptions,
}

struct EnvelopeSystem<'a> {
    ensemble: &'a ModeEnsemble,
    drive_terms: Vec<Complex64>,
    gamma: DMatrix<Complex64>,
}

impl<'a> EnvelopeSystem<'a> {
    fn new(ensemble: &'a ModeEnsemble, drive: &PumpDrive) -> Self {
        Self {
            ensemble,
            drive_terms: ensemble.modes.iter().map(|m| m.a * drive.e0).collect(),
            gamma: ensemble.decay_matrix_detuned(drive.detuning(ensemble.gamma_r)),
        }
    }
}

impl StiffSystem for EnvelopeSystem<'_> {
    fn dim(&self) -> usize {
        self.ensemble.len() + 1
    }

    fn rhs(&self, y: &State) -> State {
        let mut dy = -(&self.gamma * y);
        for (k, f) in self.drive_terms.iter().enumerate() {
            dy[k + 1] += f;
        }
        dy
    }

    fn jacobian(&self, _y: &State) -> DMatrix<Complex64> {
        -self.gamma.clone()
    }
}

/// Integrate the coupled envelope equations from `t = 0` to `t_end`.
pub fn integrate_envelopes(
    ensemble: &ModeEnsemble,
    drive: &PumpDrive,
    t_end: f64,
    opts: &TransientOptions,
) -> Result<Vec<TrajectoryPoint>> {
    ensemble.validate()?;
    drive.validate()?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(invalid("t_end", format!("must be > 0, got {t_end}")));
    }
    let n = ensemble.len();
    if !opts.initial.e_n.is_empty() && opts.initial.e_n.len() != n {
        return Err(invalid(
            "initial.e_n",
            format!("expected {n} chaotic envelopes, got {}", opts.initial.e_n.len()),
        ));
    }
    let mut y0 = DVector::<Complex64>::zeros(n + 1);
    y0[0] = opts.initial.e_r;
    for (k, e) in opts.initial.e_n.iter().enumerate() {
        y0[k + 1] = *e;
    }

    let sys = EnvelopeSystem::new(ensemble, drive);
    let iopts = IntegratorOptions {
        sample_interval: opts.sample_interval,
        ..opts.integrator
    };
    let sol = ode::integrate(&sys, y0, 0.0, t_end, &iopts)?;

    Ok(sol
        .t
        .iter()
        .zip(&sol.y)
        .map(|(&t, y)| {
            let e_n: Vec<Complex64> = y.iter().skip(1).copied().collect();
            let pump_work = 2.0
                * sys
                    .drive_terms
                    .iter()
                    .zip(&e_n)
                    .map(|(f, e)| (f * e.conj()).re)
                    .sum::<f64>();
            TrajectoryPoint {
                t,
                e_r: y[0],
                i_r: y[0].norm_sqr(),
                i_c_total: e_n.iter().map(|e| e.norm_sqr()).sum(),
                e_n,
                pump_work,
            }
        })
        .collect())
}

/// Least-squares slope of -ln|E_r| over points with `t_from <= t <= t_to`:
/// the field decay rate of the slowest surviving component.
pub fn fit_decay_rate(trajectory: &[TrajectoryPoint], t_from: f64, t_to: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = trajectory
        .iter()
        .filter(|p| p.t >= t_from && p.t <= t_to && p.e_r.norm() > 0.0)
        .map(|p| (p.t, p.e_r.norm().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PumpModel {
    /// R held fixed.
    ConstantR,
    /// R replaced by 2 gamma_c I_c^0 / (1+G), the interference-reduced pumping.
    CorrectedR,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateState {
    pub i_c: f64,
    pub i_r: f64,
    /// Effective pumping rate used in the equations.
    pub pump_rate: f64,
    pub pump_model: PumpModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateProblem {
    pub gamma_c: f64,
    pub gamma_r: f64,
    pub g: f64,
    /// Nominal pumping rate R; I_c^0 = R/(2 gamma_c).
    pub r: f64,
    pub pump_model: PumpModel,
}

impl RateProblem {
    fn validate(&self) -> Result<()> {
        if !(self.gamma_c > 0.0) {
            return Err(invalid("gamma_c", "must be > 0"));
        }
        if !(self.gamma_r > 0.0) {
            return Err(invalid("gamma_r", "must be > 0"));
        }
        if !(self.g.is_finite() && self.r.is_finite() && self.r >= 0.0) {
            return Err(invalid("R", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn enhancement(&self) -> f64 {
        self.g * self.g / (self.gamma_c * self.gamma_r)
    }

    pub fn unperturbed_intensity(&self) -> f64 {
        self.r / (2.0 * self.gamma_c)
    }

    pub fn effective_rate(&self) -> f64 {
        match self.pump_model {
            PumpModel::ConstantR => self.r,
            PumpModel::CorrectedR => self.r / (1.0 + self.enhancement()),
        }
    }

    /// Closed-form stationary intensities.
    pub fn steady_state(&self) -> RateState {
        let g = self.enhancement();
        let ic0 = self.unperturbed_intensity();
        let ratio = self.gamma_c / self.gamma_r;
        let (i_c, i_r) = match self.pump_model {
            PumpModel::ConstantR => (
                ic0 * (1.0 + g) / (1.0 + 2.0 * g),
                ic0 * ratio * g / (1.0 + 2.0 * g),
            ),
            PumpModel::CorrectedR => (
                ic0 / (1.0 + 2.0 * g),
                ic0 * ratio * g / ((1.0 + g) * (1.0 + 2.0 * g)),
            ),
        };
        RateState {
            i_c,
            i_r,
            pump_rate: self.effective_rate(),
            pump_model: self.pump_model,
        }
    }
}

struct RateSystem {
    m: DMatrix<Complex64>,
    b: State,
}

impl StiffSystem for RateSystem {
    fn dim(&self) -> usize {
        2
    }
    fn rhs(&self, y: &State) -> State {
        &self.b - &self.m * y
    }
    fn jacobian(&self, _y: &State) -> DMatrix<Complex64> {
        -self.m.clone()
    }
}

/// Integrate the two-mode rate equations from empty modes to `t_end`.
pub fn integrate_rate_equations(problem: &RateProblem, t_end: f64) -> Result<RateState> {
    problem.validate()?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(invalid("t_end", format!("must be > 0, got {t_end}")));
    }
    let g = problem.enhancement();
    let (gc, gr) = (problem.gamma_c, problem.gamma_r);
    let c = |x: f64| Complex64::new(x, 0.0);
    // dI_c = R - 2 gc (1+G) I_c + 2 gr G I_r
    // dI_r = -2 gr (1+G) I_r + 2 gc G I_c
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[
            c(2.0 * gc * (1.0 + g)),
            c(-2.0 * gr * g),
            c(-2.0 * gc * g),
            c(2.0 * gr * (1.0 + g)),
        ],
    );
    let rate = problem.effective_rate();
    let b = DVector::from_row_slice(&[c(rate), c(0.0)]);
    let sol = ode::integrate(
        &RateSystem { m, b },
        DVector::zeros(2),
        0.0,
        t_end,
        &IntegratorOptions::default(),
    )?;
    let (_, y) = sol.last().expect("solution has at least the initial point");
    Ok(RateState {
        i_c: y[0].re,
        i_r: y[1].re,
        pump_rate: rate,
        pump_model: problem.pump_model,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBalance {
    /// 2 Re[sum a_n E0 E_n^*]
    pub pumping: f64,
    /// 2 sum gamma_n |E_n|^2 + 2 gamma_r |E_r|^2
    pub loss: f64,
    pub relative_mismatch: f64,
    /// 2 gamma_c I_c^0 / (1+G), for a single chaotic mode on resonance.
    pub two_mode_prediction: Option<f64>,
}

/// Compare the pumping term with total dissipation at the exact steady state.
pub fn energy_balance_report(ensemble: &ModeEnsemble, drive: &PumpDrive) -> Result<EnergyBalance> {
    let st = steady_state_exact(ensemble, drive)?;
    let pumping = 2.0
        * ensemble
            .modes
            .iter()
            .zip(&st.e_n)
            .map(|(m, e)| (m.a * drive.e0 * e.conj()).re)
            .sum::<f64>();
    let loss = 2.0
        * ensemble
            .modes
            .iter()
            .zip(&st.e_n)
            .map(|(m, e)| m.gamma * e.norm_sqr())
            .sum::<f64>()
        + 2.0 * ensemble.gamma_r * st.i_r;
    let relative_mismatch = if pumping != 0.0 {
        ((pumping - loss) / pumping).abs()
    } else {
        (pumping - loss).abs()
    };
    let two_mode_prediction = (ensemble.len() == 1 && drive.delta == 0.0).then(|| {
        let m = &ensemble.modes[0];
        let ic0 = (m.a * drive.e0 / m.gamma).norm_sqr();
        2.0 * m.gamma * ic0 / (1.0 + ensemble.enhancement())
    });
    Ok(EnergyBalance {
        pumping,
        loss,
        relative_mismatch,
        two_mode_prediction,
    })
}
