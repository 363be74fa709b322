//! Adaptive linearly-implicit integrator for stiff autonomous systems with
//! complex state.
//!
//! The scheme is the three-stage Radau IIA collocation method (order 5,
//! L-stable). Stage equations are solved by Newton iteration with the
//! Jacobian frozen at the start of the step, which is exact after one
//! iteration for the linear systems used in this crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type State = DVector<Complex64>;

/// dy/dt = f(y) with Jacobian J(y). Time does not appear explicitly.
pub trait StiffSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, y: &State) -> State;
    fn jacobian(&self, y: &State) -> DMatrix<Complex64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
    pub max_steps: usize,
    /// Record the solution on this uniform grid instead of at every step.
    pub sample_interval: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: None,
            h_max: None,
            max_steps: 5_000_000,
            sample_interval: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Solution {
    pub t: Vec<f64>,
    pub y: Vec<State>,
    pub accepted: usize,
    pub rejected: usize,
}

impl Solution {
    pub fn last(&self) -> Option<(f64, &State)> {
        self.t.last().copied().zip(self.y.last())
    }
}

fn inf_norm(m: &DMatrix<Complex64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Radau IIA (3 stages, order 5) coefficients.
struct Tableau {
    a: [[f64; 3]; 3],
}

impl Tableau {
    fn radau5() -> Self {
        let s6 = 6f64.sqrt();
        Self {
            a: [
                [
                    (88.0 - 7.0 * s6) / 360.0,
                    (296.0 - 169.0 * s6) / 1800.0,
                    (-2.0 + 3.0 * s6) / 225.0,
                ],
                [
                    (296.0 + 169.0 * s6) / 1800.0,
                    (88.0 + 7.0 * s6) / 360.0,
                    (-2.0 - 3.0 * s6) / 225.0,
                ],
                [(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0],
            ],
        }
    }
}

/// One implicit step of size `h`; stage increments are found by Newton
/// iteration with the Jacobian frozen at `y`. Returns `None` if the
/// iteration does not converge.
fn radau_step<S: StiffSystem>(
    sys: &S,
    tab: &Tableau,
    y: &State,
    h: f64,
    tol: f64,
    atol: f64,
) -> Option<State> {
    let n = y.len();
    let jac = sys.jacobian(y);
    let mut big = DMatrix::<Complex64>::identity(3 * n, 3 * n);
    for i in 0..3 {
        for j in 0..3 {
            let block = &jac * Complex64::new(-h * tab.a[i][j], 0.0);
            let mut view = big.view_mut((i * n, j * n), (n, n));
            view += block;
        }
    }
    let lu = big.lu();

    let mut z = DVector::<Complex64>::zeros(3 * n);
    for _ in 0..12 {
        let f: Vec<State> = (0..3)
            .map(|i| sys.rhs(&(y + z.rows(i * n, n))))
            .collect();
        let mut resid = DVector::<Complex64>::zeros(3 * n);
        for i in 0..3 {
            let mut r = -z.rows(i * n, n).into_owned();
            for (j, fj) in f.iter().enumerate() {
                r += fj * Complex64::new(h * tab.a[i][j], 0.0);
            }
            resid.rows_mut(i * n, n).copy_from(&r);
        }
        let dz = lu.solve(&resid)?;
        z += &dz;
        let scale = y
            .iter()
            .chain(z.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        let step = dz.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if !step.is_finite() {
            return None;
        }
        if step <= tol * scale + 1e-3 * atol {
            return Some(y + z.rows(2 * n, n));
        }
    }
    None
}

/// Integrate from `t0` to `t_end` starting at `y0`.
///
/// Each step is taken once with `h` and once as two halves; the difference,
/// scaled by 1/(2^5 - 1), estimates the local error of the two-half result,
/// which is the one kept.
pub fn integrate<S: StiffSystem>(
    sys: &S,
    y0: State,
    t0: f64,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Solution> {
    let tab = Tableau::radau5();
    let span = t_end - t0;
    let newton_tol = 1e-3 * opts.rtol.min(1e-6);

    let mut sol = Solution::default();
    sol.t.push(t0);
    sol.y.push(y0.clone());
    if span <= 0.0 {
        return Ok(sol);
    }

    let h_max = opts.h_max.unwrap_or(span).min(span);
    let mut h = opts.h_init.unwrap_or_else(|| {
        let jn = inf_norm(&sys.jacobian(&y0));
        let scale = if jn > 0.0 { 1.0 / jn } else { span };
        0.1 * scale.min(span)
    });
    h = h.min(h_max);

    let mut t = t0;
    let mut y = y0;
    // sample k sits at t0 + k dt; one that falls within rounding of the end
    // is moved onto it so no sliver step is left over
    let sample_at = |k: usize| {
        opts.sample_interval.map(|dt| {
            let ts = t0 + k as f64 * dt;
            if t_end - ts <= 1e-9 * dt {
                t_end
            } else {
                ts
            }
        })
    };
    let mut samples_taken = 1;
    let mut next_sample = sample_at(samples_taken);

    while t < t_end {
        if sol.accepted + sol.rejected >= opts.max_steps {
            return Err(Error::StiffnessFailure { t, h });
        }
        // do not step past the end or the next sample time
        let target = next_sample.map_or(t_end, |ts| ts.min(t_end));
        let hits_target = h >= target - t;
        let h_step = if hits_target { target - t } else { h };
        if h_step <= 16.0 * f64::EPSILON * t.abs().max(span) {
            return Err(Error::StiffnessFailure { t, h: h_step });
        }

        let attempt = radau_step(sys, &tab, &y, h_step, newton_tol, opts.atol).and_then(|full| {
            let half = radau_step(sys, &tab, &y, 0.5 * h_step, newton_tol, opts.atol)?;
            let two = radau_step(sys, &tab, &half, 0.5 * h_step, newton_tol, opts.atol)?;
            Some((full, two))
        });
        let Some((full, y_new)) = attempt else {
            sol.rejected += 1;
            h = 0.25 * h_step;
            continue;
        };

        let err = full
            .iter()
            .zip(y_new.iter())
            .zip(y.iter())
            .map(|((a, b), c)| {
                let e = (a - b).norm() / 31.0;
                e / (opts.atol + opts.rtol * b.norm().max(c.norm()))
            })
            .fold(0.0, f64::max);
        if !err.is_finite() {
            return Err(Error::StiffnessFailure { t, h: h_step });
        }

        if err <= 1.0 {
            t = if hits_target { target } else { t + h_step };
            y = y_new;
            sol.accepted += 1;
            let at_sample = hits_target && next_sample == Some(target);
            if opts.sample_interval.is_none() || at_sample || t >= t_end {
                sol.t.push(t);
                sol.y.push(y.clone());
            }
            if at_sample {
                samples_taken += 1;
                next_sample = sample_at(samples_taken);
            }
            let factor = if err == 0.0 { 4.0 } else { (0.9 * err.powf(-1.0 / 6.0)).clamp(0.2, 4.0) };
            // a step shortened to hit a target says nothing about the natural step
            let base = if hits_target { h.max(h_step) } else { h_step };
            h = (base * factor).min(h_max);
        } else {
            sol.rejected += 1;
            h = h_step * (0.9 * err.powf(-1.0 / 6.0)).clamp(0.1, 0.5);
        }
    }
    Ok(sol)
}
