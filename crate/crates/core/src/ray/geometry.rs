use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature;

/// Points used to validate the boundary and tabulate its arclength.
pub const GRID: usize = 4096;

pub type Vec2 = [f64; 2];

pub(crate) fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Harmonic term eta_k cos(k theta) of the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub k: u32,
    pub eta: f64,
}

/// Star-shaped cavity r(theta) = r0 (1 + sum_k eta_k cos k theta).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityGeometry {
    /// Mean radius [m].
    pub r0: f64,
    #[serde(default)]
    pub deformation: Vec<Harmonic>,
    /// Refractive index.
    pub m: f64,
}

impl CavityGeometry {
    pub fn circle(r0: f64, m: f64) -> Self {
        Self {
            r0,
            deformation: Vec::new(),
            m,
        }
    }

    pub fn quadrupole(r0: f64, eta: f64, m: f64) -> Self {
        Self {
            r0,
            deformation: vec![Harmonic { k: 2, eta }],
            m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0.is_finite() && self.r0 > 0.0) {
            return Err(invalid("r0", format!("must be > 0, got {}", self.r0)));
        }
        if !(self.m.is_finite() && self.m > 1.0) {
            return Err(invalid("m", format!("refractive index must be > 1, got {}", self.m)));
        }
        if self.deformation.iter().any(|h| !h.eta.is_finite()) {
            return Err(invalid("deformation", "eta must be finite"));
        }
        for i in 0..GRID {
            let th = TAU * i as f64 / GRID as f64;
            if self.radius(th) <= 0.0 {
                return Err(invalid(
                    "deformation",
                    format!("boundary radius is not positive at theta = {th}"),
                ));
            }
        }
        Ok(())
    }

    pub fn critical_sin(&self) -> f64 {
        1.0 / self.m
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.r0
            * (1.0
                + self
                    .deformation
                    .iter()
                    .map(|h| h.eta * (h.k as f64 * theta).cos())
                    .sum::<f64>())
    }

    /// dr/dtheta.
    pub fn radius_prime(&self, theta: f64) -> f64 {
        -self.r0
            * self
                .deformation
                .iter()
                .map(|h| h.k as f64 * h.eta * (h.k as f64 * theta).sin())
                .sum::<f64>()
    }

    pub fn point(&self, theta: f64) -> Vec2 {
        let r = self.radius(theta);
        [r * theta.cos(), r * theta.sin()]
    }

    /// d(point)/dtheta; counter-clockwise tangent, not normalized.
    pub fn tangent(&self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        let r = self.radius(theta);
        let rp = self.radius_prime(theta);
        [rp * c - r * s, rp * s + r * c]
    }

    pub fn unit_tangent(&self, theta: f64) -> Vec2 {
        let t = self.tangent(theta);
        let n = t[0].hypot(t[1]);
        [t[0] / n, t[1] / n]
    }

    pub fn outward_normal(&self, theta: f64) -> Vec2 {
        let t = self.unit_tangent(theta);
        [t[1], -t[0]]
    }

    /// Radial offset from the boundary, |p| - r(theta(p)): negative inside.
    ///
    /// cos(k theta) is evaluated as the Chebyshev polynomial T_k(x/|p|),
    /// which avoids the arctangent.
    pub fn implicit(&self, p: Vec2) -> f64 {
        let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if rho == 0.0 {
            return -self.radius(0.0);
        }
        let c = p[0] / rho;
        let mut sum = 0.0;
        for h in &self.deformation {
            sum += h.eta * chebyshev(h.k, c);
        }
        rho - self.r0 * (1.0 + sum)
    }

    pub fn min_radius(&self) -> f64 {
        (0..GRID)
            .map(|i| self.radius(TAU * i as f64 / GRID as f64))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_radius(&self) -> f64 {
        (0..GRID)
            .map(|i| self.radius(TAU * i as f64 / GRID as f64))
            .fold(0.0, f64::max)
    }

    pub fn arclength_table(&self) -> ArclengthTable {
        ArclengthTable::new(self)
    }
}

/// T_k(x) by the three-term recurrence.
fn chebyshev(k: u32, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut t0, mut t1) = (1.0, x);
            for _ in 1..k {
                let t2 = 2.0 * x * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
            t1
        }
    }
}

fn speed(g: &CavityGeometry, theta: f64) -> f64 {
    let t = g.tangent(theta);
    t[0].hypot(t[1])
}

/// Cumulative boundary arclength from theta = 0 on a uniform grid.
#[derive(Debug, Clone)]
pub struct ArclengthTable {
    geometry: CavityGeometry,
    cumulative: Vec<f64>,
}

impl ArclengthTable {
    fn new(g: &CavityGeometry) -> Self {
        let step = TAU / GRID as f64;
        let mut cumulative = Vec::with_capacity(GRID + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..GRID {
            let a = step * i as f64;
            acc += quadrature::integrate(|t| speed(g, t), a, a + step, 1e-13, 1);
            cumulative.push(acc);
        }
        Self {
            geometry: g.clone(),
            cumulative,
        }
    }

    pub fn perimeter(&self) -> f64 {
        self.cumulative[GRID]
    }

    /// Arclength s(theta) in [0, perimeter).
    pub fn arclength(&self, theta: f64) -> f64 {
        let th = theta.rem_euclid(TAU);
        let step = TAU / GRID as f64;
        let i = ((th / step) as usize).min(GRID - 1);
        let a = step * i as f64;
        self.cumulative[i] + quadrature::integrate(|t| speed(&self.geometry, t), a, th, 1e-13, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn circle_normal_is_radial() {
        let g = CavityGeometry::circle(2.0, 1.5);
        let n = g.outward_normal(0.7);
        assert_relative_eq!(n[0], 0.7f64.cos(), max_relative = 1e-15);
        assert_relative_eq!(n[1], 0.7f64.sin(), max_relative = 1e-15);
        assert_relative_eq!(g.arclength_table().perimeter(), 4.0 * std::f64::consts::PI, max_relative = 1e-13);
    }

    #[test]
    fn quadrupole_normal_is_perpendicular_and_outward() {
        let g = CavityGeometry::quadrupole(1.0, 0.16, 1.361);
        for th in [0.1, 1.0, 2.5, 4.0] {
            let n = g.outward_normal(th);
            assert!(dot(n, g.tangent(th)).abs() < 1e-14);
            assert!(dot(n, g.point(th)) > 0.0);
        }
    }

    #[test]
    fn arclength_is_monotone_and_matches_halves() {
        let g = CavityGeometry::quadrupole(1.0, 0.16, 1.361);
        let t = g.arclength_table();
        // mirror symmetry theta -> -theta
        assert_relative_eq!(t.arclength(std::f64::consts::PI), 0.5 * t.perimeter(), max_relative = 1e-12);
        let mut last = -1.0;
        for i in 0..100 {
            let s = t.arclength(i as f64 * 0.0628);
            assert!(s > last);
            last = s;
        }
    }

    #[test]
    fn implicit_matches_polar_form() {
        let g = CavityGeometry {
            r0: 1.3,
            deformation: vec![Harmonic { k: 2, eta: 0.1 }, Harmonic { k: 3, eta: -0.04 }, Harmonic { k: 7, eta: 0.01 }],
            m: 1.5,
        };
        for i in 0..50 {
            let th = -3.1 + 0.127 * i as f64;
            let rho = 0.3 + 0.03 * i as f64;
            let p = [rho * th.cos(), rho * th.sin()];
            assert!((g.implicit(p) - (rho - g.radius(th))).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_geometries() {
        assert!(CavityGeometry::circle(-1.0, 1.5).validate().is_err());
        assert!(CavityGeometry::circle(1.0, 0.9).validate().is_err());
        assert!(CavityGeometry::quadrupole(1.0, 1.2, 1.5).validate().is_err());
        assert!(CavityGeometry::quadrupole(1.0, 0.16, 1.361).validate().is_ok());
    }
}
