//! Ray dynamics in a two-dimensional dielectric cavity: rays bounce
//! specularly off the boundary and leave at the first bounce below the
//! critical angle. The mean path before escape sets the pump-mode decay
//! rate gamma_p = c / (2 m L_p).

mod geometry;
mod trace;

pub use geometry::{ArclengthTable, CavityGeometry, Harmonic, Vec2, GRID};
pub use trace::{launch_direction, trace_from, trace_ray, Bounce, RayOutcome, RayTrace};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use trace::{trace_with, Tracer};

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;

/// Number of points on the survival curve.
pub const SURVIVAL_POINTS: usize = 200;

fn default_birkhoff_rays() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayBundle {
    /// Launch polar angle [rad].
    pub theta0: f64,
    /// Launch incidence angle [rad].
    pub chi0: f64,
    #[serde(default)]
    pub sigma_theta: f64,
    #[serde(default)]
    pub sigma_chi: f64,
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    /// Rays whose bounces go into the Birkhoff trace.
    #[serde(default = "default_birkhoff_rays")]
    pub birkhoff_rays: usize,
}

impl RayBundle {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(invalid("count", "need at least one ray"));
        }
        if !(self.sigma_theta >= 0.0 && self.sigma_chi >= 0.0) {
            return Err(invalid("sigma", "spreads must be >= 0"));
        }
        if !(self.chi0 > 0.0 && self.chi0 < std::f64::consts::FRAC_PI_2) {
            return Err(invalid("chi0", "must lie in (0, pi/2)"));
        }
        if !self.theta0.is_finite() {
            return Err(invalid("theta0", "must be finite"));
        }
        Ok(())
    }

    /// Launch (theta, chi) of ray `i`, drawn from its own ChaCha stream.
    pub fn launch(&self, i: usize) -> (f64, f64) {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        let theta = if self.sigma_theta > 0.0 {
            Normal::new(self.theta0, self.sigma_theta)
                .map(|d| d.sample(&mut rng))
                .unwrap_or(self.theta0)
        } else {
            self.theta0
        };
        let chi = if self.sigma_chi > 0.0 {
            let dist = Normal::new(self.chi0, self.sigma_chi).expect("finite spread");
            (0..1000)
                .map(|_| dist.sample(&mut rng))
                .find(|c| *c > 0.0 && *c < std::f64::consts::FRAC_PI_2)
                .unwrap_or(self.chi0)
        } else {
            self.chi0
        };
        (theta, chi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffPoint {
    pub ray: usize,
    /// Boundary arclength from theta = 0.
    pub s: f64,
    pub sin_chi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub path: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeStats {
    /// Mean geometric path length of escaped rays.
    #[serde(rename = "L_p")]
    pub l_p: f64,
    /// Standard error of `l_p`.
    #[serde(rename = "L_p_sigma")]
    pub l_p_sigma: f64,
    pub gamma_p: f64,
    pub escaped: usize,
    pub confined: usize,
    /// Mean number of bounces of escaped rays, the escape bounce included.
    pub mean_bounces: f64,
    pub survival_curve: Vec<SurvivalPoint>,
    pub birkhoff_trace: Vec<BirkhoffPoint>,
}

/// gamma_p = c / (2 m L_p).
pub fn decay_rate(m: f64, l_p: f64) -> f64 {
    SPEED_OF_LIGHT / (2.0 * m * l_p)
}

/// Trace every ray of the bundle and average the escape path length.
///
/// Rays are traced in parallel; each has its own random stream and the
/// reduction runs in ray order, so the result depends only on the seed.
pub fn bundle_stats(geometry: &CavityGeometry, bundle: &RayBundle, max_bounces: usize) -> Result<EscapeStats> {
    geometry.validate()?;
    bundle.validate()?;
    let tracer = Tracer::new(geometry);
    let traces: Vec<RayTrace> = (0..bundle.count)
        .into_par_iter()
        .map(|i| {
            let (theta, chi) = bundle.launch(i);
            let d = launch_direction(geometry, theta, chi);
            trace_with(&tracer, theta, d, max_bounces, i < bundle.birkhoff_rays)
        })
        .collect::<Result<_>>()?;

    let escaped: Vec<&RayTrace> = traces.iter().filter(|t| t.escaped()).collect();
    if escaped.is_empty() {
        return Err(Error::AllConfined);
    }
    let n = escaped.len() as f64;
    let l_p = escaped.iter().map(|t| t.path_length).sum::<f64>() / n;
    let var = if escaped.len() > 1 {
        escaped.iter().map(|t| (t.path_length - l_p).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };

    let mut lengths: Vec<f64> = escaped.iter().map(|t| t.path_length).collect();
    lengths.sort_by(f64::total_cmp);
    let longest = *lengths.last().expect("non-empty");
    let total = traces.len() as f64;
    let survival_curve = (0..=SURVIVAL_POINTS)
        .map(|k| {
            let path = longest * k as f64 / SURVIVAL_POINTS as f64;
            let gone = lengths.partition_point(|&l| l <= path);
            SurvivalPoint {
                path,
                fraction: (traces.len() - gone) as f64 / total,
            }
        })
        .collect();

    let table = geometry.arclength_table();
    let birkhoff_trace = traces
        .iter()
        .enumerate()
        .take(bundle.birkhoff_rays)
        .flat_map(|(i, t)| t.bounces.iter().map(move |b| (i, b)))
        .map(|(i, b)| BirkhoffPoint {
            ray: i,
            s: table.arclength(b.theta),
            sin_chi: b.sin_chi,
        })
        .collect();

    let mean_bounces = escaped.iter().map(|t| t.bounce_count as f64).sum::<f64>() / n;

    Ok(EscapeStats {
        l_p,
        l_p_sigma: (var / n).sqrt(),
        gamma_p: decay_rate(geometry.m, l_p),
        escaped: escaped.len(),
        confined: traces.len() - escaped.len(),
        mean_bounces,
        survival_curve,
        birkhoff_trace,
    })
}
