use serde::{Deserialize, Serialize};

use super::geometry::{cross, dot, CavityGeometry, Vec2};
use crate::error::{invalid, Error, Result};

/// Fraction of the smallest radius times cos(chi) used as the first search step.
const STEP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RayOutcome {
    Escaped,
    /// Still inside after the bounce budget; counted as confined.
    MaxBouncesExceeded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounce {
    /// Polar angle of the hit point.
    pub theta: f64,
    pub position: Vec2,
    /// sin of the incidence angle measured from the normal.
    pub sin_chi: f64,
    /// Path length travelled up to this bounce.
    pub path: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayTrace {
    pub outcome: RayOutcome,
    pub path_length: f64,
    pub bounce_count: usize,
    /// Empty unless recording was requested.
    pub bounces: Vec<Bounce>,
    /// Direction of travel on the last segment.
    pub final_direction: Vec2,
}

impl RayTrace {
    pub fn escaped(&self) -> bool {
        self.outcome == RayOutcome::Escaped
    }
}

/// Bracket width, relative to the smallest radius, at which bisection hands
/// over to a single secant step.
const POLISH_WIDTH: f64 = 1e-9;

/// Growth factor and cap (relative to the smallest radius) of the search step.
const STEP_GROWTH: f64 = 1.5;
const STEP_CAP: f64 = 0.1;

/// Bisect a sign change of `f` (negative at `a`) down to `width`, then
/// interpolate linearly once.
///
/// Stopping while |f| is still far above its rounding floor keeps the
/// interpolated root unbiased; iterating into the floor lands on the edge
/// of a plateau of zeros and shifts every hit the same way.
fn polish<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, width: f64) -> f64 {
    let mut fa = f(a);
    let mut fb = f(b);
    while b - a > width {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm < 0.0 {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    if fb == fa {
        return 0.5 * (a + b);
    }
    a - fa * (b - a) / (fb - fa)
}

/// Boundary state needed to start or continue a ray.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Tracer<'a> {
    geometry: &'a CavityGeometry,
    min_radius: f64,
    max_radius: f64,
}

impl<'a> Tracer<'a> {
    pub(crate) fn new(geometry: &'a CavityGeometry) -> Self {
        Self {
            geometry,
            min_radius: geometry.min_radius(),
            max_radius: geometry.max_radius(),
        }
    }

    /// Distance from boundary point `p` along unit direction `d` to the next
    /// boundary crossing, and the crossing point.
    pub(crate) fn next_hit(&self, p: Vec2, d: Vec2, cos_in: f64) -> Result<(f64, Vec2)> {
        let g = self.geometry;
        let f = |t: f64| g.implicit([p[0] + t * d[0], p[1] + t * d[1]]);
        let limit = 2.0 * self.max_radius * 1.000001;
        let mut h = STEP_FRACTION * self.min_radius * cos_in.max(1e-4);

        // leave the boundary: the first sample must be strictly inside
        let mut tries = 0;
        while f(h) >= 0.0 {
            h /= 16.0;
            tries += 1;
            if tries > 12 {
                return Err(Error::Geometry("ray does not enter the cavity from the boundary".into()));
            }
        }
        let cap = STEP_CAP * self.min_radius;
        let mut a = h;
        loop {
            h = (h * STEP_GROWTH).min(cap.max(h));
            let b = (a + h).min(limit);
            if f(b) >= 0.0 {
                let t = polish(f, a, b, POLISH_WIDTH * self.min_radius);
                return Ok((t, [p[0] + t * d[0], p[1] + t * d[1]]));
            }
            if b >= limit {
                return Err(Error::Geometry("no boundary intersection along ray".into()));
            }
            a = b;
        }
    }
}

/// Inward unit direction at boundary angle `theta` making angle `chi` with
/// the inward normal, turned towards the counter-clockwise tangent.
pub fn launch_direction(geometry: &CavityGeometry, theta: f64, chi: f64) -> Vec2 {
    let n = geometry.outward_normal(theta);
    let t = geometry.unit_tangent(theta);
    let (s, c) = chi.sin_cos();
    [-c * n[0] + s * t[0], -c * n[1] + s * t[1]]
}

/// Follow a ray launched from the boundary at `theta0` with incidence angle
/// `chi0`. The launch point itself is not tested for escape.
pub fn trace_ray(geometry: &CavityGeometry, theta0: f64, chi0: f64, max_bounces: usize) -> Result<RayTrace> {
    if !(chi0 > 0.0 && chi0 < std::f64::consts::FRAC_PI_2) {
        return Err(invalid("chi0", "must lie in (0, pi/2)"));
    }
    let d = launch_direction(geometry, theta0, chi0);
    trace_from(geometry, theta0, d, max_bounces, true)
}

/// Follow a ray leaving the boundary point at `theta0` along unit direction
/// `d`, which must point into the cavity.
pub fn trace_from(
    geometry: &CavityGeometry,
    theta0: f64,
    d: Vec2,
    max_bounces: usize,
    record: bool,
) -> Result<RayTrace> {
    geometry.validate()?;
    let tracer = Tracer::new(geometry);
    trace_with(&tracer, theta0, d, max_bounces, record)
}

pub(crate) fn trace_with(
    tracer: &Tracer,
    theta0: f64,
    mut d: Vec2,
    max_bounces: usize,
    record: bool,
) -> Result<RayTrace> {
    let g = tracer.geometry;
    let crit = g.critical_sin();
    let mut theta = theta0;
    let mut p = g.point(theta);
    let mut path = 0.0;
    let mut bounces = Vec::new();
    let mut cos_in = -dot(d, g.outward_normal(theta));
    if cos_in <= 0.0 {
        return Err(invalid("direction", "must point into the cavity"));
    }

    for k in 0..max_bounces {
        // The hit stays on the ray rather than being projected onto the
        // boundary: projection shifts the angular momentum by a biased
        // sub-ulp amount every bounce.
        let (t, hit) = tracer.next_hit(p, d, cos_in)?;
        path += t;
        p = hit;
        theta = p[1].atan2(p[0]);
        let n = g.outward_normal(theta);
        let dn = dot(d, n);
        let sin_chi = cross(n, d).abs().min(1.0);
        if record {
            bounces.push(Bounce {
                theta,
                position: p,
                sin_chi,
                path,
            });
        }
        if sin_chi < crit {
            return Ok(RayTrace {
                outcome: RayOutcome::Escaped,
                path_length: path,
                bounce_count: k + 1,
                bounces,
                final_direction: d,
            });
        }
        // specular reflection, renormalized
        let r = [d[0] - 2.0 * dn * n[0], d[1] - 2.0 * dn * n[1]];
        let len = r[0].hypot(r[1]);
        d = [r[0] / len, r[1] / len];
        cos_in = -dot(d, n);
    }
    Ok(RayTrace {
        outcome: RayOutcome::MaxBouncesExceeded,
        path_length: path,
        bounce_count: max_bounces,
        bounces,
        final_direction: d,
    })
}
