//! Mode-mode coupling model of resonant pumping through chaos-assisted
//! dynamical tunneling in a deformed microcavity.

pub mod ensemble;
pub mod error;
pub mod inverse;
pub mod lineshape;
pub mod ode;
pub mod params;
pub mod quadrature;
pub mod ray;
mod roots;
pub mod series;
pub mod spectrum;
pub mod steady;
pub mod transient;

pub use ensemble::{ChaoticMode, ModeEnsemble, PumpDrive};
pub use error::{Error, Result};
pub use params::{derive_params, DerivedParams};
pub use steady::{steady_state_eq4, steady_state_exact, steady_state_linear_solve, SolveMode, SteadyState};
pub use inverse::{derived_columns, extract, gamma_p_consistency, propagate_uncertainty, ExtractedParams, Measurement, Uncertain};
pub use ray::{bundle_stats, trace_ray, CavityGeometry, EscapeStats, RayBundle};
pub use series::{interference_rounds, series_resummation_check, ResummationReport, RoundContributions};
pub use spectrum::{modified_regular_mode, secular_roots, SpectrumResult};
