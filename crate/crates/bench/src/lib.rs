//! Fixed inputs shared by the benchmarks.

use num_complex::Complex64;
use tunnelpump::inverse::Uncertain;
use tunnelpump::ray::{CavityGeometry, RayBundle};
use tunnelpump::{ChaoticMode, Measurement, ModeEnsemble, PumpDrive};

/// N chaotic modes with rates spread over two decades and G about 0.5.
pub fn ensemble(n: usize) -> ModeEnsemble {
    let modes = (0..n)
        .map(|i| {
            let gamma = 100.0 * 10f64.powf(2.0 * i as f64 / n.max(2) as f64);
            let g = gamma * (0.5 / n as f64).sqrt() * 0.1;
            let a = Complex64::from_polar(1.0, 0.3 * i as f64);
            ChaoticMode::new(gamma, g, a).expect("valid mode")
        })
        .collect();
    ModeEnsemble::new(1.0, 0.0, modes).expect("valid ensemble")
}

pub fn drive() -> PumpDrive {
    PumpDrive::new(Complex64::new(1.0, 0.0), 0.3, 0.0).expect("valid drive")
}

/// One measurement row with a unique root at G = 0.3.
pub fn measurement() -> Measurement {
    Measurement {
        mode_label: "bench".into(),
        epsilon0: Uncertain::new(22.0, 4.0),
        gamma_r_prime_meas: Uncertain::new(19.5e9, 6e9),
        beta_r: Uncertain::new(0.6, 0.1),
        beta_p: Uncertain::exact(0.5368421052631578),
        gamma_p: Uncertain::exact(1.7e12),
        gamma_l: 1e9,
    }
}

pub fn quadrupole() -> CavityGeometry {
    CavityGeometry::quadrupole(2.1e-5, 0.08, 1.361)
}

pub fn bundle(count: usize) -> RayBundle {
    RayBundle {
        theta0: 0.0,
        chi0: 0.9,
        sigma_theta: 0.1,
        sigma_chi: 0.05,
        count,
        seed: 7,
        birkhoff_rays: 0,
    }
}
