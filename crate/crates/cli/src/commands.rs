use num_complex::Complex64;
use serde_json::json;
use tunnelpump::inverse::{propagate_uncertainty, ExtractedParams};
use tunnelpump::lineshape::{efficiency, intensities, lineshape_convolved};
use tunnelpump::transient::{integrate_envelopes, InitialEnvelopes, TransientOptions};
use tunnelpump::{
    bundle_stats, derive_params, extract, gamma_p_consistency, interference_rounds, modified_regular_mode,
    secular_roots, series_resummation_check, steady_state_eq4, steady_state_exact, steady_state_linear_solve,
    DerivedParams, Error, PumpDrive, SteadyState,
};

use crate::config::*;
use crate::output::{Artifact, Cell, Format, Table};
use crate::CliError;

pub struct Context {
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

impl Context {
    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

pub fn run(command: &Command, ctx: &Context) -> Result<Vec<Artifact>, CliError> {
    match command {
        Command::Steady(c) => steady(c, ctx),
        Command::Scan(c) => scan(c, ctx),
        Command::Invert(c) => invert(c, ctx),
        Command::Raysim(c) => raysim(c, ctx),
        Command::Transient(c) => transient(c, ctx),
        Command::Series(c) => series(c, ctx),
        Command::Spectrum(c) => spectrum(c, ctx),
    }
}

fn derived_table(p: &DerivedParams) -> Table {
    let mut t = Table::new(["quantity", "value"]);
    let rows: [(&str, Cell); 10] = [
        ("gamma_r", p.gamma_r.into()),
        ("E_p0", p.e_p0.into()),
        ("I_p0", p.i_p0.into()),
        ("g_bar_re", p.g_bar.re.into()),
        ("g_bar_im", p.g_bar.im.into()),
        ("gamma_p", p.gamma_p.into()),
        ("G", p.g.into()),
        ("gamma_r_prime", p.gamma_r_prime.into()),
        ("alpha", p.alpha.into()),
        ("alpha_prime", p.alpha_prime.into()),
    ];
    for (k, v) in rows {
        t.push(vec![k.into(), v]);
    }
    t
}

fn steady(cfg: &SteadyConfig, ctx: &Context) -> Result<Vec<Artifact>, CliError> {
    let ens = cfg.ensemble.build()?;
    let drive = cfg.drive.build()?;
    let params = derive_params(&ens, &drive).map_err(CliError::compute)?;
    let states: Vec<SteadyState> = [steady_state_exact, steady_state_eq4, steady_state_linear_solve]
        .iter()
        .map(|f| f(&ens, &drive))
        .collect::<Result<_, _>>()
        .map_err(CliError::compute)?;

    match ctx.format_or(Format::Json) {
        Format::Json => Ok(vec![Artifact::json(
            "steady",
            &json!({ "derived": params, "steady_states": states }),
        )]),
        Format::Csv => {
            let mut cols = vec!["mode".to_string(), "E_r_re".into(), "E_r_im".into(), "E_p_re".into(), "E_p_im".into()];
            cols.extend(["I_r", "I_p", "residual"].map(String::from));
            for k in 1..=ens.len() {
                cols.push(format!("E_{k}_re"));
                cols.push(format!("E_{k}_im"));
            }
            let mut t = Table::new(cols);
            for s in &states {
                let mode = serde_json::to_value(s.mode).expect("enum serializes");
                let mut row: Vec<Cell> = vec![
                    mode.as_str().unwrap_or_default().into(),
                    s.e_r.re.into(),
                    s.e_r.im.into(),
                    s.e_p.re.into(),
                    s.e_p.im.into(),
                    s.i_r.into(),
                    s.i_p.into(),
                    s.residual(&ens, &drive).into(),
                ];
                for e in &s.e_n {
                    row.push(e.re.into());
                    row.push(e.im.into());
                }
                t.push(row);
            }
            Ok(vec![Artifact::csv("derived", &derived_table(&params)), Artifact::csv("steady", &t)])
        }
    }
}

fn scan(cfg: &ScanConfig, ctx: &Context) -> Result<Vec<Artifact>, CliError> {
    let ens = cfg.ensemble.build()?;
    let drive = PumpDrive::new(cfg.e0.value(), 0.0, cfg.gamma_l).map_err(CliError::config)?;
    let grid = cfg.delta_grid.points()?;
    if !(cfg.beta_p.is_finite() && cfg.beta_p > 0.0) {
        return Err(CliError::config(Error::InvalidOverlap { beta_p: cfg.beta_p }));
    }
    if !(cfg.beta_r.is_finite() && cfg.beta_r >= 0.0) {
        return Err(CliError::config(format!("beta_r must be >= 0, got {}", cfg.beta_r)));
    }
    let params = derive_params(&ens, &drive).map_err(CliError::compute)?;
    let width = cfg.gamma_l / params.gamma_r;
    let mut t = Table::new(["delta", "I_r", "I_p", "lineshape", "efficiency"]);
    for &delta in &grid {
        let (i_r, i_p) = intensities(&params, delta);
        let eps = efficiency(&params, delta, cfg.beta_p, cfg.beta_r, cfg.gamma_l).map_err(CliError::compute)?;
        t.push(vec![
            delta.into(),
            i_r.into(),
            i_p.into(),
            lineshape_convolved(&params, delta, width).into(),
            eps.into(),
        ]);
    }
    Ok(vec![Artifact::table("scan", &t, ctx.format_or(Format::Csv))])
}

/// Variant name of a per-row failure, used as the status column.
fn status(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter { .. } => "InvalidParameter",
        Error::ZeroPump => "ZeroPump",
        Error::SingularMatrix => "SingularMatrix",
        Error::StiffnessFailure { .. } => "StiffnessFailure",
        Error::DivergentSeries { .. } => "DivergentSeries",
        Error::InvalidOverlap { .. } => "InvalidOverlap",
        Error::NoRoot { .. } => "NoRoot",
        Error::AmbiguousRoot { .. } => "AmbiguousRoot",
        Error::Geometry(_) => "Geometry",
        Error::AllConfined => "AllConfined",
    }
}

fn invert(cfg: &InvertConfig, ctx: &Context) -> Result<Vec<Artifact>, CliError> {
    if cfg.measurements.is_empty() {
        return Err(CliError::config("measurements: at least one row is required"));
    }
    if cfg.samples != 0 && cfg.samples < 1000 {
        return Err(CliError::config("samples: use 0 (no propagation) or at least 1000"));
    }
    let seed = ctx.seed.unwrap_or(0);
    let results: Vec<Result<(ExtractedParams, Option<f64>), Error>> = cfg
        .measurements
        .iter()
        .enumerate()
        .map(|(i, m)| {
            if cfg.samples == 0 {
                extract(m).map(|p| (p, None))
            } else {
                // row i draws from master seed + i
                let row_seed = seed.wrapping_add(i as u64);
                propagate_uncertainty(m, cfg.samples, row_seed).map(|u| (u.params, Some(u.rejection_fraction)))
            }
        })
        .collect();

    if results.iter().all(|r| r.is_err()) {
        let msgs: Vec<String> = cfg
            .measurements
            .iter()
            .zip(&results)
            .filter_map(|(m, r)| r.as_ref().err().map(|e| format!("{}: {e}", m.mode_label)))
            .collect();
        return Err(CliError::compute(format!("every row failed: {}", msgs.join("; "))));
    }

    let names = ["gamma_r", "G", "g_bar", "alpha", "alpha_prime", "gamma_rG"];
    let mut cols = vec!["mode".to_string(), "status".into()];
    for n in names {
        cols.push(n.into());
        cols.push(format!("{n}_sigma"));
    }
    cols.push("rejection_fraction".into());
    cols.push("message".into());
    let mut t = Table::new(cols);
    let mut ok_rows = Vec::new();
    for (m, r) in cfg.measurements.iter().zip(&results) {
        let mut row: Vec<Cell> = vec![m.mode_label.clone().into()];
        match r {
            Ok((p, rej)) => {
                row.push("ok".into());
                for u in [p.gamma_r, p.g, p.g_bar, p.alpha, p.alpha_prime, p.gamma_r_g] {
                    row.push(u.value.into());
                    row.push(u.sigma.into());
                }
                row.push((*rej).into());
                row.push(Cell::Empty);
                ok_rows.push((m.mode_label.clone(), p.g_bar.value, p.gamma_r_g.value));
            }
            Err(e) => {
                row.push(status(e).into());
                row.extend(std::iter::repeat(Cell::Empty).take(2 * names.len() + 1));
                row.push(e.to_string().into());
            }
        }
        t.push(row);
    }

    let pairs: Vec<(f64, f64)> = ok_rows.iter().map(|r| (r.1, r.2)).collect();
    let consistency = if pairs.len() >= 2 {
        Some(gamma_p_consistency(&pairs, cfg.gamma_p_reference).map_err(CliError::compute)?)
    } else {
        None
    };

    match ctx.format_or(Format::Csv) {
        Format::Json => Ok(vec![Artifact::json(
            "invert",
            &json!({ "rows": t.to_json(), "gamma_p_consistency": consistency }),
        )]),
        Format::Csv => {
            let mut out = vec![Artifact::csv("invert", &t)];
            if let Some(c) = &consistency {
                let mut s = Table::new(["quantity", "value"]);
                for ((label, _, _), gp) in ok_rows.iter().zip(&c.per_mode) {
                    s.push(vec![format!("gamma_p[{label}]").into(), (*gp).into()]);
                }
                s.push(vec!["mean".into(), c.mean.into()]);
                s.push(vec!["spread".into(), c.spread.into()]);
                s.push(vec!["max_deviation".into(), c.max_deviation.into()]);
                out.push(Artifact::csv("gamma_p_consistency", &s));
            }
            Ok(out)
        }
    }
}

fn raysim(cfg: &RaysimConfig, ctx: &Context) -> Result<Vec<Artifact>, CliError> {
    cfg.geometry.validate().map_err(CliError::config)?;
    let mut bundle = cfg.bundle.clone();
    if let Some(seed) = ctx.seed {
        bundle.seed = seed;
    }
    bundle.validate().map_err(CliError::config)?;
    if cfg.max_bounces == 0 {
        return Err(CliError::config("max_bounces must be >= 1"));
    }
    let stats = bundle_stats(&cfg.geometry, &bundle, cfg.max_bounces).map_err(CliError::compute)?;

    let mut birkhoff = Table::new(["ray", "s", "sin_chi"]);
    for b in &stats.birkhoff_trace {
        birkhoff.push(vec![b.ray.into(), b.s.into(), b.sin_chi.into()]);
    }
    let mut survival = Table::new(["path", "fraction"]);
    for p in &stats.survival_curve {
        survival.push(vec![p.path.into(), p.fraction.into()]);
    }
    let format = ctx.format_or(Format::Csv);
    Ok(vec![
        Artifact::json("escape_stats", &stats),
        Artifact::table("birkhoff", &birkhoff, format),
        Artifact::table("survival", &survival, format),
    ])
}

fn transient(cfg: &TransientConfig, ctx: &Context) -> Result<Vec<Artifact>, CliError> {
    let ens = cfg.ensemble.build()?;
    let drive = cfg.drive.build()?;
    let t_end = cfg
        .t_end
        .unwrap_or_else(|| 20.0 / (ens.gamma_r * (1.0 + ens.enhancement())));
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(CliError::config(format!("t_end must be > 0, got {t_end}")));
    }
    let dt = cfg.sample_interval.unwrap_or(t_end / 1000.0);
    if !(dt.is_finite() && dt > 0.0) {
        return Err(CliError::config(format!("sample_interval must be > 0, got {dt}")));
    }
    if !cfg.initial.e_n.is_empty() && cfg.initial.e_n.len() != ens.len() {
        return Err(CliError::config(format!(
            "initial.e_n: expected {} values, got {}",
            ens.len(),
            cfg.initial.e_n.len()
        )));
    }
    let opts = TransientOptions {
        initial: InitialEnvelopes {
            e_r: cfg.initial.e_r.value(),
            e_n: cfg.initial.e_n.iter().map(|z| z.value()).collect(),
        },
        sample_interval: Some(dt),
        ..Default::default()
    };
    let traj = integrate_envelopes(&ens, &drive, t_end, &opts).map_err(CliError::compute)?;

    let mut cols = vec!["t".to_string(), "E_r_re".into(), "E_r_im".into()];
    for k in 1..=ens.len() {
        cols.push(format!("E_{k}_re"));
        cols.push(format!("E_{k}_im"));
    }
    cols.extend(["I_r", "I_c_total", "pump_work"].map(String::from));
    let mut t = Table::new(cols);
    for p in &traj {
        let mut row: Vec<Cell> = vec![p.t.into(), p.e_r.re.into(), p.e_r.im.into()];
        for e in &p.e_n {
            row.push(e.re.into());
            row.push(e.im.into());
        }
        row.extend([p.i_r.into(), p.i_c_total.into(), p.pump_work.into()]);
        t.push(row);
    }
    Ok(vec![Artifact::table("trajectory", &t, ctx.format_or(Format::Csv))])
}

fn series(cfg: &SeriesConfig, ctx: &Context) -> Result<Vec<Artifact>, CliError> {
    let ens = cfg.ensemble.build()?;
    let drive = PumpDrive::new(cfg.e0.value(), 0.0, 0.0).map_err(CliError::config)?;
    if cfg.k_max == 0 {
        return Err(CliError::config("k_max must be >= 1"));
    }
    let rc = interference_rounds(&ens, &drive, cfg.k_max).map_err(CliError::compute)?;
    let exact = steady_state_exact(&ens, &drive).map_err(CliError::compute)?.e_r;
    let report = if rc.converges() {
        Some(series_resummation_check(&ens, &drive, cfg.k_max).map_err(CliError::compute)?)
    } else {
        log::warn!("G = {} >= 1: the interference series diverges", rc.g);
        None
    };

    let mut t = Table::new(["k", "E_r_k_re", "E_r_k_im", "partial_re", "partial_im", "error"]);
    for (k, (z, s)) in rc.e_r_rounds.iter().zip(rc.partial_sums()).enumerate() {
        t.push(vec![
            (k + 1).into(),
            z.re.into(),
            z.im.into(),
            s.re.into(),
            s.im.into(),
            (s - exact).norm().into(),
        ]);
    }
    match ctx.format_or(Format::Csv) {
        Format::Json => Ok(vec![Artifact::json("series", &json!({ "rounds": t.to_json(), "report": report }))]),
        Format::Csv => {
            let mut out = vec![Artifact::csv("series", &t)];
            if let Some(r) = &report {
                out.push(Artifact::json("series_report", r));
            }
            Ok(out)
        }
    }
}

fn spectrum(cfg: &SpectrumConfig, ctx: &Context) -> Result<Vec<Artifact>, CliError> {
    let ens = cfg.ensemble.build()?;
    let spec = secular_roots(&ens).map_err(CliError::compute)?;
    let mode = modified_regular_mode(&ens).map_err(CliError::compute)?;
    match ctx.format_or(Format::Csv) {
        Format::Json => Ok(vec![Artifact::json(
            "spectrum",
            &json!({ "spectrum": spec, "regular_mode": mode }),
        )]),
        Format::Csv => {
            let mut t = Table::new(["k", "lambda_exact", "lambda_dense_re", "lambda_dense_im"]);
            let missing = Complex64::new(f64::NAN, f64::NAN);
            for (k, l) in spec.lambda_exact.iter().enumerate() {
                let d = spec.lambda_dense.get(k).copied().unwrap_or(missing);
                t.push(vec![k.into(), (*l).into(), d.re.into(), d.im.into()]);
            }
            let mut v = Table::new(["component", "first_order", "exact", "error"]);
            for (k, ((a, b), e)) in mode.first_order.iter().zip(&mode.exact).zip(&mode.component_error).enumerate() {
                v.push(vec![k.into(), (*a).into(), (*b).into(), (*e).into()]);
            }
            Ok(vec![Artifact::csv("spectrum", &t), Artifact::csv("regular_mode", &v)])
        }
    }
}
