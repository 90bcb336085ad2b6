//! Subcommand implementations: thin orchestration over the library.

use std::path::Path;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use rotodop::analytic;
use rotodop::config::{RunConfig, ScanModeConfig, Scenario};
use rotodop::fitkit::{
    self, synthetic_depth_dataset, DepthDataset, FullModel, ResidualCache,
};
use rotodop::lm::FitOptions;
use rotodop::spectra::{
    self, angular_scan as lib_angular_scan, linspace, radial_scan as lib_radial_scan,
    waist_comparison, CancelToken, RotationMode, ScanResult, SweepPlan,
};
use rotodop::units::{mhz, um, us};

use crate::output;
use crate::{CommonArgs, FitArgs, Format};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Simulation(String),
    Io(String),
}

fn scenario_of(cfg: &RunConfig) -> Result<Scenario, CliError> {
    cfg.scenario().map_err(|e| CliError::Config(e.to_string()))
}

fn plan_of(cfg: &RunConfig) -> SweepPlan {
    SweepPlan {
        prescan_points: cfg.scan.prescan_points,
        final_points: cfg.scan.final_points,
        window_halfwidths: 4.0,
        dip: cfg.scan.dip,
    }
}

fn token(cancel: &Arc<AtomicBool>) -> CancelToken {
    CancelToken::new(cancel.clone())
}

pub fn spectrum(
    args: &CommonArgs,
    cfg: &RunConfig,
    cancel: &Arc<AtomicBool>,
) -> Result<(), CliError> {
    let dir = args.output_dir();
    output::ensure_dir(&dir)?;
    let sc = scenario_of(cfg)?;
    let grid = linspace(
        mhz(cfg.spectrum.start_mhz),
        mhz(cfg.spectrum.stop_mhz),
        cfg.spectrum.points.max(1),
    );
    let spec = spectra::sweep_spectrum(&sc, &grid, &token(cancel))
        .map_err(|e| CliError::Simulation(e.to_string()))?;
    let fp = cfg.fingerprint();
    match args.format {
        Format::Csv => output::write_csv(
            &output::file_path(&dir, "spectrum", &fp, "csv"),
            &fp,
            |w| spec.write_csv(w),
        )?,
        Format::Json => output::write_json(&output::file_path(&dir, "spectrum", &fp, "json"), &spec)?,
    }
    output::write_sidecar(&dir, "spectrum", "spectrum", cfg)
}

fn write_scan(
    dir: &Path,
    stem: &str,
    fp: &str,
    format: Format,
    scan: &ScanResult,
) -> Result<(), CliError> {
    match format {
        Format::Csv => output::write_csv(
            &output::file_path(dir, stem, fp, "csv"),
            fp,
            |w| scan.write_csv(w),
        ),
        Format::Json => output::write_json(&output::file_path(dir, stem, fp, "json"), scan),
    }
}

pub fn radial_scan(
    args: &CommonArgs,
    cfg: &RunConfig,
    cancel: &Arc<AtomicBool>,
) -> Result<(), CliError> {
    let dir = args.output_dir();
    output::ensure_dir(&dir)?;
    let sc = scenario_of(cfg)?;
    let plan = plan_of(cfg);
    let r_values: Vec<f64> = cfg.scan.r_values_um.iter().map(|r| um(*r)).collect();
    let r_min = um(cfg.scan.r_min_um);
    let tok = token(cancel);
    let fp = cfg.fingerprint();

    let mode = match cfg.scan.mode {
        ScanModeConfig::Counter => RotationMode::CounterRotating,
        ScanModeConfig::Co => RotationMode::CoRotating,
    };
    let mut scan = lib_radial_scan(&sc, &r_values, mode, cfg.scan.equal_rabi, &plan, r_min, &tok)
        .map_err(|e| CliError::Simulation(e.to_string()))?;

    // motion-sensitive scans also get the motion-insensitive reference so
    // the relative depth column is populated
    if mode == RotationMode::CounterRotating && !scan.cancelled {
        let reference = lib_radial_scan(
            &sc,
            &r_values,
            RotationMode::CoRotating,
            cfg.scan.equal_rabi,
            &plan,
            r_min,
            &tok,
        )
        .map_err(|e| CliError::Simulation(e.to_string()))?;
        scan.normalize_against(&reference);
        write_scan(&dir, "radial_co", &fp, args.format, &reference)?;
    }
    let stem = match mode {
        RotationMode::CounterRotating => "radial_counter",
        RotationMode::CoRotating => "radial_co",
    };
    write_scan(&dir, stem, &fp, args.format, &scan)?;
    output::write_sidecar(&dir, "radial", "radial-scan", cfg)
}

pub fn angular_scan(
    args: &CommonArgs,
    cfg: &RunConfig,
    cancel: &Arc<AtomicBool>,
) -> Result<(), CliError> {
    let dir = args.output_dir();
    output::ensure_dir(&dir)?;
    let sc = scenario_of(cfg)?;
    let plan = plan_of(cfg);
    let phis: Vec<f64> = cfg
        .scan
        .phi_values_deg
        .iter()
        .map(|p| p.to_radians())
        .collect();
    let scan = lib_angular_scan(
        &sc,
        &phis,
        um(cfg.ion.r_um),
        &plan,
        um(cfg.scan.r_min_um),
        &token(cancel),
    )
    .map_err(|e| CliError::Simulation(e.to_string()))?;
    let fp = cfg.fingerprint();
    write_scan(&dir, "angular", &fp, args.format, &scan)?;
    output::write_sidecar(&dir, "angular", "angular-scan", cfg)
}

pub fn waist_compare(
    args: &CommonArgs,
    cfg: &RunConfig,
    cancel: &Arc<AtomicBool>,
) -> Result<(), CliError> {
    let dir = args.output_dir();
    output::ensure_dir(&dir)?;
    let sc = scenario_of(cfg)?;
    let plan = plan_of(cfg);
    let r_values: Vec<f64> = cfg.scan.r_values_um.iter().map(|r| um(*r)).collect();
    let waists = (um(cfg.scan.waists_um[0]), um(cfg.scan.waists_um[1]));
    let (a, b) = waist_comparison(
        &sc,
        &r_values,
        waists,
        &plan,
        um(cfg.scan.r_min_um),
        &token(cancel),
    )
    .map_err(|e| CliError::Simulation(e.to_string()))?;
    let fp = cfg.fingerprint();
    let stem_a = format!("waist_{:.0}um", cfg.scan.waists_um[0]);
    let stem_b = format!("waist_{:.0}um", cfg.scan.waists_um[1]);
    write_scan(&dir, &stem_a, &fp, args.format, &a)?;
    write_scan(&dir, &stem_b, &fp, args.format, &b)?;

    // pointwise depth discrepancy summary
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut compared = 0usize;
    for (pa, pb) in a.points.iter().zip(&b.points) {
        if let (Some(da), Some(db)) = (&pa.dip, &pb.dip) {
            let diff = (da.depth - db.depth).abs();
            max_abs = max_abs.max(diff);
            max_rel = max_rel.max(diff / da.depth.max(db.depth).max(1e-12));
            compared += 1;
        }
    }
    #[derive(serde::Serialize)]
    struct Summary {
        fingerprint: String,
        waists_um: [f64; 2],
        points_compared: usize,
        max_abs_depth_discrepancy: f64,
        max_rel_depth_discrepancy: f64,
    }
    output::write_json(
        &output::file_path(&dir, "waist_summary", &fp, "json"),
        &Summary {
            fingerprint: fp.clone(),
            waists_um: cfg.scan.waists_um,
            points_compared: compared,
            max_abs_depth_discrepancy: max_abs,
            max_rel_depth_discrepancy: max_rel,
        },
    )?;
    output::write_sidecar(&dir, "waist", "waist-compare", cfg)
}

fn load_or_synthesize_data(args: &FitArgs, cfg: &RunConfig) -> Result<DepthDataset, CliError> {
    match &args.data {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let mut points = Vec::new();
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') || line.starts_with("r_um") {
                    continue;
                }
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() < 3 {
                    return Err(CliError::Config(format!(
                        "data row needs r_um,depth,depth_err: {line}"
                    )));
                }
                let parse = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| CliError::Config(format!("bad number {s}: {e}")))
                };
                points.push((um(parse(cols[0])?), parse(cols[1])?, parse(cols[2])?));
            }
            Ok(DepthDataset {
                points,
                metadata: format!("file:{}", path.display()),
            })
        }
        None => {
            // bundled synthetic dataset: the 31-point radial grid with the
            // configured velocity and noise level
            let r_values: Vec<f64> = (0..31).map(|i| um(5.0 + 35.0 * i as f64 / 30.0)).collect();
            Ok(synthetic_depth_dataset(
                cfg.beams.ir1.winding,
                mhz(cfg.micromotion.rf_mhz),
                0.8,
                2.0,
                cfg.micromotion.velocity_mps,
                &r_values,
                cfg.noise.sigma_rel,
                cfg.seed,
            ))
        }
    }
}

pub fn fit_bessel(args: &FitArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let dir = args.common.output_dir();
    output::ensure_dir(&dir)?;
    let data = load_or_synthesize_data(args, cfg)?;
    let fit = fitkit::fit_bessel_depth(
        &data,
        cfg.beams.ir1.winding,
        mhz(cfg.micromotion.rf_mhz),
        Some(2.0),
        cfg.micromotion.velocity_mps.max(50.0),
    )
    .map_err(|e| CliError::Simulation(e.to_string()))?;
    let fp = cfg.fingerprint();
    for (name, value, err) in fit
        .parameter_names
        .iter()
        .zip(fit.values.iter().zip(&fit.uncertainties))
        .map(|(n, (v, e))| (n, v, e))
    {
        eprintln!("  {name} = {value:.6e} +- {err:.2e}");
    }
    eprintln!("  chi2 = {:.3} (nu = {})", fit.chi2, fit.nu);
    output::write_json(&output::file_path(&dir, "fit_bessel", &fp, "json"), &fit)?;
    output::write_sidecar(&dir, "fit_bessel", "fit-bessel", cfg)
}

fn fit_scenario(cfg: &RunConfig) -> Result<Scenario, CliError> {
    let mut sc = scenario_of(cfg)?;
    sc.evolve.rel_tol = cfg.fit.depth_rel_tol;
    sc.evolve.abs_tol = cfg.fit.depth_rel_tol * 1e-3;
    sc.evolve.transient = us(cfg.fit.depth_transient_us);
    sc.evolve.window = us(cfg.fit.depth_window_us);
    Ok(sc)
}

fn full_model<'a>(
    cfg: &RunConfig,
    sc: Scenario,
    cache: &'a ResidualCache,
    cancel: &Arc<AtomicBool>,
) -> FullModel<'a> {
    let mut model = FullModel::new(sc, cfg.scan.dip, cache);
    model.rabi_bounds = (mhz(cfg.fit.rabi_bounds_mhz[0]), mhz(cfg.fit.rabi_bounds_mhz[1]));
    model.dephasing_bounds = (
        mhz(cfg.fit.dephasing_bounds_mhz[0]),
        mhz(cfg.fit.dephasing_bounds_mhz[1]),
    );
    model.cancel = CancelToken::new(cancel.clone());
    model
}

fn make_cache(args: &FitArgs) -> ResidualCache {
    match &args.cache {
        Some(path) => ResidualCache::persistent(path.clone()),
        None => ResidualCache::in_memory(),
    }
}

pub fn fit_full(
    args: &FitArgs,
    cfg: &RunConfig,
    cancel: &Arc<AtomicBool>,
) -> Result<(), CliError> {
    let dir = args.common.output_dir();
    output::ensure_dir(&dir)?;
    let data = load_or_synthesize_data(args, cfg)?;
    let cache = make_cache(args);
    let model = full_model(cfg, fit_scenario(cfg)?, &cache, cancel);
    let opts = FitOptions {
        max_evaluations: cfg.fit.eval_budget,
        max_iterations: 40,
        ftol: 1e-6,
        xtol: 1e-6,
        fd_step: 1e-3,
        ..Default::default()
    };
    let outcome = fitkit::fit_full_model(
        &model,
        &data,
        cfg.micromotion.velocity_mps.max(50.0),
        (cfg.fit.velocity_bounds_mps[0], cfg.fit.velocity_bounds_mps[1]),
        &opts,
    );
    let _ = cache.flush();
    let fit = match outcome {
        Ok(fit) => fit,
        Err(fitkit::FitkitError::Unconverged(partial)) => {
            eprintln!("warning: budget exhausted, reporting the best iterate (unconverged)");
            partial
        }
        Err(e) => return Err(CliError::Simulation(e.to_string())),
    };
    for (name, value, err) in fit
        .parameter_names
        .iter()
        .zip(fit.values.iter().zip(&fit.uncertainties))
        .map(|(n, (v, e))| (n, v, e))
    {
        eprintln!("  {name} = {value:.6e} +- {err:.2e}");
    }
    eprintln!("  chi2 = {:.3} (nu = {})", fit.chi2, fit.nu);
    let fp = cfg.fingerprint();
    output::write_json(&output::file_path(&dir, "fit_full", &fp, "json"), &fit)?;
    output::write_sidecar(&dir, "fit_full", "fit-full", cfg)
}

pub fn interval_scan(
    args: &FitArgs,
    cfg: &RunConfig,
    cancel: &Arc<AtomicBool>,
) -> Result<(), CliError> {
    let dir = args.common.output_dir();
    output::ensure_dir(&dir)?;
    let data = load_or_synthesize_data(args, cfg)?;
    let cache = make_cache(args);
    let model = full_model(cfg, fit_scenario(cfg)?, &cache, cancel);
    let opts = FitOptions {
        max_evaluations: cfg.fit.eval_budget,
        max_iterations: 30,
        ftol: 1e-6,
        xtol: 1e-6,
        fd_step: 1e-3,
        ..Default::default()
    };
    let rabi = (mhz(cfg.fit.rabi_bounds_mhz[0]), mhz(cfg.fit.rabi_bounds_mhz[1]));
    let plausibility = [
        rabi,
        rabi,
        rabi,
        (
            mhz(cfg.fit.dephasing_bounds_mhz[0]),
            mhz(cfg.fit.dephasing_bounds_mhz[1]),
        ),
    ];
    let interval = fitkit::velocity_interval_scan(
        &model,
        &data,
        &cfg.fit.velocity_grid_mps,
        cfg.fit.percentile,
        Some(&plausibility),
        &opts,
    )
    .map_err(|e| CliError::Simulation(e.to_string()))?;
    let _ = cache.flush();
    eprintln!(
        "  threshold chi2 < {:.3} at nu = {}; accepted range {:?}",
        interval.threshold, interval.nu, interval.accepted_range
    );
    let fp = cfg.fingerprint();
    match args.common.format {
        Format::Csv => output::write_csv(
            &output::file_path(&dir, "interval", &fp, "csv"),
            &fp,
            |w| fitkit::write_interval_csv(&interval, w),
        )?,
        Format::Json => {
            output::write_json(&output::file_path(&dir, "interval", &fp, "json"), &interval)?
        }
    }
    output::write_sidecar(&dir, "interval", "interval-scan", cfg)
}

pub fn analytic_depth(args: &CommonArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let dir = args.output_dir();
    output::ensure_dir(&dir)?;
    let params = cfg.analytic.params(mhz(cfg.micromotion.rf_mhz));
    if !params.weak_pump_ok() {
        eprintln!(
            "warning: drive is outside the weak-pumping regime (rabi > decay_d/5); \
             the depth formula degrades"
        );
    }
    let betas = linspace(0.0, cfg.analytic.beta_max, cfg.analytic.beta_points.max(2));
    let cal = analytic::calibrate_j0_approx(&params, &betas, cfg.analytic.fixed_scale)
        .map_err(|e| CliError::Simulation(e.to_string()))?;
    eprintln!(
        "  J0 shorthand: a = {:.4}, b = {:.4}, max residual {:.2e}",
        cal.approx.amplitude, cal.approx.scale, cal.max_residual
    );
    if betas.iter().any(|&b| !cal.approx.valid_for(b)) {
        eprintln!("warning: grid extends beyond the validity bound beta_max");
    }
    let fp = cfg.fingerprint();
    output::write_csv(
        &output::file_path(&dir, "analytic_depth", &fp, "csv"),
        &fp,
        |w| {
            writeln!(w, "beta,depth_full,depth_j0")?;
            for &beta in &betas {
                let full = analytic::dark_depth(&params, beta, None)
                    .map_err(|e| std::io::Error::other(e.to_string()))?;
                let j0 = analytic::dark_depth_j0(&cal.approx, beta);
                writeln!(w, "{beta:.9e},{full:.9e},{j0:.9e}")?;
            }
            Ok(())
        },
    )?;
    output::write_sidecar(&dir, "analytic_depth", "analytic-depth", cfg)
}
