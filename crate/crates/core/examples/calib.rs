use rotodop::config::{DipChoice, RunConfig};
use rotodop::dynamics::{evolve, fluorescence, DensityState};
use rotodop::spectra::*;
use rotodop::units::{mhz, to_mhz, um, us};
use std::time::Instant;

fn main() {
    let which = std::env::args().nth(1).unwrap_or("c1".into());
    let token = CancelToken::default();
    match which.as_str() {
        "c1" => {
            // criterion 1 rehearsal: weak IR, resonant IR2, narrow dip,
            // zero field so the dark subspace closes exactly
            let mut cfg = RunConfig::default();
            cfg.atom.b_field_gauss = 0.0;
            cfg.micromotion.velocity_mps = 0.0;
            cfg.drives.uv.rabi_mhz = 4.0;
            cfg.drives.ir1.rabi_mhz = 0.1;
            cfg.drives.ir2.rabi_mhz = 0.1;
            cfg.drives.ir2.detuning_mhz = 0.0;
            cfg.drives.ir1.detuning_mhz = 0.0;
            cfg.dynamics.transient_us = 100.0;
            cfg.dynamics.window_us = 100.0;
            cfg.dynamics.rel_tol = 1e-7;
            cfg.dynamics.abs_tol = 1e-11;
            let sc = cfg.scenario().unwrap();
            let t0 = Instant::now();
            let dip = match sweep_and_fit_dip(&sc, &SweepPlan::default(), &token) { Ok(d) => d, Err(e) => { eprintln!("ERR: {e}"); std::process::exit(1); } };
            println!(
                "partial dip: fwhm {:.3} kHz, depth {:.3}, center off pred {:.3} kHz ({:?})",
                to_mhz(dip.fwhm) * 1e3,
                dip.depth,
                to_mhz(dip.center - predicted_dd_center(&sc, DipChoice::Lower).unwrap()) * 1e3,
                t0.elapsed()
            );
            // floor at 25 ms
            let center = predicted_dd_center(&sc, DipChoice::Lower).unwrap();
            let run_pt = |delta: f64, tr_us: f64, w_us: f64| {
                let s = sc.with_ir1_detuning(delta);
                let drives = s.drives().unwrap();
                let clock = s.clock(&drives).unwrap();
                let mut opts = s.evolve;
                opts.transient = us(tr_us);
                opts.window = us(w_us);
                let r = evolve(&DensityState::pure(0), &s.structure, &drives, &clock, &opts).unwrap();
                fluorescence(&r.populations)
            };
            let t0 = Instant::now();
            let floor = run_pt(center, 13500.0, 500.0);
            let base = run_pt(center + mhz(0.5), 900.0, 100.0);
            println!(
                "floor {floor:.3e} baseline {base:.3e} ratio {:.2e} ({:?})",
                floor / base,
                t0.elapsed()
            );
        }
        "c2" => {
            // criterion 2 rehearsal at weak drive
            for (uv, ir) in [(3.0, 2.0), (5.0, 3.0)] {
                let mut cfg = RunConfig::default();
                cfg.micromotion.velocity_mps = 0.0;
                cfg.drives.uv.rabi_mhz = uv;
                cfg.drives.ir1.rabi_mhz = ir;
                cfg.drives.ir2.rabi_mhz = ir;
                cfg.dynamics.transient_us = 40.0;
                cfg.dynamics.window_us = 60.0;
                cfg.dynamics.rel_tol = 1e-7;
                cfg.dynamics.abs_tol = 1e-10;
                let sc = cfg.scenario().unwrap();
                let dips = rotodop::atom::dark_resonance_positions(
                    &sc.structure,
                    sc.uv.detuning,
                    sc.ir2.detuning,
                );
                println!("uv {uv} ir {ir}:");
                for d in &dips {
                    // locate and fit each dip from its predicted center
                    let w_guess = mhz(0.35);
                    let mut found = None;
                    let mut half = mhz(2.0);
                    for _ in 0..6 {
                        let grid = linspace(d.center - half, d.center + half, 21);
                        let spec = sweep_spectrum(&sc, &grid, &token).unwrap();
                        if let Some((c, w)) = locate_minimum_pub(&spec) {
                            found = Some((c, w));
                            break;
                        }
                        half /= 8.0;
                    }
                    let Some((c_est, w_est)) = found else {
                        println!("  {:?} {:.3}: NOT FOUND", d.kind, to_mhz(d.center));
                        continue;
                    };
                    let _ = w_guess;
                    let half = 4.0 * w_est;
                    let grid = linspace(c_est - half, c_est + half, 61);
                    let spec = sweep_spectrum(&sc, &grid, &token).unwrap();
                    match fit_lorentzian_dip(&spec, (c_est - half, c_est + half)) {
                        Ok(f) => println!(
                            "  {:?} pred {:+8.4} MHz: center {:+8.4} +- {:.4} MHz (off {:+6.1} kHz, {:.1} sigma), fwhm {:.3} MHz",
                            d.kind,
                            to_mhz(d.center),
                            to_mhz(f.center),
                            to_mhz(f.center_err),
                            to_mhz(f.center - d.center) * 1e3,
                            (f.center - d.center).abs() / f.center_err.max(1.0),
                            to_mhz(f.fwhm)
                        ),
                        Err(e) => println!("  {:?}: fit err {e}", d.kind),
                    }
                }
            }
        }
        "c7" => {
            // angular scan rehearsal: r = 42 um, phi_mm = 74 deg, waist 42
            let mut cfg = RunConfig::default();
            cfg.drives.uv.detuning_mhz = 0.0;
            cfg.drives.uv.rabi_mhz = 28.0;
            cfg.drives.ir1.detuning_mhz = 60.0;
            cfg.drives.ir2.detuning_mhz = 60.0;
            cfg.beams.ir1.waist_um = 42.0;
            cfg.beams.ir2.waist_um = 42.0;
            cfg.micromotion.direction_deg = 74.0;
            cfg.dynamics.transient_us = 15.0;
            cfg.dynamics.window_us = 25.0;
            cfg.dynamics.rel_tol = 1e-6;
            cfg.dynamics.abs_tol = 1e-9;
            let sc = cfg.scenario().unwrap();
            let phis: Vec<f64> = (0..12).map(|i| (i as f64 * 30.0).to_radians()).collect();
            let t0 = Instant::now();
            let scan = angular_scan(&sc, &phis, um(42.0), &SweepPlan::default(), um(0.5), &token).unwrap();
            for p in &scan.points {
                if let Some(d) = &p.dip {
                    println!("phi {:5.0} deg: depth {:.4}", p.abscissa.to_degrees(), d.depth);
                }
            }
            eprintln!("angular took {:?}", t0.elapsed());
        }
        _ => {}
    }
}

// re-expose the locator for the rehearsal
fn locate_minimum_pub(spec: &Spectrum) -> Option<(f64, f64)> {
    let n = spec.fluorescence.len();
    let (i_min, y_min) = spec
        .fluorescence
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, y)| (i, *y))?;
    if i_min == 0 || i_min == n - 1 {
        return None;
    }
    let baseline = spec.fluorescence[0].max(spec.fluorescence[n - 1]);
    if y_min > baseline * 0.98 {
        return None;
    }
    let half = y_min + 0.5 * (baseline - y_min);
    let mut left = spec.detunings[0];
    for i in (0..i_min).rev() {
        if spec.fluorescence[i] >= half {
            left = spec.detunings[i];
            break;
        }
    }
    let mut right = spec.detunings[n - 1];
    for i in i_min..n {
        if spec.fluorescence[i] >= half {
            right = spec.detunings[i];
            break;
        }
    }
    let grid_step = spec.detunings[1] - spec.detunings[0];
    Some((spec.detunings[i_min], (0.5 * (right - left)).max(grid_step)))
}
