use rotodop::config::RunConfig;
use rotodop::spectra::*;
use rotodop::units::{to_mhz, um};
use std::time::Instant;

fn scan_cfg() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.drives.uv.detuning_mhz = -10.0;
    cfg.drives.uv.rabi_mhz = 24.0;
    cfg.dynamics.transient_us = 15.0;
    cfg.dynamics.window_us = 25.0;
    cfg.dynamics.rel_tol = 1e-6;
    cfg.dynamics.abs_tol = 1e-9;
    cfg
}

fn main() {
    let token = CancelToken::default();
    let what = std::env::args().nth(1).unwrap_or("radial".into());
    match what.as_str() {
        "radial" => {
            let sc = scan_cfg().scenario().unwrap();
            let t0 = Instant::now();
            let rs: Vec<f64> = [5.0, 7.0, 10.0, 14.0, 20.0, 28.0, 40.0].iter().map(|r| um(*r)).collect();
            let scan = radial_scan(&sc, &rs, RotationMode::CounterRotating, true,
                                   &SweepPlan::default(), um(0.5), &token).unwrap();
            for p in &scan.points {
                match &p.dip {
                    Some(d) => println!("r {:5.1} um: depth {:.4} fwhm {:.4} MHz", p.abscissa*1e6, d.depth, to_mhz(d.fwhm)),
                    None => println!("r {:5.1}: ERR {:?}", p.abscissa*1e6, p.error),
                }
            }
            eprintln!("counter scan took {:?}", t0.elapsed());
            let t0 = Instant::now();
            let scan = radial_scan(&sc, &rs, RotationMode::CoRotating, true,
                                   &SweepPlan::default(), um(0.5), &token).unwrap();
            for p in &scan.points {
                match &p.dip {
                    Some(d) => println!("co r {:5.1} um: depth {:.4} fwhm {:.4} MHz", p.abscissa*1e6, d.depth, to_mhz(d.fwhm)),
                    None => println!("co r {:5.1}: ERR {:?}", p.abscissa*1e6, p.error),
                }
            }
            eprintln!("co scan took {:?}", t0.elapsed());
        }
        "weak" => {
            // criterion-1 style: weak IR, no micromotion
            let mut cfg = RunConfig::default();
            cfg.micromotion.velocity_mps = 0.0;
            cfg.drives.ir1.rabi_mhz = 0.1;
            cfg.drives.ir2.rabi_mhz = 0.1;
            cfg.atom.dephasing_ir_ir_mhz = 0.0;
            let tr: f64 = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(30.0);
            let wi: f64 = std::env::args().nth(3).map(|s| s.parse().unwrap()).unwrap_or(70.0);
            cfg.dynamics.transient_us = tr;
            cfg.dynamics.window_us = wi;
            let sc = cfg.scenario().unwrap();
            let t0 = Instant::now();
            match sweep_and_fit_dip(&sc, &SweepPlan::default(), &token) {
                Ok(d) => println!(
                    "weak dip: fwhm {:.6} MHz ({:.3} kHz) floor {:.3e} baseline {:.3e} ratio {:.2e} depth {:.5}",
                    to_mhz(d.fwhm), to_mhz(d.fwhm)*1e3, d.floor, d.baseline, d.floor/d.baseline, d.depth
                ),
                Err(e) => println!("weak: ERR {e}"),
            }
            eprintln!("took {:?}", t0.elapsed());
        }
        _ => {}
    }
}
