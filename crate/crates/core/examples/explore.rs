use rotodop::config::{DipChoice, RunConfig};
use rotodop::spectra::*;
use rotodop::units::{mhz, to_mhz, um};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let what = args.get(1).map(|s| s.as_str()).unwrap_or("spectrum");
    let token = CancelToken::default();

    match what {
        "spectrum" => {
            // full geography with micromotion off, reduced durations
            let mut cfg = RunConfig::default();
            cfg.micromotion.velocity_mps = 0.0;
            cfg.dynamics.transient_us = 20.0;
            cfg.dynamics.window_us = 30.0;
            let sc = cfg.scenario().unwrap();
            let grid = linspace(mhz(-40.0), mhz(45.0), 120);
            let t0 = Instant::now();
            let spec = sweep_spectrum(&sc, &grid, &token).unwrap();
            eprintln!("sweep took {:?}", t0.elapsed());
            for (d, f) in spec.detunings.iter().zip(&spec.fluorescence) {
                println!("{:.3} {:.6}", to_mhz(*d), f);
            }
        }
        "dip" => {
            // locate and fit the lower DD dip, no micromotion
            let mut cfg = RunConfig::default();
            cfg.micromotion.velocity_mps = 0.0;
            cfg.dynamics.transient_us = 20.0;
            cfg.dynamics.window_us = 40.0;
            if let Some(uv) = args.get(2) { cfg.drives.uv.rabi_mhz = uv.parse().unwrap(); }
            if let Some(ir) = args.get(3) {
                cfg.drives.ir1.rabi_mhz = ir.parse().unwrap();
                cfg.drives.ir2.rabi_mhz = ir.parse().unwrap();
            }
            let sc = cfg.scenario().unwrap();
            let t0 = Instant::now();
            let dip = sweep_and_fit_dip(&sc, &SweepPlan::default(), &token).unwrap();
            eprintln!("took {:?}", t0.elapsed());
            println!(
                "center {:.4} MHz (pred {:.4}), fwhm {:.4} MHz, baseline {:.5}, floor {:.5}, depth {:.4} +- {:.4}",
                to_mhz(dip.center),
                to_mhz(predicted_dd_center(&sc, DipChoice::Lower).unwrap()),
                to_mhz(dip.fwhm),
                dip.baseline,
                dip.floor,
                dip.depth,
                dip.depth_err
            );
        }
        "betadip" => {
            // depth vs r with micromotion, counter-rotating
            let mut cfg = RunConfig::default();
            cfg.dynamics.transient_us = 20.0;
            cfg.dynamics.window_us = 40.0;
            cfg.dynamics.rel_tol = 1e-7;
            cfg.dynamics.abs_tol = 1e-9;
            let sc = cfg.scenario().unwrap();
            for r_um_v in [40.0, 25.0, 15.0, 10.0, 7.0, 5.0] {
                let sc_r = sc.with_ion_at(um(r_um_v), 0.0);
                let t0 = Instant::now();
                match sweep_and_fit_dip(&sc_r, &SweepPlan::default(), &token) {
                    Ok(dip) => println!(
                        "r = {:5.1} um: depth {:.4} fwhm {:.4} MHz center {:.4} ({:?})",
                        r_um_v, dip.depth, to_mhz(dip.fwhm), to_mhz(dip.center), t0.elapsed()
                    ),
                    Err(e) => println!("r = {r_um_v}: ERR {e}"),
                }
            }
        }
        _ => eprintln!("unknown"),
    }
}
