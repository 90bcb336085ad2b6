use rotodop::config::RunConfig;
use rotodop::spectra::*;
use rotodop::units::{to_mhz, um};

fn main() {
    let token = CancelToken::default();
    for (dir2, uv_q) in [(60.0, 36.0), (45.0, 36.0), (60.0, 28.0)] {
        let mut cfg = RunConfig::default();
        cfg.drives.uv.detuning_mhz = 0.0;
        cfg.drives.uv.rabi_mhz = uv_q;
        cfg.drives.ir1.detuning_mhz = dir2;
        cfg.drives.ir2.detuning_mhz = dir2;
        cfg.dynamics.transient_us = 15.0;
        cfg.dynamics.window_us = 25.0;
        cfg.dynamics.rel_tol = 1e-6;
        cfg.dynamics.abs_tol = 1e-9;
        let sc = cfg.scenario().unwrap();
        print!("dir2 {dir2} uv {uv_q}: ");
        for r in [40.0, 20.0, 10.0, 7.0, 5.0] {
            let scr = sc.with_ion_at(um(r), 0.0);
            match sweep_and_fit_dip(&scr, &SweepPlan::default(), &token) {
                Ok(d) => print!("r{r}: d={:.3} w={:.3}  ", d.depth, to_mhz(d.fwhm)),
                Err(_) => print!("r{r}: nofit  "),
            }
        }
        println!();
    }
}
