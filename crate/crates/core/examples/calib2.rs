use rotodop::config::{DipChoice, RunConfig};
use rotodop::spectra::*;
use rotodop::units::{mhz, to_mhz};

fn main() {
    let token = CancelToken::default();
    let mut cfg = RunConfig::default();
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
    let center = predicted_dd_center(&sc, DipChoice::Lower).unwrap();
    // directly sweep +-6 kHz around the predicted center
    let half = mhz(0.006);
    let grid = linspace(center - half, center + half, 41);
    let spec = sweep_spectrum(&sc, &grid, &token).unwrap();
    for (d, f) in spec.detunings.iter().zip(&spec.fluorescence) {
        println!("{:+.4} kHz {:.6e}", to_mhz(*d - center) * 1e3, f);
    }
}
