use rotodop::config::RunConfig;
use rotodop::dynamics::*;
use rotodop::units::{mhz, us};

fn main() {
    let mut cfg = RunConfig::default();
    cfg.micromotion.velocity_mps = 0.0;
    cfg.drives.ir1.rabi_mhz = 0.1;
    cfg.drives.ir2.rabi_mhz = 0.1;
    cfg.drives.ir2.detuning_mhz = 0.0;
    cfg.drives.uv.rabi_mhz = 4.0;
    cfg.dynamics.rel_tol = 1e-6;
    cfg.dynamics.abs_tol = 1e-9;
    let sc0 = cfg.scenario().unwrap();
    let center = rotodop::spectra::predicted_dd_center(&sc0, rotodop::config::DipChoice::Lower).unwrap();

    let probe = |name: &str, delta: f64, t_tr: f64, t_w: f64| {
        let sc = sc0.with_ir1_detuning(delta);
        let drives = sc.drives().unwrap();
        let clock = sc.clock(&drives).unwrap();
        let opts = EvolveOptions {
            transient: us(t_tr),
            window: us(t_w),
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            ..sc.evolve
        };
        let t0 = std::time::Instant::now();
        let r = evolve(&DensityState::pure(0), &sc.structure, &drives, &clock, &opts).unwrap();
        println!(
            "{name} T={t_tr}us: fluor {:.4e}  ({:?})",
            fluorescence(&r.populations),
            t0.elapsed()
        );
    };
    probe("base", center + mhz(0.5), 100.0, 50.0);
    for t in [200.0, 400.0, 800.0, 1600.0] {
        probe("center", center, t, 100.0);
    }
}
