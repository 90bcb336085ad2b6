use rotodop::atom::*;
use rotodop::beams::BeamGeometry;
use rotodop::dynamics::*;
use rotodop::units::mhz;
use std::time::Instant;

fn main() {
    let s = build_level_structure(
        4.0,
        GFactors::default(),
        DecayRates { gamma_ps: mhz(21.57), gamma_pd: mhz(1.35) },
        DephasingRates { uv_ir: mhz(0.1), ir_ir: 0.0 },
        0.0,
    )
    .unwrap();
    let fm = mhz(5.57); // l=2, r=10um, v=175 single-beam shift
    let drives = vec![
        LaserDrive {
            label: LaserLabel::Uv,
            detuning: mhz(-20.0),
            rabi: mhz(8.0),
            polarization: Polarization::SigmaPlusMinus,
            beam: BeamGeometry::plane_wave(397e-9),
            fm_amplitude: 0.0,
            fm_phase: 0.0,
            relative_sigma_phase: 0.0,
        },
        LaserDrive {
            label: LaserLabel::Ir1,
            detuning: mhz(25.5),
            rabi: mhz(8.0),
            polarization: Polarization::Pi,
            beam: BeamGeometry::laguerre_gauss(866e-9, 27e-6, 2, 0, (0.0, 0.0)),
            fm_amplitude: -fm,
            fm_phase: 0.0,
            relative_sigma_phase: 0.0,
        },
        LaserDrive {
            label: LaserLabel::Ir2,
            detuning: mhz(30.0),
            rabi: mhz(8.0),
            polarization: Polarization::SigmaPlusMinus,
            beam: BeamGeometry::laguerre_gauss(866e-9, 27e-6, -2, 0, (0.0, 0.0)),
            fm_amplitude: fm,
            fm_phase: 0.0,
            relative_sigma_phase: 0.0,
        },
    ];
    let clock = DriveClock::from_drives(mhz(22.135), &drives).unwrap();
    let opts = EvolveOptions::default(); // 30 + 70 us
    let t0 = Instant::now();
    let r = evolve(&DensityState::pure(0), &s, &drives, &clock, &opts).unwrap();
    let dt = t0.elapsed();
    println!(
        "evolve 100us: {:?}, steps {} (+{} rej), rhs {}, fluor {:.6}, trace_dev {:.2e}, herm_dev {:.2e}",
        dt,
        r.summary.steps_accepted,
        r.summary.steps_rejected,
        r.summary.rhs_evals,
        fluorescence(&r.populations),
        r.summary.max_trace_deviation,
        r.summary.max_hermiticity_deviation
    );
}
