//! Run configuration: the TOML schema with explicit units in field names,
//! conversion into an SI scenario, and config fingerprinting.
//!
//! Frequencies are accepted in MHz (and lengths in μm, durations in μs) and
//! converted once, here. Everything downstream works in rad/s and meters.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::atom::{
    build_level_structure, AtomError, DecayRates, DephasingRates, GFactors, LevelStructure,
    Polarization,
};
use crate::beams::{kinematics_from_cartesian, doppler_shift, BeamError, BeamGeometry};
use crate::dynamics::{DriveClock, DynamicsError, EvolveOptions, LaserDrive, LaserLabel};
use crate::units::{mhz, um, us};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid atom section: {0}")]
    Atom(#[from] AtomError),
    #[error("invalid geometry: {0}")]
    Beam(#[from] BeamError),
    #[error("invalid drives: {0}")]
    Drives(#[from] DynamicsError),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn default_g_s() -> f64 {
    2.0
}
fn default_g_d() -> f64 {
    0.8
}
fn default_g_p() -> f64 {
    2.0 / 3.0
}
fn default_gamma_ps() -> f64 {
    21.57
}
fn default_gamma_pd() -> f64 {
    1.35
}
fn default_dephasing_uv_ir() -> f64 {
    0.1
}

/// Atom section: field, g-factors and rates, MHz units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub b_field_gauss: f64,
    #[serde(default = "default_g_s")]
    pub g_s: f64,
    #[serde(default = "default_g_d")]
    pub g_d: f64,
    #[serde(default = "default_g_p")]
    pub g_p: f64,
    #[serde(default = "default_gamma_ps")]
    pub gamma_ps_mhz: f64,
    #[serde(default = "default_gamma_pd")]
    pub gamma_pd_mhz: f64,
    #[serde(default = "default_dephasing_uv_ir")]
    pub dephasing_uv_ir_mhz: f64,
    #[serde(default)]
    pub dephasing_ir_ir_mhz: f64,
    #[serde(default)]
    pub depolarizing_d_mhz: f64,
}

impl Default for AtomConfig {
    fn default() -> Self {
        AtomConfig {
            b_field_gauss: 4.0,
            g_s: default_g_s(),
            g_d: default_g_d(),
            g_p: default_g_p(),
            gamma_ps_mhz: default_gamma_ps(),
            gamma_pd_mhz: default_gamma_pd(),
            dephasing_uv_ir_mhz: default_dephasing_uv_ir(),
            dephasing_ir_ir_mhz: 0.0,
            depolarizing_d_mhz: 0.0,
        }
    }
}

/// One vortex beam, μm and nm units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrBeamConfig {
    #[serde(default = "default_ir_wavelength")]
    pub wavelength_nm: f64,
    pub waist_um: f64,
    pub winding: i32,
    #[serde(default)]
    pub radial: u32,
    #[serde(default)]
    pub center_offset_um: [f64; 2],
}

fn default_ir_wavelength() -> f64 {
    866.0
}
fn default_uv_wavelength() -> f64 {
    397.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UvBeamConfig {
    #[serde(default = "default_uv_wavelength")]
    pub wavelength_nm: f64,
}

impl Default for UvBeamConfig {
    fn default() -> Self {
        UvBeamConfig {
            wavelength_nm: default_uv_wavelength(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamsConfig {
    #[serde(default)]
    pub uv: UvBeamConfig,
    pub ir1: IrBeamConfig,
    pub ir2: IrBeamConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub detuning_mhz: f64,
    pub rabi_mhz: f64,
    /// Relative phase of the σ₋ against the σ₊ component, rad.
    #[serde(default)]
    pub sigma_phase_rad: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivesConfig {
    pub uv: DriveConfig,
    pub ir1: DriveConfig,
    pub ir2: DriveConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicromotionConfig {
    pub velocity_mps: f64,
    /// Direction of the (transverse) micromotion in the x-y plane, degrees.
    #[serde(default = "default_direction")]
    pub direction_deg: f64,
    #[serde(default = "default_rf")]
    pub rf_mhz: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

fn default_direction() -> f64 {
    90.0
}
fn default_rf() -> f64 {
    22.135
}

/// Ion position relative to the common beam frame, polar in the transverse
/// plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IonConfig {
    pub r_um: f64,
    pub phi_deg: f64,
    pub z_um: f64,
}

impl Default for IonConfig {
    fn default() -> Self {
        IonConfig {
            r_um: 27.0,
            phi_deg: 0.0,
            z_um: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub transient_us: f64,
    pub window_us: f64,
    pub max_step_rf_fraction: f64,
    pub check_positivity: bool,
    pub snap_window: bool,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            transient_us: 30.0,
            window_us: 70.0,
            max_step_rf_fraction: 1.0 / 20.0,
            check_positivity: false,
            snap_window: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub points: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            start_mhz: -45.0,
            stop_mhz: 45.0,
            points: 81,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanModeConfig {
    Counter,
    Co,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DipChoice {
    /// The D-D dip at the lower IR1 detuning.
    Lower,
    /// The D-D dip at the higher IR1 detuning.
    Upper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub r_values_um: Vec<f64>,
    pub phi_values_deg: Vec<f64>,
    pub waists_um: [f64; 2],
    pub mode: ScanModeConfig,
    pub equal_rabi: bool,
    pub dip: DipChoice,
    pub prescan_points: usize,
    pub final_points: usize,
    pub r_min_um: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            r_values_um: vec![5.0, 7.5, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0],
            phi_values_deg: (0..12).map(|i| i as f64 * 30.0).collect(),
            waists_um: [15.0, 27.0],
            mode: ScanModeConfig::Counter,
            equal_rabi: true,
            dip: DipChoice::Lower,
            prescan_points: 21,
            final_points: 81,
            r_min_um: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub rabi_bounds_mhz: [f64; 2],
    pub dephasing_bounds_mhz: [f64; 2],
    pub velocity_bounds_mps: [f64; 2],
    pub velocity_grid_mps: Vec<f64>,
    pub percentile: f64,
    pub eval_budget: usize,
    /// Shorter integration for the expensive full-model residuals.
    pub depth_transient_us: f64,
    pub depth_window_us: f64,
    pub depth_rel_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            rabi_bounds_mhz: [1.0, 20.0],
            dephasing_bounds_mhz: [0.0, 0.1],
            velocity_bounds_mps: [0.0, 500.0],
            velocity_grid_mps: vec![100.0, 125.0, 150.0, 175.0, 200.0, 225.0, 250.0],
            percentile: 0.90,
            eval_budget: 600,
            depth_transient_us: 10.0,
            depth_window_us: 20.0,
            depth_rel_tol: 1e-6,
        }
    }
}

/// Three-level depth-model parameters for the analytic command, MHz units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyticConfig {
    pub rabi_mhz: f64,
    pub dephasing_mhz: f64,
    pub noise_ratio: f64,
    pub decay_d_mhz: f64,
    pub detuning_mhz: f64,
    pub beta_max: f64,
    pub beta_points: usize,
    /// Fix the horizontal scale b of the J0 shorthand; free when absent.
    pub fixed_scale: Option<f64>,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        AnalyticConfig {
            rabi_mhz: 0.8,
            dephasing_mhz: 35.0,
            noise_ratio: 1e-3,
            decay_d_mhz: 8.0,
            detuning_mhz: 30.0,
            beta_max: 1.25,
            beta_points: 26,
            fixed_scale: None,
        }
    }
}

impl AnalyticConfig {
    pub fn params(&self, omega_rf: f64) -> crate::analytic::ThreeLevelParams {
        let rabi = mhz(self.rabi_mhz);
        let dephasing = mhz(self.dephasing_mhz);
        crate::analytic::ThreeLevelParams {
            rabi,
            dephasing,
            depolarizing: self.noise_ratio * rabi * rabi / dephasing,
            decay_d: mhz(self.decay_d_mhz),
            detuning: mhz(self.detuning_mhz),
            omega_rf,
        }
    }
}

/// Synthetic-noise knobs for fit robustness tests; zero by default so
/// simulated spectra stay deterministic and noise free.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub background: f64,
    pub sigma_rel: f64,
}

/// Full run configuration as parsed from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub atom: AtomConfig,
    pub beams: BeamsConfig,
    pub drives: DrivesConfig,
    pub micromotion: MicromotionConfig,
    #[serde(default)]
    pub ion: IonConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub analytic: AnalyticConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
}

fn default_seed() -> u64 {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: default_seed(),
            atom: AtomConfig::default(),
            beams: BeamsConfig {
                uv: UvBeamConfig::default(),
                ir1: IrBeamConfig {
                    wavelength_nm: 866.0,
                    waist_um: 27.0,
                    winding: 2,
                    radial: 0,
                    center_offset_um: [0.0, 0.0],
                },
                ir2: IrBeamConfig {
                    wavelength_nm: 866.0,
                    waist_um: 27.0,
                    winding: -2,
                    radial: 0,
                    center_offset_um: [0.0, 0.0],
                },
            },
            drives: DrivesConfig {
                uv: DriveConfig {
                    detuning_mhz: -20.0,
                    rabi_mhz: 6.0,
                    sigma_phase_rad: 0.0,
                },
                ir1: DriveConfig {
                    detuning_mhz: 30.0,
                    rabi_mhz: 8.0,
                    sigma_phase_rad: 0.0,
                },
                ir2: DriveConfig {
                    detuning_mhz: 30.0,
                    rabi_mhz: 8.0,
                    sigma_phase_rad: 0.0,
                },
            },
            micromotion: MicromotionConfig {
                velocity_mps: 175.0,
                direction_deg: default_direction(),
                rf_mhz: default_rf(),
                phase_rad: 0.0,
            },
            ion: IonConfig::default(),
            dynamics: DynamicsConfig::default(),
            spectrum: SpectrumConfig::default(),
            scan: ScanConfig::default(),
            fit: FitConfig::default(),
            analytic: AnalyticConfig::default(),
            noise: NoiseConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Short hash over the canonical serialized form; embedded in every
    /// output file so results can be traced back to their configuration.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut out = String::with_capacity(16);
        for b in digest.iter().take(8) {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        Scenario::from_config(self)
    }
}

/// Everything the simulation needs, in SI units.
#[derive(Clone, Debug, Serialize)]
pub struct Scenario {
    pub structure: LevelStructure,
    pub uv_beam: BeamGeometry,
    pub ir1_beam: BeamGeometry,
    pub ir2_beam: BeamGeometry,
    pub uv: DriveSettings,
    pub ir1: DriveSettings,
    pub ir2: DriveSettings,
    pub micromotion: Micromotion,
    /// Ion position in the common transverse frame, m.
    pub ion_position: (f64, f64, f64),
    pub evolve: EvolveOptions,
    pub fingerprint: String,
}

#[derive(Copy, Clone, Debug, Serialize)]
pub struct DriveSettings {
    pub detuning: f64,
    pub rabi: f64,
    pub sigma_phase: f64,
}

#[derive(Copy, Clone, Debug, Serialize)]
pub struct Micromotion {
    /// Velocity amplitude, m/s.
    pub speed: f64,
    /// Transverse direction, rad.
    pub direction: f64,
    pub omega_rf: f64,
    pub phase: f64,
}

impl Micromotion {
    pub fn velocity(&self) -> (f64, f64, f64) {
        (
            self.speed * self.direction.cos(),
            self.speed * self.direction.sin(),
            0.0,
        )
    }
}

impl Scenario {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, ConfigError> {
        if cfg.micromotion.rf_mhz <= 0.0 {
            return Err(ConfigError::Invalid(
                "micromotion.rf_mhz must be positive".into(),
            ));
        }
        if cfg.micromotion.velocity_mps < 0.0 {
            return Err(ConfigError::Invalid(
                "micromotion.velocity_mps must be non-negative".into(),
            ));
        }
        let structure = build_level_structure(
            cfg.atom.b_field_gauss,
            GFactors {
                g_s: cfg.atom.g_s,
                g_d: cfg.atom.g_d,
                g_p: cfg.atom.g_p,
            },
            DecayRates {
                gamma_ps: mhz(cfg.atom.gamma_ps_mhz),
                gamma_pd: mhz(cfg.atom.gamma_pd_mhz),
            },
            DephasingRates {
                uv_ir: mhz(cfg.atom.dephasing_uv_ir_mhz),
                ir_ir: mhz(cfg.atom.dephasing_ir_ir_mhz),
            },
            mhz(cfg.atom.depolarizing_d_mhz),
        )?;
        let ir_beam = |b: &IrBeamConfig| {
            BeamGeometry::laguerre_gauss(
                b.wavelength_nm * 1e-9,
                um(b.waist_um),
                b.winding,
                b.radial,
                (um(b.center_offset_um[0]), um(b.center_offset_um[1])),
            )
        };
        let drive = |d: &DriveConfig| DriveSettings {
            detuning: mhz(d.detuning_mhz),
            rabi: mhz(d.rabi_mhz),
            sigma_phase: d.sigma_phase_rad,
        };
        let phi = cfg.ion.phi_deg.to_radians();
        let evolve = EvolveOptions {
            rel_tol: cfg.dynamics.rel_tol,
            abs_tol: cfg.dynamics.abs_tol,
            transient: us(cfg.dynamics.transient_us),
            window: us(cfg.dynamics.window_us),
            max_step_rf_fraction: cfg.dynamics.max_step_rf_fraction,
            check_positivity: cfg.dynamics.check_positivity,
            snap_window: cfg.dynamics.snap_window,
            ..Default::default()
        };
        Ok(Scenario {
            structure,
            uv_beam: BeamGeometry::plane_wave(cfg.beams.uv.wavelength_nm * 1e-9),
            ir1_beam: ir_beam(&cfg.beams.ir1),
            ir2_beam: ir_beam(&cfg.beams.ir2),
            uv: drive(&cfg.drives.uv),
            ir1: drive(&cfg.drives.ir1),
            ir2: drive(&cfg.drives.ir2),
            micromotion: Micromotion {
                speed: cfg.micromotion.velocity_mps,
                direction: cfg.micromotion.direction_deg.to_radians(),
                omega_rf: mhz(cfg.micromotion.rf_mhz),
                phase: cfg.micromotion.phase_rad,
            },
            ion_position: (
                um(cfg.ion.r_um) * phi.cos(),
                um(cfg.ion.r_um) * phi.sin(),
                um(cfg.ion.z_um),
            ),
            evolve,
            fingerprint: cfg.fingerprint(),
        })
    }

    /// Build the three drives with their micromotion modulation depths
    /// evaluated at the current ion position.
    pub fn drives(&self) -> Result<Vec<LaserDrive>, BeamError> {
        let v = self.micromotion.velocity();
        let fm = |beam: &BeamGeometry| -> Result<f64, BeamError> {
            if self.micromotion.speed == 0.0 {
                return Ok(0.0);
            }
            let kin = kinematics_from_cartesian(beam, self.ion_position, v);
            doppler_shift(beam, &kin)
        };
        let mk = |label, settings: &DriveSettings, beam: &BeamGeometry, pol| -> Result<LaserDrive, BeamError> {
            Ok(LaserDrive {
                label,
                detuning: settings.detuning,
                rabi: settings.rabi,
                polarization: pol,
                beam: *beam,
                fm_amplitude: fm(beam)?,
                fm_phase: self.micromotion.phase,
                relative_sigma_phase: settings.sigma_phase,
            })
        };
        Ok(vec![
            mk(LaserLabel::Uv, &self.uv, &self.uv_beam, Polarization::SigmaPlusMinus)?,
            mk(LaserLabel::Ir1, &self.ir1, &self.ir1_beam, Polarization::Pi)?,
            mk(LaserLabel::Ir2, &self.ir2, &self.ir2_beam, Polarization::SigmaPlusMinus)?,
        ])
    }

    pub fn clock(&self, drives: &[LaserDrive]) -> Result<DriveClock, DynamicsError> {
        DriveClock::from_drives(self.micromotion.omega_rf, drives)
    }

    pub fn with_ir1_detuning(&self, detuning: f64) -> Self {
        let mut s = self.clone();
        s.ir1.detuning = detuning;
        s
    }

    /// Move the ion to transverse polar position (r, φ).
    pub fn with_ion_at(&self, r: f64, phi: f64) -> Self {
        let mut s = self.clone();
        s.ion_position = (r * phi.cos(), r * phi.sin(), s.ion_position.2);
        s
    }

    /// Set the two IR windings to (l, l) or (l, -l).
    pub fn with_counter_rotating(&self, counter: bool) -> Self {
        let mut s = self.clone();
        let l = s.ir1_beam.winding;
        s.ir2_beam.winding = if counter { -l } else { l };
        s
    }

    /// Replace both IR waists, keeping the Rayleigh ranges consistent.
    pub fn with_waist(&self, waist: f64) -> Self {
        let mut s = self.clone();
        for beam in [&mut s.ir1_beam, &mut s.ir2_beam] {
            *beam = BeamGeometry::laguerre_gauss(
                std::f64::consts::TAU / beam.k,
                waist,
                beam.winding,
                beam.radial,
                beam.center_offset,
            );
        }
        s
    }

    /// Scale both IR Rabi frequencies (power rescaling).
    pub fn with_ir_rabi_scale(&self, factor: f64) -> Self {
        let mut s = self.clone();
        s.ir1.rabi *= factor;
        s.ir2.rabi *= factor;
        s
    }

    /// Turn the micromotion off.
    pub fn without_motion(&self) -> Self {
        let mut s = self.clone();
        s.micromotion.speed = 0.0;
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_roundtrip_and_fingerprint() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.fingerprint(), back.fingerprint());
        assert_eq!(cfg.fingerprint().len(), 16);
        // any physical change moves the fingerprint
        let mut other = cfg.clone();
        other.drives.ir1.detuning_mhz += 0.001;
        assert_ne!(cfg.fingerprint(), other.fingerprint());
    }

    #[test]
    fn missing_section_is_an_error_naming_it() {
        let err = RunConfig::from_toml("[atom]\nb_field_gauss = 4.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("beams"), "{msg}");
    }

    #[test]
    fn scenario_micromotion_shifts() {
        let cfg = RunConfig::default(); // ion at r = 27 um on the x axis,
                                        // micromotion along y: purely azimuthal
        let sc = cfg.scenario().unwrap();
        let drives = sc.drives().unwrap();
        let uv = &drives[0];
        let ir1 = &drives[1];
        let ir2 = &drives[2];
        // transverse motion gives no plane-wave UV shift
        assert_eq!(uv.fm_amplitude, 0.0);
        // counter-rotating windings: opposite azimuthal shifts
        assert!((ir1.fm_amplitude + ir2.fm_amplitude).abs() < 1e-9);
        let expect = -(2.0 / 27.0e-6) * 175.0;
        assert!((ir1.fm_amplitude - expect).abs() / expect.abs() < 1e-12);
        let clock = sc.clock(&drives).unwrap();
        assert_eq!(clock.beat, 0.0);
    }

    #[test]
    fn scenario_edits() {
        let sc = RunConfig::default().scenario().unwrap();
        let co = sc.with_counter_rotating(false);
        assert_eq!(co.ir2_beam.winding, co.ir1_beam.winding);
        let d = co.drives().unwrap();
        assert_eq!(d[1].fm_amplitude, d[2].fm_amplitude);

        let moved = sc.with_ion_at(um(10.0), 0.0);
        let d = moved.drives().unwrap();
        let expect = -(2.0 / 10.0e-6) * 175.0;
        assert!((d[1].fm_amplitude - expect).abs() / expect.abs() < 1e-12);

        let wide = sc.with_waist(um(15.0));
        assert!((wide.ir1_beam.waist - 15e-6).abs() < 1e-18);
        assert!((wide.ir1_beam.rayleigh - wide.ir1_beam.k * 15e-6 * 15e-6 / 2.0).abs() < 1e-12);

        let still = sc.without_motion();
        let d = still.drives().unwrap();
        assert_eq!(d[1].fm_amplitude, 0.0);
    }
}
