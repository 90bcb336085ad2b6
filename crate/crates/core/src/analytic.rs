//! Closed-form three-level model of the dark-resonance depth under
//! micromotion.
//!
//! Two stable levels are driven to one broad excited level with equal Rabi
//! frequencies and opposite Doppler modulation. In the symmetric /
//! antisymmetric basis of the stable levels the drive splits into even and
//! odd micromotion sidebands; weak-pumping rate equations then give the
//! excited population on and off the two-photon resonance, whose ratio is
//! the dip depth. For parameters like the experiment's the depth is well
//! approximated by a·J₀²(bβ) with b close to 2.

use serde::Serialize;
use thiserror::Error;

use crate::bessel::bessel_j_upto;
use crate::lm::{self, FitOptions};

/// Parameters of the reduced three-level system. All rates in rad/s.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct ThreeLevelParams {
    /// Rabi frequency Ω, equal on both arms.
    pub rabi: f64,
    /// Effective dephasing rate γ of the excited level against the stable
    /// pair (upper-state linewidth further broadened by the recycling
    /// drive).
    pub dephasing: f64,
    /// Depolarizing rate γ' exchanging the stable populations.
    pub depolarizing: f64,
    /// Decay rate Γ_D of the excited level into the stable manifold.
    pub decay_d: f64,
    /// Common detuning Δ at the two-photon resonance point.
    pub detuning: f64,
    /// Micromotion drive frequency Ω_RF.
    pub omega_rf: f64,
}

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("parameter {0} must be positive")]
    NonPositive(&'static str),
    #[error("depolarizing rate must be non-negative")]
    NegativeDepolarizing,
    #[error("azimuthal shift diverges at r = 0")]
    AxisSingularity,
    #[error("all pumping and depolarizing rates vanish; excited population undefined")]
    AllRatesZero,
    #[error("calibration fit failed: {0}")]
    Calibration(String),
}

impl ThreeLevelParams {
    pub fn validate(&self) -> Result<(), AnalyticError> {
        for (name, v) in [
            ("rabi", self.rabi),
            ("dephasing", self.dephasing),
            ("decay_d", self.decay_d),
            ("omega_rf", self.omega_rf),
        ] {
            if v <= 0.0 {
                return Err(AnalyticError::NonPositive(name));
            }
        }
        if self.depolarizing < 0.0 {
            return Err(AnalyticError::NegativeDepolarizing);
        }
        Ok(())
    }

    /// γ̃ = γ'γ/Ω², the noise-to-pumping ratio that sets the depth floor.
    /// Always derived, never stored.
    pub fn noise_ratio(&self) -> f64 {
        self.depolarizing * self.dephasing / (self.rabi * self.rabi)
    }

    /// Weak-pumping validity: the rate-equation reduction assumes Ω well
    /// below the decay to the stable manifold.
    pub fn weak_pump_ok(&self) -> bool {
        self.rabi <= self.decay_d / 5.0
    }

    /// Parameter set representative of the experiment: dephasing broadened
    /// to 2π×35 MHz by the recycling drive, detuning 2π×30 MHz, the trap
    /// drive at 2π×22.135 MHz, weak pumping, and a noise ratio of 1e-3.
    pub fn experiment_like() -> Self {
        let rabi = crate::units::mhz(0.8);
        let dephasing = crate::units::mhz(35.0);
        ThreeLevelParams {
            rabi,
            dephasing,
            depolarizing: 1e-3 * rabi * rabi / dephasing,
            decay_d: crate::units::mhz(8.0),
            detuning: crate::units::mhz(30.0),
            omega_rf: crate::units::mhz(22.135),
        }
    }
}

/// The J₀² shorthand d(β) ≈ a·J₀²(b·β), valid below `beta_max`.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct BesselApprox {
    /// Depth at β = 0.
    pub amplitude: f64,
    /// Horizontal scale factor, close to 2 in the experiment's regime.
    pub scale: f64,
    /// Validity bound of the one-Bessel approximation.
    pub beta_max: f64,
}

impl BesselApprox {
    pub fn new(amplitude: f64, scale: f64) -> Self {
        BesselApprox {
            amplitude,
            scale,
            beta_max: 1.25,
        }
    }

    pub fn valid_for(&self, beta: f64) -> bool {
        beta.abs() <= self.beta_max
    }
}

/// Micromotion modulation index β = δ_φ^max / Ω_RF, with the peak azimuthal
/// shift of a single beam (l·v_φ/r) or of the counter-rotating pair
/// (2l·v_φ/r).
pub fn micromotion_beta(
    winding: i32,
    r: f64,
    v_phi: f64,
    omega_rf: f64,
    two_beam: bool,
) -> Result<f64, AnalyticError> {
    if r <= 0.0 {
        return Err(AnalyticError::AxisSingularity);
    }
    if omega_rf <= 0.0 {
        return Err(AnalyticError::NonPositive("omega_rf"));
    }
    let factor = if two_beam { 2.0 } else { 1.0 };
    let delta_max = factor * winding as f64 * v_phi / r;
    Ok(delta_max / omega_rf)
}

/// Sideband truncation: smallest n with Σ_{|k|≤n} J_k²(β) > 1 - 1e-12,
/// capped at 60.
pub fn sideband_cutoff(beta: f64) -> usize {
    let j = bessel_j_upto(60, beta);
    let mut total = j[0] * j[0];
    if total > 1.0 - 1e-12 {
        return 0;
    }
    for n in 1..=60 {
        total += 2.0 * j[n] * j[n];
        if total > 1.0 - 1e-12 {
            return n;
        }
    }
    60
}

/// Pumping rates out of the symmetric (+, even sidebands) and antisymmetric
/// (-, odd sidebands) stable states:
/// γ± = (γ/2) Σ Ω_n²/(γ² + (Δ - nΩ_RF)²) with Ω_n = √2·Ω·J_n(β).
pub fn pump_rates(
    params: &ThreeLevelParams,
    beta: f64,
    n_max: Option<usize>,
) -> Result<(f64, f64), AnalyticError> {
    params.validate()?;
    let n_max = n_max.unwrap_or_else(|| sideband_cutoff(beta));
    let j = bessel_j_upto(n_max, beta);
    let gamma = params.dephasing;
    let mut even = 0.0;
    let mut odd = 0.0;
    for n in -(n_max as i32)..=(n_max as i32) {
        let jn = j[n.unsigned_abs() as usize]
            * if n < 0 && n % 2 != 0 { -1.0 } else { 1.0 };
        let omega_n_sq = 2.0 * params.rabi * params.rabi * jn * jn;
        let delta_n = params.detuning - n as f64 * params.omega_rf;
        let term = 0.5 * gamma * omega_n_sq / (gamma * gamma + delta_n * delta_n);
        if n % 2 == 0 {
            even += term;
        } else {
            odd += term;
        }
    }
    Ok((even, odd))
}

/// Weak-pumping steady excited population
/// p_e ≈ (2/Γ_D)·(γ⁺γ⁻ + γ'(γ⁺+γ⁻))/(γ⁺+γ⁻+4γ').
pub fn excited_population(
    params: &ThreeLevelParams,
    pump_plus: f64,
    pump_minus: f64,
) -> Result<f64, AnalyticError> {
    let total = pump_plus + pump_minus + 4.0 * params.depolarizing;
    if total == 0.0 {
        return Err(AnalyticError::AllRatesZero);
    }
    Ok(2.0 / params.decay_d
        * (pump_plus * pump_minus + params.depolarizing * (pump_plus + pump_minus))
        / total)
}

/// Even/odd sideband overlap sums
/// F± = Σ J_n²(β) / (1 + ((Δ - nΩ_RF)/γ)²).
fn sideband_overlaps(params: &ThreeLevelParams, beta: f64, n_max: usize) -> (f64, f64) {
    let j = bessel_j_upto(n_max, beta);
    let mut even = 0.0;
    let mut odd = 0.0;
    for n in -(n_max as i32)..=(n_max as i32) {
        let jn2 = {
            let v = j[n.unsigned_abs() as usize];
            v * v
        };
        let x = (params.detuning - n as f64 * params.omega_rf) / params.dephasing;
        let term = jn2 / (1.0 + x * x);
        if n % 2 == 0 {
            even += term;
        } else {
            odd += term;
        }
    }
    (even, odd)
}

/// Full sideband-resolved depth of the dark resonance:
/// d(β) = 1 - 4/(F₊+F₋) · (F₊F₋ + γ̃(F₊+F₋)) / (F₊+F₋+4γ̃).
pub fn dark_depth(
    params: &ThreeLevelParams,
    beta: f64,
    n_max: Option<usize>,
) -> Result<f64, AnalyticError> {
    params.validate()?;
    let n_max = n_max.unwrap_or_else(|| sideband_cutoff(beta));
    let (fp, fm) = sideband_overlaps(params, beta, n_max);
    let gt = params.noise_ratio();
    let total = fp + fm;
    Ok(1.0 - 4.0 / total * (fp * fm + gt * total) / (total + 4.0 * gt))
}

/// One-Bessel approximation d(β) ≈ a·J₀²(b·β). Callers should check
/// [`BesselApprox::valid_for`] above β ≈ 1.25.
pub fn dark_depth_j0(approx: &BesselApprox, beta: f64) -> f64 {
    let j0 = crate::bessel::bessel_j(0, approx.scale * beta);
    approx.amplitude * j0 * j0
}

/// Result of calibrating the J₀² shorthand against the full depth formula.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct CalibratedApprox {
    pub approx: BesselApprox,
    /// Largest |d_approx - d_full| over the calibration grid.
    pub max_residual: f64,
}

/// Least-squares calibration of (a, b) over a β grid, or of a alone when
/// `fixed_scale` pins b (the presentation in the experiment fixes b = 2).
pub fn calibrate_j0_approx(
    params: &ThreeLevelParams,
    betas: &[f64],
    fixed_scale: Option<f64>,
) -> Result<CalibratedApprox, AnalyticError> {
    params.validate()?;
    let depths: Vec<f64> = betas
        .iter()
        .map(|&b| dark_depth(params, b, None))
        .collect::<Result<_, _>>()?;
    let a0 = dark_depth(params, 0.0, None)?;

    let make = |p: &[f64]| match fixed_scale {
        Some(b) => BesselApprox::new(p[0], b),
        None => BesselApprox::new(p[0], p[1]),
    };
    let residual = |p: &[f64]| -> Result<Vec<f64>, String> {
        let approx = make(p);
        Ok(betas
            .iter()
            .zip(&depths)
            .map(|(&b, &d)| dark_depth_j0(&approx, b) - d)
            .collect())
    };
    let (seed, bounds): (Vec<f64>, lm::Bounds) = match fixed_scale {
        Some(_) => (vec![a0], vec![Some((0.0, 1.0))]),
        None => (vec![a0, 2.0], vec![Some((0.0, 1.0)), Some((0.05, 8.0))]),
    };
    let report = lm::fit(residual, &seed, &bounds, &FitOptions::default())
        .map_err(|e| AnalyticError::Calibration(e.to_string()))?;

    let approx = make(&report.params);
    let max_residual = betas
        .iter()
        .zip(&depths)
        .map(|(&b, &d)| (dark_depth_j0(&approx, b) - d).abs())
        .fold(0.0_f64, f64::max);
    Ok(CalibratedApprox {
        approx,
        max_residual,
    })
}
