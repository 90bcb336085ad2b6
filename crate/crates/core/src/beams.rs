//! Laguerre-Gaussian beam geometry, intensity profiles and Doppler shifts.
//!
//! The Doppler shift seen by a moving emitter is the negative directional
//! derivative of the beam's phase along the velocity, δ = -∇Φ·v. For a
//! paraxial LG mode the phase is
//!
//! ```text
//! Φ(r, φ, z) = k z + k r² z / (2 (z² + z_R²)) - (2p + |l| + 1) atan(z / z_R) + l φ
//! ```
//!
//! which yields the plane-wave, wavefront-curvature, Gouy, radial and
//! azimuthal contributions. The azimuthal term -(l/r)·v_φ depends only on
//! the winding number and the angular velocity, so it is invariant under
//! changes of waist and wavelength.

use serde::Serialize;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum BeamMode {
    PlaneWave,
    LaguerreGauss,
}

/// Geometry of one beam propagating along +z.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct BeamGeometry {
    pub mode: BeamMode,
    /// Wavenumber 2π/λ, rad/m.
    pub k: f64,
    /// Waist ω₀, m. Ignored for plane waves.
    pub waist: f64,
    /// Winding number l (signed). Ignored for plane waves.
    pub winding: i32,
    /// Radial mode number p. Ignored for plane waves.
    pub radial: u32,
    /// Rayleigh range z_R = k ω₀² / 2, m. Fixed by construction.
    pub rayleigh: f64,
    /// Transverse displacement (x₀, y₀) of the beam axis from the ion
    /// equilibrium position, m.
    pub center_offset: (f64, f64),
}

impl BeamGeometry {
    pub fn laguerre_gauss(
        wavelength: f64,
        waist: f64,
        winding: i32,
        radial: u32,
        center_offset: (f64, f64),
    ) -> Self {
        let k = TAU / wavelength;
        BeamGeometry {
            mode: BeamMode::LaguerreGauss,
            k,
            waist,
            winding,
            radial,
            rayleigh: k * waist * waist / 2.0,
            center_offset,
        }
    }

    pub fn plane_wave(wavelength: f64) -> Self {
        let k = TAU / wavelength;
        BeamGeometry {
            mode: BeamMode::PlaneWave,
            k,
            waist: 0.0,
            winding: 0,
            radial: 0,
            rayleigh: f64::INFINITY,
            center_offset: (0.0, 0.0),
        }
    }

    /// 1/e² intensity radius at axial position z.
    pub fn spot_radius(&self, z: f64) -> f64 {
        self.waist * (1.0 + (z / self.rayleigh).powi(2)).sqrt()
    }
}

/// Ion position and velocity expressed in the cylindrical frame of one beam.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct CylindricalKinematics {
    pub r: f64,
    pub phi: f64,
    pub z: f64,
    pub v_r: f64,
    pub v_phi: f64,
    pub v_z: f64,
    /// Set when the ion sits on the beam axis with nonzero transverse
    /// velocity; the azimuthal projection is then ill-defined.
    pub axis_singular: bool,
}

#[derive(Debug, Error)]
pub enum BeamError {
    #[error("operation requires a Laguerre-Gauss beam")]
    NotLaguerreGauss,
    #[error("azimuthal Doppler term diverges on the beam axis (r = 0, v_phi = {v_phi} m/s)")]
    AxisSingularity { v_phi: f64 },
    #[error("intensity profile implemented for p = 0 only, got p = {0}")]
    RadialModeUnsupported(u32),
    #[error("intensity ratio must lie in (0, 1], got {0}")]
    InvalidIntensityRatio(f64),
    #[error("sensitivity scaling undefined for l = 0")]
    ZeroWinding,
}

/// Project Cartesian position and velocity onto the beam's cylindrical
/// frame. Position is measured from the beam axis (ion position minus the
/// beam's center offset).
pub fn kinematics_from_cartesian(
    beam: &BeamGeometry,
    ion_position: (f64, f64, f64),
    velocity: (f64, f64, f64),
) -> CylindricalKinematics {
    let dx = ion_position.0 - beam.center_offset.0;
    let dy = ion_position.1 - beam.center_offset.1;
    let (vx, vy, vz) = velocity;
    let r = dx.hypot(dy);
    if r == 0.0 {
        return CylindricalKinematics {
            r: 0.0,
            phi: 0.0,
            z: ion_position.2,
            v_r: vx,
            v_phi: vy,
            v_z: vz,
            axis_singular: vx != 0.0 || vy != 0.0,
        };
    }
    let phi = dy.atan2(dx);
    CylindricalKinematics {
        r,
        phi,
        z: ion_position.2,
        v_r: (vx * dx + vy * dy) / r,
        v_phi: (-vx * dy + vy * dx) / r,
        v_z: vz,
        axis_singular: false,
    }
}

/// Phase of the beam at cylindrical position (r, φ, z), rad.
pub fn lg_phase(beam: &BeamGeometry, r: f64, phi: f64, z: f64) -> f64 {
    match beam.mode {
        BeamMode::PlaneWave => beam.k * z,
        BeamMode::LaguerreGauss => {
            let zr2 = z * z + beam.rayleigh * beam.rayleigh;
            let gouy_order = (2 * beam.radial as i32 + beam.winding.abs() + 1) as f64;
            beam.k * z + beam.k * r * r * z / (2.0 * zr2)
                - gouy_order * (z / beam.rayleigh).atan()
                + beam.winding as f64 * phi
        }
    }
}

/// Full Doppler shift -∇Φ·v of a Laguerre-Gauss beam, rad/s.
///
/// Contains the plane-wave, wavefront-curvature and Gouy longitudinal
/// terms, the radial curvature term, and the azimuthal term -(l/r)·v_φ.
pub fn lg_doppler_shift(
    beam: &BeamGeometry,
    kin: &CylindricalKinematics,
) -> Result<f64, BeamError> {
    if beam.mode != BeamMode::LaguerreGauss {
        return Err(BeamError::NotLaguerreGauss);
    }
    if kin.r == 0.0 && kin.v_phi != 0.0 {
        return Err(BeamError::AxisSingularity { v_phi: kin.v_phi });
    }
    let (r, z) = (kin.r, kin.z);
    let zr2 = z * z + beam.rayleigh * beam.rayleigh;
    let gouy_order = (2 * beam.radial as i32 + beam.winding.abs() + 1) as f64;

    let dphase_dz = beam.k
        + 0.5 * beam.k * r * r * (beam.rayleigh * beam.rayleigh - z * z) / (zr2 * zr2)
        - gouy_order * beam.rayleigh / zr2;
    let dphase_dr = beam.k * r * z / zr2;
    let azimuthal = if kin.v_phi == 0.0 {
        0.0
    } else {
        (beam.winding as f64 / r) * kin.v_phi
    };
    Ok(-(dphase_dz * kin.v_z + dphase_dr * kin.v_r + azimuthal))
}

/// Doppler shift for either beam mode; a plane wave gives -k·v_z.
pub fn doppler_shift(beam: &BeamGeometry, kin: &CylindricalKinematics) -> Result<f64, BeamError> {
    match beam.mode {
        BeamMode::PlaneWave => Ok(-beam.k * kin.v_z),
        BeamMode::LaguerreGauss => lg_doppler_shift(beam, kin),
    }
}

/// Difference of the two beams' Doppler shifts, the modulation entering the
/// two-photon D-D resonance. For perfectly overlapped counter-rotating
/// beams everything but the azimuthal terms cancels and the magnitude is
/// 2|l| v_φ / r.
pub fn relative_two_beam_shift(
    beam1: &BeamGeometry,
    beam2: &BeamGeometry,
    kin1: &CylindricalKinematics,
    kin2: &CylindricalKinematics,
) -> Result<f64, BeamError> {
    Ok(lg_doppler_shift(beam1, kin1)? - lg_doppler_shift(beam2, kin2)?)
}

/// Relative intensity I(r, z)/I_peak of a p = 0 LG mode, normalized to 1 at
/// the radial maximum r_max = ω(z)·√(|l|/2) (at r = 0 for l = 0).
pub fn lg_intensity(beam: &BeamGeometry, r: f64, z: f64) -> Result<f64, BeamError> {
    if beam.mode != BeamMode::LaguerreGauss {
        return Err(BeamError::NotLaguerreGauss);
    }
    if beam.radial != 0 {
        return Err(BeamError::RadialModeUnsupported(beam.radial));
    }
    let w = beam.spot_radius(z);
    let l = beam.winding.unsigned_abs() as f64;
    let u = (r * std::f64::consts::SQRT_2 / w).powf(2.0 * l) * (-2.0 * r * r / (w * w)).exp();
    let peak = if beam.winding == 0 {
        1.0
    } else {
        l.powf(l) * (-l).exp()
    };
    Ok(u / peak)
}

/// Relative sensitivity (I₀/I)^(1/(2|l|)) · 2l of the azimuthal shift at
/// fixed local intensity. Ratios between calls are meaningful; the absolute
/// scale is arbitrary.
pub fn sensitivity_scaling(winding: i32, intensity_ratio: f64) -> Result<f64, BeamError> {
    if winding == 0 {
        return Err(BeamError::ZeroWinding);
    }
    if !(intensity_ratio > 0.0 && intensity_ratio <= 1.0) {
        return Err(BeamError::InvalidIntensityRatio(intensity_ratio));
    }
    let l_abs = winding.abs() as f64;
    Ok((1.0 / intensity_ratio).powf(1.0 / (2.0 * l_abs)) * 2.0 * winding as f64)
}
