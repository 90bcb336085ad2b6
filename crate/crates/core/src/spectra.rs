//! Detuning sweeps, Lorentzian dip extraction, and the radial, angular and
//! waist scans built on them.
//!
//! A sweep runs one master-equation evolution per IR1 detuning; sweep
//! points are independent work items executed on the rayon pool with
//! results ordered by grid index, so runs are deterministic for fixed
//! configuration regardless of the worker count.

use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use thiserror::Error;

use crate::atom::{dark_resonance_positions, DipKind};
use crate::beams::{lg_intensity, BeamError};
use crate::config::{DipChoice, Scenario};
use crate::dynamics::{evolve, fluorescence, DensityState, DynamicsError};
use crate::lm::{self, FitOptions};
use crate::units::{mhz, to_mhz};

/// Cooperative cancellation flag; scans flush completed points when set.
#[derive(Clone, Default)]
pub struct CancelToken(Option<Arc<AtomicBool>>);

impl CancelToken {
    pub fn new(flag: Arc<AtomicBool>) -> Self {
        CancelToken(Some(flag))
    }

    pub fn cancelled(&self) -> bool {
        self.0
            .as_ref()
            .map(|f| f.load(Ordering::Relaxed))
            .unwrap_or(false)
    }
}

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("bad detuning grid: {0}")]
    Grid(&'static str),
    #[error("simulation failed at IR1 detuning {:.4} MHz: {source}", to_mhz(*.detuning))]
    Dynamics {
        detuning: f64,
        source: DynamicsError,
    },
    #[error(transparent)]
    Beam(#[from] BeamError),
    #[error("window holds {got} points, need at least {need}")]
    TooFewPoints { got: usize, need: usize },
    #[error("no interior local minimum in the fit window")]
    NoMinimum,
    #[error("dip fit failed: {0}")]
    FitFailed(String),
    #[error("no dark resonance of the requested kind predicted")]
    NoDipPredicted,
    #[error("run cancelled")]
    Cancelled,
}

/// Fluorescence versus IR1 detuning for one fixed configuration.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    /// IR1 detunings, rad/s, strictly increasing.
    pub detunings: Vec<f64>,
    pub fluorescence: Vec<f64>,
    pub fingerprint: String,
}

impl Spectrum {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "detuning_ir1_mhz,fluorescence")?;
        for (d, f) in self.detunings.iter().zip(&self.fluorescence) {
            writeln!(w, "{:.9e},{:.9e}", to_mhz(*d), f)?;
        }
        Ok(())
    }
}

/// Extracted parameters of one dark-resonance dip.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct DipFit {
    /// Dip center, rad/s (IR1 detuning).
    pub center: f64,
    pub center_err: f64,
    /// Full width at half depth, rad/s.
    pub fwhm: f64,
    pub fwhm_err: f64,
    /// Fluorescence away from the dip.
    pub baseline: f64,
    /// Fluorescence at the dip minimum.
    pub floor: f64,
    /// R = floor/baseline after background subtraction.
    pub ratio: f64,
    /// Depth d = 1 - R.
    pub depth: f64,
    pub depth_err: f64,
    /// Sum of squared fit residuals.
    pub residual_ss: f64,
}

/// One abscissa point of a scan; failed fits are kept and flagged so the
/// abscissa stays aligned.
#[derive(Clone, Debug, Serialize)]
pub struct ScanPoint {
    /// r in meters for radial scans, azimuth in radians for angular scans.
    pub abscissa: f64,
    pub dip: Option<DipFit>,
    /// Depth normalized to a motion-insensitive reference; filled by
    /// [`ScanResult::normalize_against`].
    pub relative_depth: Option<f64>,
    /// Single-beam relative intensity at the ion position.
    pub intensity: f64,
    pub error: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ScanKind {
    RadialCounter,
    RadialCo,
    Angular,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    pub kind: ScanKind,
    pub points: Vec<ScanPoint>,
    pub fingerprint: String,
    pub cancelled: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RotationMode {
    CoRotating,
    CounterRotating,
}

/// Dip-location and fit protocol knobs.
#[derive(Copy, Clone, Debug)]
pub struct SweepPlan {
    pub prescan_points: usize,
    pub final_points: usize,
    /// Fit window half width as a multiple of the estimated FWHM.
    pub window_halfwidths: f64,
    pub dip: DipChoice,
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan {
            prescan_points: 21,
            final_points: 81,
            window_halfwidths: 4.0,
            dip: DipChoice::Lower,
        }
    }
}

/// Evenly spaced grid, inclusive of both ends.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    let step = (stop - start) / (points - 1) as f64;
    (0..points).map(|i| start + step * i as f64).collect()
}

/// One evolve+fluorescence per grid point.
pub fn sweep_spectrum(
    scenario: &Scenario,
    detunings: &[f64],
    cancel: &CancelToken,
) -> Result<Spectrum, SpectraError> {
    if detunings.is_empty() {
        return Err(SpectraError::Grid("empty grid"));
    }
    if detunings.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpectraError::Grid("grid must be strictly increasing"));
    }
    if detunings.iter().any(|d| d.abs() > mhz(100.0)) {
        return Err(SpectraError::Grid(
            "grid outside +-100 MHz of the zero-field resonance",
        ));
    }
    let fluorescence: Vec<f64> = detunings
        .par_iter()
        .map(|&delta| {
            if cancel.cancelled() {
                return Err(SpectraError::Cancelled);
            }
            point_fluorescence(scenario, delta)
        })
        .collect::<Result<_, _>>()?;
    Ok(Spectrum {
        detunings: detunings.to_vec(),
        fluorescence,
        fingerprint: scenario.fingerprint.clone(),
    })
}

fn point_fluorescence(scenario: &Scenario, delta_ir1: f64) -> Result<f64, SpectraError> {
    let sc = scenario.with_ir1_detuning(delta_ir1);
    let drives = sc.drives()?;
    let clock = sc.clock(&drives).map_err(|source| SpectraError::Dynamics {
        detuning: delta_ir1,
        source,
    })?;
    // initial condition: all population in one S sublevel
    let result = evolve(
        &DensityState::pure(0),
        &sc.structure,
        &drives,
        &clock,
        &sc.evolve,
    )
    .map_err(|source| SpectraError::Dynamics {
        detuning: delta_ir1,
        source,
    })?;
    Ok(fluorescence(&result.populations))
}

/// Least-squares Lorentzian dip fit over the points of `spectrum` inside
/// `window` (detuning interval, rad/s).
pub fn fit_lorentzian_dip(
    spectrum: &Spectrum,
    window: (f64, f64),
) -> Result<DipFit, SpectraError> {
    let pts: Vec<(f64, f64)> = spectrum
        .detunings
        .iter()
        .zip(&spectrum.fluorescence)
        .filter(|(d, _)| **d >= window.0 && **d <= window.1)
        .map(|(d, f)| (*d, *f))
        .collect();
    if pts.len() < 7 {
        return Err(SpectraError::TooFewPoints {
            got: pts.len(),
            need: 7,
        });
    }
    let (i_min, &(c0, y_min)) = pts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .unwrap();
    if i_min == 0 || i_min == pts.len() - 1 {
        return Err(SpectraError::NoMinimum);
    }
    // baseline seed from the window edges
    let edge = |range: &[(f64, f64)]| range.iter().map(|p| p.1).sum::<f64>() / range.len() as f64;
    let n_edge = (pts.len() / 8).max(1);
    let b0 = 0.5 * (edge(&pts[..n_edge]) + edge(&pts[pts.len() - n_edge..]));
    if !(y_min < b0 * (1.0 - 1e-9)) {
        return Err(SpectraError::NoMinimum);
    }
    let a0 = b0 - y_min;
    // half-depth crossings seed the width
    let half = y_min + 0.5 * a0;
    let mut left = pts[0].0;
    for w in pts[..=i_min].windows(2).rev() {
        if w[0].1 >= half && w[1].1 < half {
            left = w[0].0;
            break;
        }
    }
    let mut right = pts[pts.len() - 1].0;
    for w in pts[i_min..].windows(2) {
        if w[0].1 < half && w[1].1 >= half {
            right = w[1].0;
            break;
        }
    }
    let w0 = (0.5 * (right - left)).max(pts[1].0 - pts[0].0);

    // fit in units of the baseline estimate so convergence thresholds are
    // scale free
    let y_scale = b0.max(1e-300);
    let residual = |p: &[f64]| -> Result<Vec<f64>, String> {
        Ok(pts
            .iter()
            .map(|&(x, y)| (p[0] - p[1] / (1.0 + ((x - p[2]) / p[3]).powi(2)) - y) / y_scale)
            .collect())
    };
    let span = window.1 - window.0;
    let bounds: lm::Bounds = vec![
        Some((0.0, 10.0 * b0.max(1e-12))),
        Some((0.0, 10.0 * b0.max(1e-12))),
        Some((window.0, window.1)),
        Some((span * 1e-4, span * 2.0)),
    ];
    let opts = FitOptions {
        ftol: 1e-9,
        xtol: 1e-10,
        max_iterations: 300,
        max_evaluations: 9000,
        ..Default::default()
    };
    let report = lm::fit(residual, &[b0, a0, c0, w0], &bounds, &opts)
        .map_err(|e| SpectraError::FitFailed(e.to_string()))?;

    let [baseline, amplitude, center, width] = report.params[..] else {
        unreachable!()
    };
    let nu = (pts.len() - 4).max(1) as f64;
    // unweighted fit: scale the covariance by the residual variance (the
    // covariance is already in external parameter units; cost is in
    // baseline-normalized units, consistent with the scaled Jacobian)
    let var_scale = report.cost / nu;
    let sigma = |i: usize| (report.covariance[(i, i)].max(0.0) * var_scale).sqrt();
    let floor = baseline - amplitude;
    let depth = amplitude / baseline;
    // d = A/B: propagate the A and B uncertainties with their covariance
    let da = 1.0 / baseline;
    let db = -amplitude / (baseline * baseline);
    let depth_var = da * da * report.covariance[(1, 1)]
        + db * db * report.covariance[(0, 0)]
        + 2.0 * da * db * report.covariance[(0, 1)];
    Ok(DipFit {
        center,
        center_err: sigma(2),
        fwhm: 2.0 * width,
        fwhm_err: 2.0 * sigma(3),
        baseline,
        floor,
        ratio: 1.0 - depth,
        depth,
        depth_err: (depth_var.max(0.0) * var_scale).sqrt(),
        residual_ss: report.cost,
    })
}

/// Predicted center of the selected D-D dip.
pub fn predicted_dd_center(scenario: &Scenario, dip: DipChoice) -> Result<f64, SpectraError> {
    let dips = dark_resonance_positions(
        &scenario.structure,
        scenario.uv.detuning,
        scenario.ir2.detuning,
    );
    let mut dd: Vec<f64> = dips
        .iter()
        .filter(|d| d.kind == DipKind::DD)
        .map(|d| d.center)
        .collect();
    dd.sort_by(|a, b| a.partial_cmp(b).unwrap());
    match (dip, dd.as_slice()) {
        (_, []) => Err(SpectraError::NoDipPredicted),
        (DipChoice::Lower, [first, ..]) => Ok(*first),
        (DipChoice::Upper, [.., last]) => Ok(*last),
    }
}

/// Crude scale of the dip width used to seed the locator: power broadening
/// of the two-photon line plus any IR-IR dephasing.
fn width_guess(scenario: &Scenario) -> f64 {
    let cg2 = crate::atom::cg_scale(crate::atom::Transition::DP).powi(2);
    let omega_sq = cg2 * (scenario.ir1.rabi.powi(2) + scenario.ir2.rabi.powi(2));
    let gamma_p: f64 = scenario.structure.total_decay_rate(6);
    let deph = scenario
        .structure
        .coherence_decay_rate(crate::atom::Manifold::D32, crate::atom::Manifold::D32);
    (omega_sq / (2.0 * gamma_p.max(mhz(0.1))) + deph).max(mhz(1e-4))
}

/// Locate the selected dip with 21-point prescans, zooming in when the
/// window is too wide to resolve it, then fit over a final grid spanning
/// `window_halfwidths` estimated widths on each side.
pub fn sweep_and_fit_dip(
    scenario: &Scenario,
    plan: &SweepPlan,
    cancel: &CancelToken,
) -> Result<DipFit, SpectraError> {
    let predicted = predicted_dd_center(scenario, plan.dip)?;
    // initial window: wide enough for light shifts, narrow enough to keep
    // the neighboring dip out
    let dd_split = scenario.structure.zeeman_splitting(crate::atom::Manifold::D32);
    let w_est = width_guess(scenario);
    let mut half = if dd_split > 0.0 {
        (0.9 * dd_split).max(4.0 * w_est).min(mhz(6.0))
    } else {
        (4.0 * w_est).min(mhz(6.0))
    };
    let mut center = predicted;

    let mut located: Option<(f64, f64)> = None;
    for _ in 0..7 {
        if cancel.cancelled() {
            return Err(SpectraError::Cancelled);
        }
        let grid = linspace(center - half, center + half, plan.prescan_points);
        let spec = sweep_spectrum(scenario, &grid, cancel)?;
        if let Some((c, w)) = locate_minimum(&spec) {
            located = Some((c, w));
            break;
        }
        // featureless window: zoom toward the predicted center
        half /= 8.0;
        center = predicted;
        if half < w_est * 1e-3 {
            break;
        }
    }
    let (c_est, w_est) = located.ok_or(SpectraError::NoMinimum)?;

    let half = plan.window_halfwidths * w_est;
    let grid = linspace(c_est - half, c_est + half, plan.final_points);
    let spec = sweep_spectrum(scenario, &grid, cancel)?;
    fit_lorentzian_dip(&spec, (c_est - half, c_est + half))
}

/// Interior minimum with half-depth width estimate, if the window shows a
/// resolved dip.
fn locate_minimum(spec: &Spectrum) -> Option<(f64, f64)> {
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
    // require a resolved contrast before trusting the minimum
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

/// Scan the dip along the radial coordinate. At each r the ion sits at
/// (r, 0) in the beam frame; with `equal_rabi` the configured Rabi
/// frequencies are held fixed (power compensation), otherwise they follow
/// the local beam amplitude.
pub fn radial_scan(
    scenario: &Scenario,
    r_values: &[f64],
    mode: RotationMode,
    equal_rabi: bool,
    plan: &SweepPlan,
    r_min: f64,
    cancel: &CancelToken,
) -> Result<ScanResult, SpectraError> {
    let base = scenario.with_counter_rotating(mode == RotationMode::CounterRotating);
    let kind = match mode {
        RotationMode::CounterRotating => ScanKind::RadialCounter,
        RotationMode::CoRotating => ScanKind::RadialCo,
    };
    let mut points = Vec::with_capacity(r_values.len());
    let mut cancelled = false;
    for &r in r_values {
        if cancel.cancelled() {
            cancelled = true;
            points.push(ScanPoint {
                abscissa: r,
                dip: None,
                relative_depth: None,
                intensity: 0.0,
                error: Some("cancelled".into()),
            });
            continue;
        }
        if r < r_min {
            points.push(ScanPoint {
                abscissa: r,
                dip: None,
                relative_depth: None,
                intensity: 0.0,
                error: Some(format!("r below r_min = {r_min:.2e} m")),
            });
            continue;
        }
        let mut sc = base.with_ion_at(r, 0.0);
        let intensity = lg_intensity(&sc.ir1_beam, r, 0.0)?;
        if !equal_rabi {
            sc = sc.with_ir_rabi_scale(intensity.sqrt());
        }
        match sweep_and_fit_dip(&sc, plan, cancel) {
            Ok(dip) => points.push(ScanPoint {
                abscissa: r,
                dip: Some(dip),
                relative_depth: None,
                intensity,
                error: None,
            }),
            Err(SpectraError::Cancelled) => {
                cancelled = true;
                points.push(ScanPoint {
                    abscissa: r,
                    dip: None,
                    relative_depth: None,
                    intensity,
                    error: Some("cancelled".into()),
                });
            }
            Err(e) => points.push(ScanPoint {
                abscissa: r,
                dip: None,
                relative_depth: None,
                intensity,
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(ScanResult {
        kind,
        points,
        fingerprint: scenario.fingerprint.clone(),
        cancelled,
    })
}

/// Sweep the ion's azimuthal position at fixed radius; the micromotion
/// direction stays fixed, so the azimuthal velocity projection rotates.
pub fn angular_scan(
    scenario: &Scenario,
    phi_values: &[f64],
    r: f64,
    plan: &SweepPlan,
    r_min: f64,
    cancel: &CancelToken,
) -> Result<ScanResult, SpectraError> {
    if r < r_min {
        return Err(SpectraError::Grid("angular scan radius below r_min"));
    }
    let mut points = Vec::with_capacity(phi_values.len());
    let mut cancelled = false;
    for &phi in phi_values {
        if cancel.cancelled() {
            cancelled = true;
            points.push(ScanPoint {
                abscissa: phi,
                dip: None,
                relative_depth: None,
                intensity: 0.0,
                error: Some("cancelled".into()),
            });
            continue;
        }
        let sc = scenario.with_ion_at(r, phi);
        let intensity = lg_intensity(&sc.ir1_beam, r, 0.0)?;
        match sweep_and_fit_dip(&sc, plan, cancel) {
            Ok(dip) => points.push(ScanPoint {
                abscissa: phi,
                dip: Some(dip),
                relative_depth: None,
                intensity,
                error: None,
            }),
            Err(SpectraError::Cancelled) => {
                cancelled = true;
                points.push(ScanPoint {
                    abscissa: phi,
                    dip: None,
                    relative_depth: None,
                    intensity,
                    error: Some("cancelled".into()),
                });
            }
            Err(e) => points.push(ScanPoint {
                abscissa: phi,
                dip: None,
                relative_depth: None,
                intensity,
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(ScanResult {
        kind: ScanKind::Angular,
        points,
        fingerprint: scenario.fingerprint.clone(),
        cancelled,
    })
}

/// Two radial scans differing only in the beam waist.
pub fn waist_comparison(
    scenario: &Scenario,
    r_values: &[f64],
    waists: (f64, f64),
    plan: &SweepPlan,
    r_min: f64,
    cancel: &CancelToken,
) -> Result<(ScanResult, ScanResult), SpectraError> {
    let a = radial_scan(
        &scenario.with_waist(waists.0),
        r_values,
        RotationMode::CounterRotating,
        true,
        plan,
        r_min,
        cancel,
    )?;
    let b = radial_scan(
        &scenario.with_waist(waists.1),
        r_values,
        RotationMode::CounterRotating,
        true,
        plan,
        r_min,
        cancel,
    )?;
    Ok((a, b))
}

impl ScanResult {
    /// Fill `relative_depth` as depth / reference depth, pairing points by
    /// abscissa (the reference is a motion-insensitive scan of the same
    /// grid).
    pub fn normalize_against(&mut self, reference: &ScanResult) {
        for p in self.points.iter_mut() {
            let r = reference
                .points
                .iter()
                .find(|q| (q.abscissa - p.abscissa).abs() < 1e-12);
            p.relative_depth = match (&p.dip, r.and_then(|q| q.dip.as_ref())) {
                (Some(d), Some(dr)) if dr.depth > 0.0 => Some(d.depth / dr.depth),
                _ => None,
            };
        }
    }

    /// CSV with one row per point; abscissa in μm for radial scans and
    /// degrees for angular scans.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let (name, scale) = match self.kind {
            ScanKind::Angular => ("phi_deg", 180.0 / std::f64::consts::PI),
            _ => ("r_um", 1e6),
        };
        writeln!(
            w,
            "{name},depth,depth_err,relative_depth,fwhm_mhz,fwhm_err_mhz,center_mhz,center_err_mhz,baseline,floor,intensity,valid,error"
        )?;
        for p in &self.points {
            let abscissa = p.abscissa * scale;
            match &p.dip {
                Some(d) => writeln!(
                    w,
                    "{:.9e},{:.9e},{:.9e},{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},1,",
                    abscissa,
                    d.depth,
                    d.depth_err,
                    p.relative_depth
                        .map(|v| format!("{v:.9e}"))
                        .unwrap_or_default(),
                    to_mhz(d.fwhm),
                    to_mhz(d.fwhm_err),
                    to_mhz(d.center),
                    to_mhz(d.center_err),
                    d.baseline,
                    d.floor,
                    p.intensity,
                )?,
                None => writeln!(
                    w,
                    "{:.9e},,,,,,,,,,{:.9e},0,{}",
                    abscissa,
                    p.intensity,
                    csv_escape(p.error.as_deref().unwrap_or("")),
                )?,
            }
        }
        Ok(())
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_spectrum(
        baseline: f64,
        amplitude: f64,
        center: f64,
        fwhm: f64,
        grid: &[f64],
    ) -> Spectrum {
        let w = fwhm / 2.0;
        Spectrum {
            detunings: grid.to_vec(),
            fluorescence: grid
                .iter()
                .map(|&x| baseline - amplitude / (1.0 + ((x - center) / w).powi(2)))
                .collect(),
            fingerprint: "test".into(),
        }
    }

    #[test]
    fn lorentzian_fit_recovers_exact_parameters() {
        let grid = linspace(mhz(27.0), mhz(33.0), 81);
        let spec = synthetic_spectrum(1.0, 0.8, mhz(30.0), mhz(1.0), &grid);
        let fit = fit_lorentzian_dip(&spec, (mhz(27.0), mhz(33.0))).unwrap();
        assert!((fit.center - mhz(30.0)).abs() / mhz(30.0) < 1e-6);
        assert!((fit.fwhm - mhz(1.0)).abs() / mhz(1.0) < 1e-6);
        assert!((fit.baseline - 1.0).abs() < 1e-6);
        assert!((fit.depth - 0.8).abs() < 1e-6);
        assert!((fit.ratio - 0.2).abs() < 1e-6);
        assert!(fit.depth_err < 1e-6);
    }

    #[test]
    fn flat_spectrum_has_no_minimum() {
        let grid = linspace(mhz(27.0), mhz(33.0), 41);
        let spec = Spectrum {
            detunings: grid.clone(),
            fluorescence: vec![0.5; grid.len()],
            fingerprint: "test".into(),
        };
        assert!(matches!(
            fit_lorentzian_dip(&spec, (mhz(27.0), mhz(33.0))),
            Err(SpectraError::NoMinimum)
        ));
    }

    #[test]
    fn too_few_points_rejected() {
        let grid = linspace(mhz(29.0), mhz(31.0), 5);
        let spec = synthetic_spectrum(1.0, 0.5, mhz(30.0), mhz(0.5), &grid);
        assert!(matches!(
            fit_lorentzian_dip(&spec, (mhz(29.0), mhz(31.0))),
            Err(SpectraError::TooFewPoints { got: 5, need: 7 })
        ));
    }

    #[test]
    fn depth_invariant_under_fluorescence_rescaling() {
        let grid = linspace(mhz(27.0), mhz(33.0), 81);
        let a = fit_lorentzian_dip(
            &synthetic_spectrum(1.0, 0.6, mhz(30.0), mhz(1.2), &grid),
            (mhz(27.0), mhz(33.0)),
        )
        .unwrap();
        let b = fit_lorentzian_dip(
            &synthetic_spectrum(37.0, 0.6 * 37.0, mhz(30.0), mhz(1.2), &grid),
            (mhz(27.0), mhz(33.0)),
        )
        .unwrap();
        assert!((a.depth - b.depth).abs() < 1e-9);
    }

    #[test]
    fn grid_validation() {
        let sc = crate::config::RunConfig::default().scenario().unwrap();
        let token = CancelToken::default();
        assert!(matches!(
            sweep_spectrum(&sc, &[], &token),
            Err(SpectraError::Grid(_))
        ));
        assert!(matches!(
            sweep_spectrum(&sc, &[mhz(1.0), mhz(1.0)], &token),
            Err(SpectraError::Grid(_))
        ));
        assert!(matches!(
            sweep_spectrum(&sc, &[mhz(99.0), mhz(101.0)], &token),
            Err(SpectraError::Grid(_))
        ));
    }

    #[test]
    fn predicted_centers_bracket_ir2_detuning() {
        let sc = crate::config::RunConfig::default().scenario().unwrap();
        let lo = predicted_dd_center(&sc, DipChoice::Lower).unwrap();
        let hi = predicted_dd_center(&sc, DipChoice::Upper).unwrap();
        assert!(lo < sc.ir2.detuning && sc.ir2.detuning < hi);
        let split = sc.structure.zeeman_splitting(crate::atom::Manifold::D32);
        assert!(((hi - lo) - 2.0 * split).abs() < 1.0);
    }

    #[test]
    fn single_point_sweep() {
        let mut cfg = crate::config::RunConfig::default();
        cfg.dynamics.transient_us = 1.0;
        cfg.dynamics.window_us = 2.0;
        cfg.micromotion.velocity_mps = 0.0;
        let sc = cfg.scenario().unwrap();
        let spec = sweep_spectrum(&sc, &[mhz(10.0)], &CancelToken::default()).unwrap();
        assert_eq!(spec.detunings.len(), 1);
        assert!(spec.fluorescence[0] > 0.0);
    }

    #[test]
    fn cancel_token_stops_sweep() {
        let sc = crate::config::RunConfig::default().scenario().unwrap();
        let flag = Arc::new(AtomicBool::new(true));
        let token = CancelToken::new(flag);
        assert!(matches!(
            sweep_spectrum(&sc, &[mhz(10.0), mhz(11.0)], &token),
            Err(SpectraError::Cancelled)
        ));
    }

    #[test]
    fn scan_csv_shape() {
        let dip = DipFit {
            center: mhz(30.0),
            center_err: mhz(0.01),
            fwhm: mhz(1.0),
            fwhm_err: mhz(0.02),
            baseline: 1.0,
            floor: 0.2,
            ratio: 0.2,
            depth: 0.8,
            depth_err: 0.01,
            residual_ss: 1e-6,
        };
        let scan = ScanResult {
            kind: ScanKind::RadialCounter,
            points: vec![
                ScanPoint {
                    abscissa: 10e-6,
                    dip: Some(dip),
                    relative_depth: Some(0.9),
                    intensity: 0.5,
                    error: None,
                },
                ScanPoint {
                    abscissa: 20e-6,
                    dip: None,
                    relative_depth: None,
                    intensity: 0.8,
                    error: Some("fit failed, x".into()),
                },
            ],
            fingerprint: "cafe".into(),
            cancelled: false,
        };
        let mut buf = Vec::new();
        scan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("r_um,depth"));
        assert!(lines[1].starts_with("1.000000000e1,8.0"));
        assert!(lines[2].contains(",0,"));
        assert!(lines[2].contains("\"fit failed, x\""));
    }
}
