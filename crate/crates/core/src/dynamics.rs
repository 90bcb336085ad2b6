//! Time-dependent Hamiltonian and Lindblad dissipator of the driven 8-level
//! system, and the master-equation integration that produces time-averaged
//! populations.
//!
//! The Hamiltonian is written in the rotating frame of the UV laser and one
//! of the IR lasers (IR2 unless the frame is swapped). In that frame the S
//! and D diagonals carry the UV and reference-IR detunings, micromotion
//! enters as Δ'(t) = Δ + δ·cos(Ω_RF t + φ) on those diagonals, and the
//! remaining IR coupling oscillates at the detuning difference of the two IR
//! lasers plus the accumulated phase of their relative frequency modulation.

use nalgebra::{DMatrix, SMatrix};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::TAU;
use thiserror::Error;

use crate::atom::{
    cg_scale, coupling_amplitudes, DephasingChannel, LevelStructure, Manifold, Polarization,
    Transition, DIM,
};
use crate::beams::BeamGeometry;
use crate::ode::{integrate, CMat, OdeError, StepControl};

pub type Rho = CMat<DIM>;

/// Which laser a drive block describes.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum LaserLabel {
    Uv,
    Ir1,
    Ir2,
}

/// Which IR laser defines the rotating frame of the D manifold.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ReferenceIr {
    Ir1,
    Ir2,
}

/// One laser drive acting on the ion.
#[derive(Copy, Clone, Debug)]
pub struct LaserDrive {
    pub label: LaserLabel,
    /// Detuning from the zero-field transition, rad/s.
    pub detuning: f64,
    /// Rabi frequency in the sum-normalized convention: each Zeeman pair
    /// couples at (rabi/2)·CG, so the strongest pair sees rabi·cg_scale.
    pub rabi: f64,
    pub polarization: Polarization,
    pub beam: BeamGeometry,
    /// Micromotion Doppler modulation depth, rad/s.
    pub fm_amplitude: f64,
    /// Phase of the micromotion drive, rad. All drives share one phase.
    pub fm_phase: f64,
    /// Relative phase of the σ₋ component against σ₊ for orthogonally
    /// polarized drives. Convention: 0 (both components in phase).
    pub relative_sigma_phase: f64,
}

impl LaserDrive {
    fn transition(&self) -> Transition {
        match self.label {
            LaserLabel::Uv => Transition::SP,
            _ => Transition::DP,
        }
    }
}

/// Trap drive frequency and the IR beat it imprints on the Hamiltonian.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct DriveClock {
    /// Trap RF drive angular frequency, rad/s.
    pub omega_rf: f64,
    /// Detuning difference Δ_IR2 - Δ_IR1, rad/s.
    pub beat: f64,
}

impl DriveClock {
    pub fn from_drives(omega_rf: f64, drives: &[LaserDrive]) -> Result<Self, DynamicsError> {
        if omega_rf <= 0.0 {
            return Err(DynamicsError::InvalidClock(omega_rf));
        }
        let ir1 = find_drive(drives, LaserLabel::Ir1)?;
        let ir2 = find_drive(drives, LaserLabel::Ir2)?;
        Ok(DriveClock {
            omega_rf,
            beat: ir2.detuning - ir1.detuning,
        })
    }
}

/// Density matrix with its time tag. Invariants: Hermitian to 1e-10, unit
/// trace to 1e-8, eigenvalues above -1e-8.
#[derive(Clone, Debug)]
pub struct DensityState {
    pub rho: Rho,
    pub t: f64,
}

pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const EIGENVALUE_FLOOR: f64 = -1e-8;

impl DensityState {
    /// All population in one basis state.
    pub fn pure(index: usize) -> Self {
        let mut rho = Rho::zeros();
        rho[(index, index)] = C64::new(1.0, 0.0);
        DensityState { rho, t: 0.0 }
    }

    pub fn trace_deviation(&self) -> f64 {
        (self.rho.trace().re - 1.0)
            .abs()
            .max(self.rho.trace().im.abs())
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let mut max = 0.0_f64;
        for i in 0..DIM {
            for j in i..DIM {
                max = max.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        max
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rho
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &e| m.min(e))
    }

    pub fn check(&self) -> Result<(), DynamicsError> {
        if self.trace_deviation() > TRACE_TOL {
            return Err(DynamicsError::BadInitialState("trace differs from 1"));
        }
        if self.hermiticity_deviation() > HERMITICITY_TOL {
            return Err(DynamicsError::BadInitialState("not Hermitian"));
        }
        if self.min_eigenvalue() < EIGENVALUE_FLOOR {
            return Err(DynamicsError::BadInitialState("negative eigenvalue"));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("missing {0:?} drive")]
    MissingDrive(LaserLabel),
    #[error("duplicate {0:?} drive")]
    DuplicateDrive(LaserLabel),
    #[error("trap drive frequency must be positive, got {0}")]
    InvalidClock(f64),
    #[error("initial state invalid: {0}")]
    BadInitialState(&'static str),
    #[error("transient and window durations must be positive")]
    BadDurations,
    #[error("steady-state solve requires a time-independent Hamiltonian (zero beat and no FM)")]
    TimeDependent,
    #[error("integration failed: {0}")]
    Integration(#[from] OdeError),
}

fn find_drive(drives: &[LaserDrive], label: LaserLabel) -> Result<&LaserDrive, DynamicsError> {
    let mut found = None;
    for d in drives.iter().filter(|d| d.label == label) {
        if found.is_some() {
            return Err(DynamicsError::DuplicateDrive(label));
        }
        found = Some(d);
    }
    found.ok_or(DynamicsError::MissingDrive(label))
}

/// Precomputed Hamiltonian pieces; `at(t)` assembles H(t)/ħ in rad/s.
pub struct HamiltonianBuilder {
    h_static: Rho,
    /// Per-level coefficient of cos(Ω_RF t + φ) on the diagonal.
    fm_diag: [f64; DIM],
    /// Oscillating IR couplings: (upper, lower, Ω/2 · amplitude).
    osc_entries: Vec<(usize, usize, C64)>,
    /// Frame beat Δ_ref - Δ_osc multiplying t in the oscillating phase.
    frame_beat: f64,
    /// (δ_ref - δ_osc)/Ω_RF, the relative FM index of the two IR lasers.
    fm_rel_index: f64,
    omega_rf: f64,
    fm_phase: f64,
    sin_phase0: f64,
}

impl HamiltonianBuilder {
    pub fn new(
        structure: &LevelStructure,
        drives: &[LaserDrive],
        clock: &DriveClock,
        frame: ReferenceIr,
    ) -> Result<Self, DynamicsError> {
        let uv = find_drive(drives, LaserLabel::Uv)?;
        let ir1 = find_drive(drives, LaserLabel::Ir1)?;
        let ir2 = find_drive(drives, LaserLabel::Ir2)?;
        let (ir_ref, ir_osc) = match frame {
            ReferenceIr::Ir2 => (ir2, ir1),
            ReferenceIr::Ir1 => (ir1, ir2),
        };

        let mut h_static = Rho::zeros();
        let mut fm_diag = [0.0; DIM];
        for (i, level) in structure.levels.iter().enumerate() {
            let (detuning, fm) = match level.manifold {
                Manifold::S12 => (uv.detuning, uv.fm_amplitude),
                Manifold::D32 => (ir_ref.detuning, ir_ref.fm_amplitude),
                Manifold::P12 => (0.0, 0.0),
            };
            h_static[(i, i)] = C64::new(level.energy + detuning, 0.0);
            fm_diag[i] = fm;
        }

        let add_static = |h: &mut Rho, drive: &LaserDrive| {
            let scale = cg_scale(drive.transition());
            for c in coupling_amplitudes(structure, drive.transition(), drive.polarization) {
                let mut amp = C64::new(0.5 * drive.rabi * scale * c.amplitude, 0.0);
                if c.q == -1 && drive.relative_sigma_phase != 0.0 {
                    amp *= C64::from_polar(1.0, drive.relative_sigma_phase);
                }
                h[(c.upper, c.lower)] += amp;
                h[(c.lower, c.upper)] += amp.conj();
            }
        };
        add_static(&mut h_static, uv);
        add_static(&mut h_static, ir_ref);

        let mut osc_entries = Vec::new();
        let osc_scale = cg_scale(ir_osc.transition());
        for c in coupling_amplitudes(structure, ir_osc.transition(), ir_osc.polarization) {
            let mut amp = C64::new(0.5 * ir_osc.rabi * osc_scale * c.amplitude, 0.0);
            if c.q == -1 && ir_osc.relative_sigma_phase != 0.0 {
                amp *= C64::from_polar(1.0, ir_osc.relative_sigma_phase);
            }
            osc_entries.push((c.upper, c.lower, amp));
        }

        Ok(HamiltonianBuilder {
            h_static,
            fm_diag,
            osc_entries,
            frame_beat: ir_ref.detuning - ir_osc.detuning,
            fm_rel_index: (ir_ref.fm_amplitude - ir_osc.fm_amplitude) / clock.omega_rf,
            omega_rf: clock.omega_rf,
            fm_phase: uv.fm_phase,
            sin_phase0: uv.fm_phase.sin(),
        })
    }

    /// True when H(t) actually depends on t.
    pub fn is_time_dependent(&self) -> bool {
        self.frame_beat != 0.0
            || self.fm_rel_index != 0.0
            || self.fm_diag.iter().any(|&c| c != 0.0)
    }

    #[inline]
    pub fn at(&self, t: f64) -> Rho {
        let mut h = self.h_static;
        let (s, c) = (self.omega_rf * t + self.fm_phase).sin_cos();
        for i in 0..DIM {
            if self.fm_diag[i] != 0.0 {
                h[(i, i)] += C64::new(self.fm_diag[i] * c, 0.0);
            }
        }
        // Accumulated phase of the oscillating IR coupling: beat plus the
        // integral of the relative Doppler modulation from t = 0.
        let phase = self.frame_beat * t + self.fm_rel_index * (s - self.sin_phase0);
        let e = C64::from_polar(1.0, phase);
        for &(u, l, amp) in &self.osc_entries {
            let v = amp * e;
            h[(u, l)] += v;
            h[(l, u)] += v.conj();
        }
        h
    }
}

/// Assemble H(t)/ħ for the given drives; Hermitian by construction.
pub fn build_hamiltonian(
    structure: &LevelStructure,
    drives: &[LaserDrive],
    clock: &DriveClock,
    t: f64,
) -> Result<Rho, DynamicsError> {
    Ok(HamiltonianBuilder::new(structure, drives, clock, ReferenceIr::Ir2)?.at(t))
}

/// Lindblad dissipator reduced to its action on ρ: an elementwise damping
/// matrix plus population feeds. Every jump operator of the model is either
/// |lower⟩⟨upper| (decay, depolarizing) or built from projectors
/// (dephasing), which makes this reduction exact.
#[derive(Clone, Debug)]
pub struct Dissipator {
    /// dρ_ij gets -damp[(i,j)]·ρ_ij.
    damp: SMatrix<f64, DIM, DIM>,
    /// dρ_tt gets +rate·ρ_ss per (target, source, rate).
    feeds: Vec<(usize, usize, f64)>,
}

/// Build the dissipator: one jump operator per decay channel, the
/// configured dephasing generators, and depolarizing exchange within the D
/// manifold at the structure's rate.
pub fn build_dissipator(structure: &LevelStructure) -> Dissipator {
    let mut out_rate = [0.0_f64; DIM];
    let mut feeds = Vec::new();
    for ch in &structure.decay_channels {
        out_rate[ch.upper] += ch.rate;
        feeds.push((ch.lower, ch.upper, ch.rate));
    }
    if structure.depolarizing_d > 0.0 {
        let d_levels = structure.manifold_indices(Manifold::D32);
        for &i in &d_levels {
            for &j in &d_levels {
                if i != j {
                    // jump |i><j| at the depolarizing rate
                    out_rate[j] += structure.depolarizing_d;
                    feeds.push((i, j, structure.depolarizing_d));
                }
            }
        }
    }

    let mut damp = SMatrix::<f64, DIM, DIM>::zeros();
    for i in 0..DIM {
        for j in 0..DIM {
            damp[(i, j)] = 0.5 * (out_rate[i] + out_rate[j]);
        }
    }
    for ch in &structure.dephasing_channels {
        match *ch {
            DephasingChannel::Collective { manifold, rate } => {
                for i in 0..DIM {
                    for j in 0..DIM {
                        let a = structure.levels[i].manifold == manifold;
                        let b = structure.levels[j].manifold == manifold;
                        if a != b {
                            damp[(i, j)] += 0.5 * rate;
                        }
                    }
                }
            }
            DephasingChannel::PerLevel { manifold, rate } => {
                for i in 0..DIM {
                    for j in 0..DIM {
                        if i == j {
                            continue;
                        }
                        if structure.levels[i].manifold == manifold {
                            damp[(i, j)] += 0.5 * rate;
                        }
                        if structure.levels[j].manifold == manifold {
                            damp[(i, j)] += 0.5 * rate;
                        }
                    }
                }
            }
        }
    }
    Dissipator { damp, feeds }
}

impl Dissipator {
    #[inline]
    pub fn apply(&self, rho: &Rho) -> Rho {
        let mut out = Rho::zeros();
        for j in 0..DIM {
            for i in 0..DIM {
                let d = self.damp[(i, j)];
                if d != 0.0 {
                    out[(i, j)] = rho[(i, j)] * C64::new(-d, 0.0);
                }
            }
        }
        for &(to, from, rate) in &self.feeds {
            out[(to, to)] += rho[(from, from)] * C64::new(rate, 0.0);
        }
        out
    }
}

/// Full master-equation right-hand side -i[H, ρ] + L(ρ) in one fused pass.
///
/// Uses C = Hρ and the Hermiticity of ρ, so the commutator costs a single
/// matrix product: -i[H, ρ] = -i(C - C†).
#[inline]
pub fn master_rhs(h: &Rho, diss: &Dissipator, rho: &Rho) -> Rho {
    let hs = h.as_slice();
    let rs = rho.as_slice();
    let mut c = [C64::new(0.0, 0.0); DIM * DIM];
    for j in 0..DIM {
        for k in 0..DIM {
            let r = rs[k + DIM * j];
            let col = &hs[DIM * k..DIM * (k + 1)];
            for i in 0..DIM {
                c[i + DIM * j] += col[i] * r;
            }
        }
    }
    let mut out = Rho::zeros();
    let os = out.as_mut_slice();
    for j in 0..DIM {
        for i in 0..DIM {
            let a = c[i + DIM * j];
            let b = c[j + DIM * i];
            let r = rs[i + DIM * j];
            let d = diss.damp[(i, j)];
            os[i + DIM * j] = C64::new(a.im + b.im - d * r.re, b.re - a.re - d * r.im);
        }
    }
    for &(to, from, rate) in &diss.feeds {
        os[to + DIM * to] += rs[from + DIM * from] * C64::new(rate, 0.0);
    }
    out
}

/// Integration and averaging options for [`evolve`].
#[derive(Copy, Clone, Debug, Serialize)]
pub struct EvolveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Time discarded before averaging, s.
    pub transient: f64,
    /// Averaging window, s.
    pub window: f64,
    /// Max integrator step as a fraction of the RF period when the
    /// Hamiltonian is time dependent.
    pub max_step_rf_fraction: f64,
    /// Check the eigenvalue floor at every accepted step (slow).
    pub check_positivity: bool,
    /// Snap the averaging window to whole RF and beat periods.
    pub snap_window: bool,
    pub frame: ReferenceIr,
    /// Record (t, populations) every n-th accepted step.
    pub record_every: Option<usize>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            transient: 30e-6,
            window: 70e-6,
            max_step_rf_fraction: 1.0 / 20.0,
            check_positivity: false,
            snap_window: true,
            frame: ReferenceIr::Ir2,
            record_every: None,
        }
    }
}

/// Diagnostics of one master-equation run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct TrajectorySummary {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evals: usize,
    pub max_trace_deviation: f64,
    pub max_hermiticity_deviation: f64,
    /// Smallest eigenvalue seen, when positivity checking was on.
    pub min_eigenvalue: Option<f64>,
    /// Averaging window actually used after period snapping, s.
    pub window: f64,
    pub t_end: f64,
    /// Sampled (t, populations), when recording was on.
    pub samples: Vec<(f64, [f64; DIM])>,
}

pub struct EvolveResult {
    pub populations: [f64; DIM],
    pub summary: TrajectorySummary,
}

/// Snap `window` to whole periods: first to the slower of the RF and beat
/// periods, then to the RF period, so partial-cycle bias of the slowest
/// oscillation is suppressed first.
fn snap_window(window: f64, omega_rf: f64, beat: f64) -> f64 {
    let t_rf = TAU / omega_rf;
    let mut w = window;
    if beat != 0.0 {
        let t_beat = TAU / beat.abs();
        if t_beat > t_rf && t_beat <= 1.5 * window {
            w = (w / t_beat).round().max(1.0) * t_beat;
        }
    }
    if t_rf <= 1.5 * w {
        w = (w / t_rf).round().max(1.0) * t_rf;
    }
    w
}

/// Integrate dρ/dt = -i[H(t), ρ] + L(ρ) through the transient, then average
/// the populations uniformly over the window.
pub fn evolve(
    rho0: &DensityState,
    structure: &LevelStructure,
    drives: &[LaserDrive],
    clock: &DriveClock,
    opts: &EvolveOptions,
) -> Result<EvolveResult, DynamicsError> {
    if opts.transient <= 0.0 || opts.window <= 0.0 {
        return Err(DynamicsError::BadDurations);
    }
    rho0.check()?;
    let builder = HamiltonianBuilder::new(structure, drives, clock, opts.frame)?;
    let dissipator = build_dissipator(structure);

    let time_dependent = builder.is_time_dependent();
    let window = if opts.snap_window && time_dependent {
        snap_window(opts.window, clock.omega_rf, builder.frame_beat)
    } else {
        opts.window
    };
    let t_end = opts.transient + window;
    let max_step = if time_dependent {
        opts.max_step_rf_fraction * TAU / clock.omega_rf
    } else {
        t_end / 64.0
    };
    let ctrl = StepControl {
        rel_tol: opts.rel_tol,
        abs_tol: opts.abs_tol,
        max_step,
        min_step: 1e-18,
    };

    let rhs = |t: f64, rho: &Rho| master_rhs(&builder.at(t), &dissipator, rho);

    let mut summary = TrajectorySummary {
        window,
        ..Default::default()
    };
    if opts.check_positivity {
        summary.min_eigenvalue = Some(f64::INFINITY);
    }
    let mut accum = [0.0_f64; DIM];
    let mut rho = rho0.rho;

    // Invariant policing plus windowed trapezoid accumulation of the
    // populations; fails hard at ten times the stated tolerances.
    let mut step_index = 0_usize;
    let observe = |t0: f64, t1: f64, y0: &Rho, y1: &Rho| -> Result<(), OdeError> {
        let state = DensityState { rho: *y1, t: t1 };
        let trace_dev = state.trace_deviation();
        let herm_dev = state.hermiticity_deviation();
        summary.max_trace_deviation = summary.max_trace_deviation.max(trace_dev);
        summary.max_hermiticity_deviation = summary.max_hermiticity_deviation.max(herm_dev);
        if trace_dev > 10.0 * TRACE_TOL {
            return Err(OdeError::InvariantViolation {
                t: t1,
                what: format!("trace deviation {trace_dev:.3e}"),
            });
        }
        if herm_dev > 10.0 * HERMITICITY_TOL {
            return Err(OdeError::InvariantViolation {
                t: t1,
                what: format!("hermiticity deviation {herm_dev:.3e}"),
            });
        }
        if let Some(min_eig) = summary.min_eigenvalue.as_mut() {
            let e = state.min_eigenvalue();
            *min_eig = min_eig.min(e);
            if e < 10.0 * EIGENVALUE_FLOOR {
                return Err(OdeError::InvariantViolation {
                    t: t1,
                    what: format!("eigenvalue {e:.3e}"),
                });
            }
        }
        // trapezoid average over the part of [t0, t1] inside the window
        let lo = t0.max(opts.transient);
        let hi = t1.min(t_end);
        if hi > lo {
            let half = 0.5 * (hi - lo);
            for i in 0..DIM {
                accum[i] += half * (y0[(i, i)].re + y1[(i, i)].re);
            }
        }
        if let Some(every) = opts.record_every {
            if step_index % every.max(1) == 0 {
                let mut pops = [0.0; DIM];
                for (i, p) in pops.iter_mut().enumerate() {
                    *p = y1[(i, i)].re;
                }
                summary.samples.push((t1, pops));
            }
        }
        step_index += 1;
        Ok(())
    };

    let stats = integrate(rhs, &mut rho, 0.0, t_end, &ctrl, observe)?;
    summary.steps_accepted = stats.accepted;
    summary.steps_rejected = stats.rejected;
    summary.rhs_evals = stats.rhs_evals;
    summary.t_end = t_end;

    let mut populations = [0.0_f64; DIM];
    for (i, p) in populations.iter_mut().enumerate() {
        *p = accum[i] / window;
    }
    Ok(EvolveResult {
        populations,
        summary,
    })
}

/// Fluorescence proxy: total population of the two P sublevels.
pub fn fluorescence(populations: &[f64; DIM]) -> f64 {
    populations[6] + populations[7]
}

/// Steady state of the time-independent Liouvillian via a null-space solve
/// of the 64x64 superoperator. Serves as an algebraically independent
/// cross-check of the integrator; only valid with zero beat and no FM.
pub fn steady_state_static(
    structure: &LevelStructure,
    drives: &[LaserDrive],
    clock: &DriveClock,
) -> Result<[f64; DIM], DynamicsError> {
    let builder = HamiltonianBuilder::new(structure, drives, clock, ReferenceIr::Ir2)?;
    if builder.is_time_dependent() {
        return Err(DynamicsError::TimeDependent);
    }
    let h = builder.at(0.0);
    let dissipator = build_dissipator(structure);

    let n = DIM * DIM;
    let mut sup = DMatrix::<C64>::zeros(n, n);
    let vec_index = |i: usize, j: usize| i + DIM * j;
    // -i (H rho - rho H)
    for j in 0..DIM {
        for i in 0..DIM {
            for k in 0..DIM {
                sup[(vec_index(i, j), vec_index(k, j))] += C64::new(0.0, -1.0) * h[(i, k)];
                sup[(vec_index(i, j), vec_index(i, k))] -= C64::new(0.0, -1.0) * h[(k, j)];
            }
        }
    }
    for j in 0..DIM {
        for i in 0..DIM {
            sup[(vec_index(i, j), vec_index(i, j))] -= C64::new(dissipator.damp[(i, j)], 0.0);
        }
    }
    for &(to, from, rate) in &dissipator.feeds {
        sup[(vec_index(to, to), vec_index(from, from))] += C64::new(rate, 0.0);
    }

    let svd = sup.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    // smallest singular value's right-singular vector spans the null space
    let row = v_t.nrows() - 1;
    let mut rho = Rho::zeros();
    for j in 0..DIM {
        for i in 0..DIM {
            rho[(i, j)] = v_t[(row, vec_index(i, j))].conj();
        }
    }
    let rho = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let tr = rho.trace();
    let rho = rho * (C64::new(1.0, 0.0) / tr);
    let mut populations = [0.0; DIM];
    for (i, p) in populations.iter_mut().enumerate() {
        *p = rho[(i, i)].re;
    }
    Ok(populations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::{build_level_structure, idx, DecayRates, DephasingRates, GFactors};
    use crate::units::mhz;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn structure(b: f64, gamma_pd_mhz: f64) -> LevelStructure {
        build_level_structure(
            b,
            GFactors::default(),
            DecayRates {
                gamma_ps: mhz(21.57),
                gamma_pd: mhz(gamma_pd_mhz),
            },
            DephasingRates {
                uv_ir: mhz(0.1),
                ir_ir: 0.0,
            },
            0.0,
        )
        .unwrap()
    }

    fn drive(label: LaserLabel, detuning: f64, rabi: f64, fm: f64) -> LaserDrive {
        let (pol, beam) = match label {
            LaserLabel::Uv => (Polarization::SigmaPlusMinus, BeamGeometry::plane_wave(397e-9)),
            LaserLabel::Ir1 => (
                Polarization::Pi,
                BeamGeometry::laguerre_gauss(866e-9, 27e-6, 2, 0, (0.0, 0.0)),
            ),
            LaserLabel::Ir2 => (
                Polarization::SigmaPlusMinus,
                BeamGeometry::laguerre_gauss(866e-9, 27e-6, -2, 0, (0.0, 0.0)),
            ),
        };
        LaserDrive {
            label,
            detuning,
            rabi,
            polarization: pol,
            beam,
            fm_amplitude: fm,
            fm_phase: 0.0,
            relative_sigma_phase: 0.0,
        }
    }

    fn default_drives(rabi_uv: f64, rabi_ir: f64, fm_ir: f64) -> Vec<LaserDrive> {
        vec![
            drive(LaserLabel::Uv, mhz(-20.0), rabi_uv, 0.0),
            drive(LaserLabel::Ir1, mhz(30.0), rabi_ir, -fm_ir),
            drive(LaserLabel::Ir2, mhz(30.0), rabi_ir, fm_ir),
        ]
    }

    fn clock(drives: &[LaserDrive]) -> DriveClock {
        DriveClock::from_drives(mhz(22.135), drives).unwrap()
    }

    #[test]
    fn hamiltonian_diagonal_without_coupling() {
        let s = structure(4.0, 1.35);
        let drives = default_drives(0.0, 0.0, 0.0);
        let c = clock(&drives);
        let h = build_hamiltonian(&s, &drives, &c, 0.3e-6).unwrap();
        for i in 0..DIM {
            for j in 0..DIM {
                if i != j {
                    assert_eq!(h[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
        // S diagonal carries the UV detuning, D the IR2 detuning, P only Zeeman
        assert!((h[(idx::S_M, idx::S_M)].re - (s.levels[idx::S_M].energy + mhz(-20.0))).abs() < 1.0);
        assert!((h[(idx::D_P3, idx::D_P3)].re - (s.levels[idx::D_P3].energy + mhz(30.0))).abs() < 1.0);
        assert!((h[(idx::P_P, idx::P_P)].re - s.levels[idx::P_P].energy).abs() < 1.0);
    }

    #[test]
    fn hamiltonian_static_when_degenerate_beat_and_no_fm() {
        let s = structure(4.0, 1.35);
        let drives = default_drives(mhz(8.0), mhz(8.0), 0.0);
        let c = clock(&drives);
        let h0 = build_hamiltonian(&s, &drives, &c, 0.0).unwrap();
        for &t in &[1e-7, 3.7e-7, 9.1e-6] {
            let h = build_hamiltonian(&s, &drives, &c, t).unwrap();
            assert!((h - h0).map(|z| z.norm()).max() < 1e-9);
        }
    }

    #[test]
    fn hamiltonian_periodic_at_rf_when_beat_vanishes() {
        let s = structure(4.0, 1.35);
        let drives = default_drives(mhz(8.0), mhz(8.0), mhz(5.0));
        let c = clock(&drives);
        assert_eq!(c.beat, 0.0);
        let period = TAU / c.omega_rf;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let t = rng.gen_range(0.0..5e-6);
            let a = build_hamiltonian(&s, &drives, &c, t).unwrap();
            let b = build_hamiltonian(&s, &drives, &c, t + period).unwrap();
            let scale = a.map(|z| z.norm()).max();
            assert!((a - b).map(|z| z.norm()).max() < 1e-9 * scale);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let s = structure(4.0, 1.35);
        let mut drives = default_drives(mhz(8.0), mhz(8.0), mhz(5.0));
        drives[1].detuning = mhz(28.0); // nonzero beat
        drives[1].relative_sigma_phase = 0.4;
        drives[2].relative_sigma_phase = 0.9;
        let c = clock(&drives);
        for &t in &[0.0, 1.3e-7, 7.7e-7] {
            let h = build_hamiltonian(&s, &drives, &c, t).unwrap();
            assert!((h - h.adjoint()).map(|z| z.norm()).max() < 1e-12);
        }
    }

    #[test]
    fn drive_validation() {
        let s = structure(4.0, 1.35);
        let mut drives = default_drives(1.0, 1.0, 0.0);
        let c = clock(&drives);
        drives.push(drive(LaserLabel::Uv, 0.0, 0.0, 0.0));
        assert!(matches!(
            build_hamiltonian(&s, &drives, &c, 0.0),
            Err(DynamicsError::DuplicateDrive(LaserLabel::Uv))
        ));
        drives.truncate(2);
        assert!(matches!(
            build_hamiltonian(&s, &drives, &c, 0.0),
            Err(DynamicsError::MissingDrive(LaserLabel::Ir2))
        ));
    }

    #[test]
    fn dissipator_is_traceless_on_random_states() {
        let s = structure(4.0, 1.35);
        let mut s2 = s.clone();
        s2.depolarizing_d = mhz(0.01);
        let diss = build_dissipator(&s2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            // random Hermitian unit-trace matrix
            let mut rho = Rho::zeros();
            for i in 0..DIM {
                for j in i..DIM {
                    if i == j {
                        rho[(i, i)] = C64::new(rng.gen_range(0.0..1.0), 0.0);
                    } else {
                        let z = C64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
                        rho[(i, j)] = z;
                        rho[(j, i)] = z.conj();
                    }
                }
            }
            let tr = rho.trace();
            let rho = rho * (C64::new(1.0, 0.0) / tr);
            let l = diss.apply(&rho);
            assert!(l.trace().norm() < 1e-9 * mhz(21.57));
        }
    }

    #[test]
    fn dissipator_vanishes_without_rates() {
        let s = build_level_structure(
            4.0,
            GFactors::default(),
            DecayRates { gamma_ps: 0.0, gamma_pd: 0.0 },
            DephasingRates { uv_ir: 0.0, ir_ir: 0.0 },
            0.0,
        )
        .unwrap();
        let diss = build_dissipator(&s);
        let mut rho = Rho::zeros();
        rho[(0, 3)] = C64::new(0.4, 0.1);
        rho[(3, 0)] = C64::new(0.4, -0.1);
        rho[(6, 6)] = C64::new(1.0, 0.0);
        assert_eq!(diss.apply(&rho).map(|z| z.norm()).max(), 0.0);
    }

    #[test]
    fn excited_state_decays_exponentially() {
        let s = structure(4.0, 1.35);
        let drives = default_drives(0.0, 0.0, 0.0);
        let c = clock(&drives);
        let opts = EvolveOptions {
            transient: 20e-9,
            window: 60e-9,
            record_every: Some(1),
            ..Default::default()
        };
        let r = evolve(&DensityState::pure(idx::P_M), &s, &drives, &c, &opts).unwrap();
        let gamma = mhz(21.57) + mhz(1.35);
        for (t, pops) in &r.summary.samples {
            let p = pops[idx::P_M];
            let exact = (-gamma * t).exp();
            assert!((p - exact).abs() < 1e-7, "t={t:e}: {p} vs {exact}");
        }
    }

    #[test]
    fn stationary_dark_system() {
        let s = structure(4.0, 1.35);
        let drives = default_drives(0.0, 0.0, 0.0);
        let c = clock(&drives);
        let opts = EvolveOptions {
            transient: 1e-6,
            window: 2e-6,
            ..Default::default()
        };
        let r = evolve(&DensityState::pure(idx::S_P), &s, &drives, &c, &opts).unwrap();
        for i in 0..DIM {
            let want = if i == idx::S_P { 1.0 } else { 0.0 };
            assert!((r.populations[i] - want).abs() < 1e-9);
        }
        assert!(fluorescence(&r.populations) < 1e-12);
    }

    #[test]
    fn fluorescence_arithmetic() {
        let uniform = [0.125; DIM];
        assert!((fluorescence(&uniform) - 0.25).abs() < 1e-15);
        let mut s_only = [0.0; DIM];
        s_only[idx::S_M] = 0.6;
        s_only[idx::S_P] = 0.4;
        assert_eq!(fluorescence(&s_only), 0.0);
    }

    #[test]
    fn two_level_resonance_fluorescence() {
        // IR lasers off, B = 0, no P->D branch: the sigma+/sigma- pairs form
        // two closed two-level cycles whose total excited population follows
        // the textbook steady-state formula.
        let s = structure(0.0, 0.0);
        let omega_uv = mhz(5.0);
        let delta_uv = mhz(-10.0);
        let mut drives = default_drives(omega_uv, 0.0, 0.0);
        drives[0].detuning = delta_uv;
        let c = clock(&drives);
        let opts = EvolveOptions {
            transient: 2e-6,
            window: 2e-6,
            ..Default::default()
        };
        let r = evolve(&DensityState::pure(idx::S_M), &s, &drives, &c, &opts).unwrap();
        let gamma = mhz(21.57);
        // the driven sigma pairs couple at (Ω/2)·sqrt(2/3)
        let omega_eff = omega_uv * (2.0_f64 / 3.0).sqrt();
        let sat = 2.0 * omega_eff.powi(2) / gamma.powi(2);
        let expect = 0.5 * sat / (1.0 + sat + (2.0 * delta_uv / gamma).powi(2));
        let got = fluorescence(&r.populations);
        assert!(
            (got - expect).abs() / expect < 0.01,
            "got {got}, expect {expect}"
        );
    }

    #[test]
    fn averaged_populations_match_null_space_steady_state() {
        // no FM, equal IR detunings: the Liouvillian is static and the
        // windowed average must land on its kernel state
        let s = structure(4.0, 1.35);
        let drives = default_drives(mhz(6.0), mhz(4.0), 0.0);
        let c = clock(&drives);
        let exact = steady_state_static(&s, &drives, &c).unwrap();
        let opts = EvolveOptions {
            transient: 60e-6,
            window: 40e-6,
            ..Default::default()
        };
        let r = evolve(&DensityState::pure(idx::S_M), &s, &drives, &c, &opts).unwrap();
        for i in 0..DIM {
            assert!(
                (r.populations[i] - exact[i]).abs() < 1e-6,
                "level {i}: {} vs {}",
                r.populations[i],
                exact[i]
            );
        }
    }

    #[test]
    fn steady_state_rejects_time_dependence() {
        let s = structure(4.0, 1.35);
        let drives = default_drives(mhz(6.0), mhz(4.0), mhz(2.0));
        let c = clock(&drives);
        assert!(matches!(
            steady_state_static(&s, &drives, &c),
            Err(DynamicsError::TimeDependent)
        ));
    }

    #[test]
    fn invariants_hold_on_driven_run() {
        let s = structure(4.0, 1.35);
        let drives = default_drives(mhz(8.0), mhz(8.0), mhz(7.0));
        let c = clock(&drives);
        let opts = EvolveOptions {
            transient: 2e-6,
            window: 3e-6,
            check_positivity: true,
            ..Default::default()
        };
        let r = evolve(&DensityState::pure(idx::S_M), &s, &drives, &c, &opts).unwrap();
        assert!(r.summary.max_trace_deviation < TRACE_TOL);
        assert!(r.summary.max_hermiticity_deviation < HERMITICITY_TOL);
        assert!(r.summary.min_eigenvalue.unwrap() > EIGENVALUE_FLOOR);
        let total: f64 = r.populations.iter().sum();
        assert!((total - 1.0).abs() < 1e-8);
    }
}
