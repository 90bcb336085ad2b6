//! Level structure of the ⁴⁰Ca⁺ ion: the 4²S₁/₂, 3²D₃/₂ and 4²P₁/₂ Zeeman
//! sublevels, their magnetic-field splittings, dipole selection rules with
//! relative amplitudes, and the decay and dephasing channels feeding the
//! dissipator.
//!
//! Basis order is fixed: S(-1/2), S(+1/2), D(-3/2), D(-1/2), D(+1/2),
//! D(+3/2), P(-1/2), P(+1/2). Magnetic quantum numbers are stored doubled
//! (`two_m`) so they stay exact integers.

use serde::Serialize;
use thiserror::Error;

use crate::units::MU_B_OVER_HBAR;

/// Number of levels in the basis.
pub const DIM: usize = 8;

/// One of the three fine-structure manifolds in play.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Manifold {
    S12,
    D32,
    P12,
}

impl Manifold {
    /// Doubled total angular momentum 2j.
    pub fn two_j(self) -> i32 {
        match self {
            Manifold::S12 | Manifold::P12 => 1,
            Manifold::D32 => 3,
        }
    }
}

/// Transition selected when asking for coupling amplitudes.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Transition {
    /// S₁/₂ ↔ P₁/₂ (the ultraviolet line)
    SP,
    /// D₃/₂ ↔ P₁/₂ (the infrared line)
    DP,
}

/// Linear laser polarization relative to the magnetic field axis.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Polarization {
    /// Parallel to B: drives Δm = 0.
    Pi,
    /// Orthogonal to B: equal σ₊ and σ₋ components, drives Δm = ±1.
    SigmaPlusMinus,
}

/// A single Zeeman sublevel.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct ZeemanLevel {
    pub manifold: Manifold,
    /// Doubled magnetic quantum number (2m), always odd for these manifolds.
    pub two_m: i32,
    /// Zeeman energy relative to the zero-field manifold energy, rad/s.
    pub energy: f64,
}

impl ZeemanLevel {
    pub fn m(&self) -> f64 {
        self.two_m as f64 / 2.0
    }
}

/// One spontaneous-decay channel P → S or P → D.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct DecayChannel {
    pub upper: usize,
    pub lower: usize,
    /// Partial decay rate of this channel, rad/s.
    pub rate: f64,
    /// Photon polarization index q = m_upper - m_lower ∈ {-1, 0, +1}.
    pub q: i32,
}

/// Laser-linewidth dephasing attached to one manifold.
///
/// `Collective` applies one projector jump operator √rate·P_M, which damps
/// coherences between the manifold and everything else at rate/2 while
/// leaving intra-manifold coherences untouched (relative phase diffusion of
/// one laser frame against the others). `PerLevel` applies √rate·|i⟩⟨i| to
/// each sublevel, damping intra-manifold coherences at `rate` and coherences
/// to the outside at rate/2; this is the completely positive stand-in for
/// relative phase noise between two lasers addressing the same manifold.
#[derive(Copy, Clone, Debug, Serialize)]
pub enum DephasingChannel {
    Collective { manifold: Manifold, rate: f64 },
    PerLevel { manifold: Manifold, rate: f64 },
}

/// Dephasing rates as configured, before translation into jump operators.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct DephasingRates {
    /// Decay rate of coherences between the S manifold and D/P (relative
    /// UV vs IR laser phase noise), rad/s.
    pub uv_ir: f64,
    /// Decay rate of coherences within the D manifold (relative phase noise
    /// between the two IR lasers), rad/s.
    pub ir_ir: f64,
}

/// Landé g-factors of the three manifolds.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct GFactors {
    pub g_s: f64,
    pub g_d: f64,
    pub g_p: f64,
}

impl Default for GFactors {
    fn default() -> Self {
        // Standard ⁴⁰Ca⁺ values.
        GFactors {
            g_s: 2.0,
            g_d: 0.8,
            g_p: 2.0 / 3.0,
        }
    }
}

/// Total decay rates of the P manifold into each lower manifold.
#[derive(Copy, Clone, Debug, Serialize)]
pub struct DecayRates {
    /// P → S total rate, rad/s.
    pub gamma_ps: f64,
    /// P → D total rate, rad/s.
    pub gamma_pd: f64,
}

#[derive(Debug, Error)]
pub enum AtomError {
    #[error("magnetic field must be non-negative, got {0} G")]
    NegativeField(f64),
    #[error("rate {name} must be non-negative, got {value}")]
    NegativeRate { name: &'static str, value: f64 },
}

/// The full 8-level structure: energies, decay channels, dephasing and
/// depolarizing channels. Immutable after construction and safe to share
/// across threads.
#[derive(Clone, Debug, Serialize)]
pub struct LevelStructure {
    pub b_field_gauss: f64,
    pub g_factors: GFactors,
    pub levels: [ZeemanLevel; DIM],
    pub decay_channels: Vec<DecayChannel>,
    pub dephasing_channels: Vec<DephasingChannel>,
    /// Depolarizing rate within the D manifold (population exchange between
    /// every pair of D sublevels), rad/s.
    pub depolarizing_d: f64,
}

/// Indices of the sublevels in the canonical basis order.
pub mod idx {
    pub const S_M: usize = 0; // S, m = -1/2
    pub const S_P: usize = 1; // S, m = +1/2
    pub const D_M3: usize = 2; // D, m = -3/2
    pub const D_M1: usize = 3; // D, m = -1/2
    pub const D_P1: usize = 4; // D, m = +1/2
    pub const D_P3: usize = 5; // D, m = +3/2
    pub const P_M: usize = 6; // P, m = -1/2
    pub const P_P: usize = 7; // P, m = +1/2
}

/// Dipole amplitude between lower level `lo` and upper level `up`, as the
/// signed 3-j symbol prefactored by (-1)^(j_P - m_P). Exact square roots of
/// rationals, hard-coded for the two transitions in play. Zero when the
/// selection rules forbid the pair.
fn dipole_amplitude(lo: &ZeemanLevel, up: &ZeemanLevel) -> f64 {
    let q = (up.two_m - lo.two_m) / 2;
    if (up.two_m - lo.two_m) % 2 != 0 || q.abs() > 1 {
        return 0.0;
    }
    match (lo.manifold, lo.two_m, up.two_m) {
        // S1/2 <-> P1/2
        (Manifold::S12, -1, -1) => -(1.0_f64 / 6.0).sqrt(),
        (Manifold::S12, 1, 1) => (1.0_f64 / 6.0).sqrt(),
        (Manifold::S12, -1, 1) => -(1.0_f64 / 3.0).sqrt(),
        (Manifold::S12, 1, -1) => (1.0_f64 / 3.0).sqrt(),
        // D3/2 <-> P1/2
        (Manifold::D32, -3, -1) => 0.5,
        (Manifold::D32, -1, -1) => -(1.0_f64 / 6.0).sqrt(),
        (Manifold::D32, 1, -1) => (1.0_f64 / 12.0).sqrt(),
        (Manifold::D32, -1, 1) => (1.0_f64 / 12.0).sqrt(),
        (Manifold::D32, 1, 1) => -(1.0_f64 / 6.0).sqrt(),
        (Manifold::D32, 3, 1) => 0.5,
        _ => 0.0,
    }
}

/// One dipole coupling surviving the selection rules.
#[derive(Copy, Clone, Debug)]
pub struct Coupling {
    pub lower: usize,
    pub upper: usize,
    pub q: i32,
    /// Relative amplitude, normalized so the largest magnitude in the
    /// returned set is 1. Signs follow the 3-j symbol convention above.
    pub amplitude: f64,
}

/// Largest true Clebsch-Gordan coefficient of a transition, relating the
/// normalized amplitudes to the sum-normalized convention in which a drive
/// with Rabi frequency Ω couples each pair at (Ω/2)·⟨CG⟩ and the squared
/// coefficients out of one P sublevel sum to one.
pub fn cg_scale(transition: Transition) -> f64 {
    match transition {
        // sigma legs of S1/2 <-> P1/2 carry sqrt(2/3)
        Transition::SP => (2.0_f64 / 3.0).sqrt(),
        // stretched legs of D3/2 <-> P1/2 carry sqrt(1/2)
        Transition::DP => (1.0_f64 / 2.0).sqrt(),
    }
}

/// Build the level structure for a given field and rate configuration.
///
/// Energies within each manifold are ordered by m. Decay channels carry the
/// Clebsch-Gordan partition of `gamma_ps` and `gamma_pd` so the branching
/// fractions out of each P sublevel sum to one.
pub fn build_level_structure(
    b_field_gauss: f64,
    g_factors: GFactors,
    decay: DecayRates,
    dephasing: DephasingRates,
    depolarizing_d: f64,
) -> Result<LevelStructure, AtomError> {
    if b_field_gauss < 0.0 {
        return Err(AtomError::NegativeField(b_field_gauss));
    }
    for (name, value) in [
        ("gamma_ps", decay.gamma_ps),
        ("gamma_pd", decay.gamma_pd),
        ("dephasing_uv_ir", dephasing.uv_ir),
        ("dephasing_ir_ir", dephasing.ir_ir),
        ("depolarizing_d", depolarizing_d),
    ] {
        if value < 0.0 {
            return Err(AtomError::NegativeRate { name, value });
        }
    }

    let zeeman = |manifold: Manifold, two_m: i32| {
        let g = match manifold {
            Manifold::S12 => g_factors.g_s,
            Manifold::D32 => g_factors.g_d,
            Manifold::P12 => g_factors.g_p,
        };
        ZeemanLevel {
            manifold,
            two_m,
            energy: g * MU_B_OVER_HBAR * b_field_gauss * (two_m as f64 / 2.0),
        }
    };
    let levels = [
        zeeman(Manifold::S12, -1),
        zeeman(Manifold::S12, 1),
        zeeman(Manifold::D32, -3),
        zeeman(Manifold::D32, -1),
        zeeman(Manifold::D32, 1),
        zeeman(Manifold::D32, 3),
        zeeman(Manifold::P12, -1),
        zeeman(Manifold::P12, 1),
    ];

    // Partition each branch rate by the squared amplitudes; the per-upper
    // normalizer is the same for both P sublevels by symmetry.
    let mut decay_channels = Vec::new();
    for up in [idx::P_M, idx::P_P] {
        for branch in [Manifold::S12, Manifold::D32] {
            let total = match branch {
                Manifold::S12 => decay.gamma_ps,
                _ => decay.gamma_pd,
            };
            let lowers: Vec<usize> = (0..DIM)
                .filter(|&i| levels[i].manifold == branch)
                .collect();
            let norm: f64 = lowers
                .iter()
                .map(|&i| dipole_amplitude(&levels[i], &levels[up]).powi(2))
                .sum();
            for &lo in &lowers {
                let a = dipole_amplitude(&levels[lo], &levels[up]);
                if a == 0.0 {
                    continue;
                }
                decay_channels.push(DecayChannel {
                    upper: up,
                    lower: lo,
                    rate: total * a * a / norm,
                    q: (levels[up].two_m - levels[lo].two_m) / 2,
                });
            }
        }
    }

    let mut dephasing_channels = Vec::new();
    if dephasing.uv_ir > 0.0 {
        dephasing_channels.push(DephasingChannel::Collective {
            manifold: Manifold::S12,
            rate: 2.0 * dephasing.uv_ir,
        });
    }
    if dephasing.ir_ir > 0.0 {
        dephasing_channels.push(DephasingChannel::PerLevel {
            manifold: Manifold::D32,
            rate: dephasing.ir_ir,
        });
    }

    Ok(LevelStructure {
        b_field_gauss,
        g_factors,
        levels,
        decay_channels,
        dephasing_channels,
        depolarizing_d,
    })
}

impl LevelStructure {
    /// Adjacent-sublevel Zeeman splitting g·μ_B·B/ħ of a manifold, rad/s.
    pub fn zeeman_splitting(&self, manifold: Manifold) -> f64 {
        let g = match manifold {
            Manifold::S12 => self.g_factors.g_s,
            Manifold::D32 => self.g_factors.g_d,
            Manifold::P12 => self.g_factors.g_p,
        };
        g * MU_B_OVER_HBAR * self.b_field_gauss
    }

    /// Indices of the sublevels belonging to a manifold.
    pub fn manifold_indices(&self, manifold: Manifold) -> Vec<usize> {
        (0..DIM)
            .filter(|&i| self.levels[i].manifold == manifold)
            .collect()
    }

    /// Total decay rate out of one P sublevel.
    pub fn total_decay_rate(&self, upper: usize) -> f64 {
        self.decay_channels
            .iter()
            .filter(|c| c.upper == upper)
            .map(|c| c.rate)
            .sum()
    }

    /// Coherence decay rate between two manifolds implied by the dephasing
    /// channels (diagnostic view of the jump-operator set).
    pub fn coherence_decay_rate(&self, a: Manifold, b: Manifold) -> f64 {
        let mut rate = 0.0;
        for ch in &self.dephasing_channels {
            match *ch {
                DephasingChannel::Collective { manifold, rate: r } => {
                    if (manifold == a) != (manifold == b) {
                        rate += r / 2.0;
                    }
                }
                DephasingChannel::PerLevel { manifold, rate: r } => {
                    if manifold == a && manifold == b {
                        rate += r;
                    } else if manifold == a || manifold == b {
                        rate += r / 2.0;
                    }
                }
            }
        }
        rate
    }
}

/// All dipole couplings of `transition` driven by `polarization`, with
/// amplitudes normalized so the largest magnitude is 1.
pub fn coupling_amplitudes(
    structure: &LevelStructure,
    transition: Transition,
    polarization: Polarization,
) -> Vec<Coupling> {
    let lower_manifold = match transition {
        Transition::SP => Manifold::S12,
        Transition::DP => Manifold::D32,
    };
    let wanted_q: &[i32] = match polarization {
        Polarization::Pi => &[0],
        Polarization::SigmaPlusMinus => &[-1, 1],
    };
    let mut out = Vec::new();
    for lo in structure.manifold_indices(lower_manifold) {
        for up in structure.manifold_indices(Manifold::P12) {
            let a = dipole_amplitude(&structure.levels[lo], &structure.levels[up]);
            if a == 0.0 {
                continue;
            }
            let q = (structure.levels[up].two_m - structure.levels[lo].two_m) / 2;
            if wanted_q.contains(&q) {
                out.push(Coupling {
                    lower: lo,
                    upper: up,
                    q,
                    amplitude: a,
                });
            }
        }
    }
    let max = out
        .iter()
        .map(|c| c.amplitude.abs())
        .fold(0.0_f64, f64::max);
    if max > 0.0 {
        for c in out.iter_mut() {
            c.amplitude /= max;
        }
    }
    out
}

/// Kind of dark resonance: shared upper level bridged by UV+IR1 (S-D) or by
/// IR2+IR1 (D-D).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum DipKind {
    SD,
    DD,
}

/// One predicted fluorescence dip: the IR1 detuning at which a set of
/// lower-state superpositions goes dark.
#[derive(Clone, Debug, Serialize)]
pub struct DarkResonance {
    /// IR1 detuning of the dip center, rad/s.
    pub center: f64,
    pub kind: DipKind,
    /// Lower-state pairs (IR1-coupled level, partner level) that decouple
    /// at this detuning.
    pub pairs: Vec<(usize, usize)>,
}

/// Predict the dark-resonance positions for π-polarized IR1, σ₊+σ₋ IR2 and
/// σ₊+σ₋ UV drives.
///
/// Two lasers sharing an upper level P(m_p) decouple the lower pair (a, b)
/// when their detunings satisfy Δ_a + e_a = Δ_b + e_b, so the dips sit at
/// IR1 detunings offset from Δ_UV (S-D) or Δ_IR2 (D-D) by Zeeman energy
/// differences. Six lower-state combinations group into four dip centers.
pub fn dark_resonance_positions(
    structure: &LevelStructure,
    delta_uv: f64,
    delta_ir2: f64,
) -> Vec<DarkResonance> {
    let pi = coupling_amplitudes(structure, Transition::DP, Polarization::Pi);
    let sigma_dp = coupling_amplitudes(structure, Transition::DP, Polarization::SigmaPlusMinus);
    let sigma_sp = coupling_amplitudes(structure, Transition::SP, Polarization::SigmaPlusMinus);
    let energy = |i: usize| structure.levels[i].energy;

    let mut groups: Vec<DarkResonance> = Vec::new();
    let push = |groups: &mut Vec<DarkResonance>, center: f64, kind, pair| {
        if let Some(g) = groups
            .iter_mut()
            .find(|g| g.kind == kind && (g.center - center).abs() < 1e-6)
        {
            g.pairs.push(pair);
        } else {
            groups.push(DarkResonance {
                center,
                kind,
                pairs: vec![pair],
            });
        }
    };

    for c1 in &pi {
        // S-D: UV and IR1 share c1.upper
        for cs in sigma_sp.iter().filter(|c| c.upper == c1.upper) {
            let center = delta_uv + energy(cs.lower) - energy(c1.lower);
            push(&mut groups, center, DipKind::SD, (c1.lower, cs.lower));
        }
        // D-D: IR2 and IR1 share c1.upper
        for cs in sigma_dp.iter().filter(|c| c.upper == c1.upper) {
            let center = delta_ir2 + energy(cs.lower) - energy(c1.lower);
            push(&mut groups, center, DipKind::DD, (c1.lower, cs.lower));
        }
    }
    groups.sort_by(|a, b| a.center.partial_cmp(&b.center).unwrap());
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;

    pub fn standard(b: f64) -> LevelStructure {
        build_level_structure(
            b,
            GFactors::default(),
            DecayRates {
                gamma_ps: mhz(21.57),
                gamma_pd: mhz(1.35),
            },
            DephasingRates {
                uv_ir: mhz(0.1),
                ir_ir: 0.0,
            },
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_field_degenerate() {
        let s = standard(0.0);
        for l in &s.levels {
            assert_eq!(l.energy, 0.0);
        }
    }

    #[test]
    fn zeeman_splittings_at_4_gauss() {
        let s = standard(4.0);
        // delta_B(D) = 0.8 * 1.3996 MHz/G * 4 G = 4.47872 MHz
        let dd = s.zeeman_splitting(Manifold::D32);
        assert!((dd - mhz(4.47872)).abs() / dd < 1e-12);
        // delta_B(S) = 2.0 * 1.3996 * 4 = 11.1968 MHz, "of the order of 10 MHz"
        let ds = s.zeeman_splitting(Manifold::S12);
        assert!((ds - mhz(11.1968)).abs() / ds < 1e-12);
        // adjacent-m spacing within each manifold is uniform
        for pair in [(idx::D_M3, idx::D_M1), (idx::D_M1, idx::D_P1), (idx::D_P1, idx::D_P3)] {
            let gap = s.levels[pair.1].energy - s.levels[pair.0].energy;
            assert!((gap - dd).abs() < 1e-6);
        }
    }

    #[test]
    fn validation_errors() {
        assert!(build_level_structure(
            -1.0,
            GFactors::default(),
            DecayRates { gamma_ps: 1.0, gamma_pd: 1.0 },
            DephasingRates { uv_ir: 0.0, ir_ir: 0.0 },
            0.0
        )
        .is_err());
        assert!(build_level_structure(
            1.0,
            GFactors::default(),
            DecayRates { gamma_ps: -1.0, gamma_pd: 1.0 },
            DephasingRates { uv_ir: 0.0, ir_ir: 0.0 },
            0.0
        )
        .is_err());
    }

    #[test]
    fn pi_couplings_on_dp() {
        let s = standard(4.0);
        let c = coupling_amplitudes(&s, Transition::DP, Polarization::Pi);
        // Δm = 0 keeps only the m = ±1/2 D levels
        assert_eq!(c.len(), 2);
        let pairs: Vec<(usize, usize)> = c.iter().map(|c| (c.lower, c.upper)).collect();
        assert!(pairs.contains(&(idx::D_M1, idx::P_M)));
        assert!(pairs.contains(&(idx::D_P1, idx::P_P)));
        for cc in &c {
            assert!((cc.amplitude.abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sigma_couplings_depopulate_all_d() {
        let s = standard(4.0);
        let c = coupling_amplitudes(&s, Transition::DP, Polarization::SigmaPlusMinus);
        // Selection rules leave one sigma partner per D sublevel.
        assert_eq!(c.len(), 4);
        let mut lowers: Vec<usize> = c.iter().map(|c| c.lower).collect();
        lowers.sort_unstable();
        assert_eq!(lowers, vec![idx::D_M3, idx::D_M1, idx::D_P1, idx::D_P3]);
        // stretched transitions are the strongest
        for cc in &c {
            let expect = match cc.lower {
                idx::D_M3 | idx::D_P3 => 1.0,
                _ => (1.0_f64 / 3.0).sqrt(),
            };
            assert!((cc.amplitude.abs() - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn sigma_couplings_on_sp() {
        let s = standard(4.0);
        let c = coupling_amplitudes(&s, Transition::SP, Polarization::SigmaPlusMinus);
        assert_eq!(c.len(), 2);
        let pairs: Vec<(usize, usize)> = c.iter().map(|c| (c.lower, c.upper)).collect();
        assert!(pairs.contains(&(idx::S_M, idx::P_P)));
        assert!(pairs.contains(&(idx::S_P, idx::P_M)));
    }

    #[test]
    fn reflection_symmetry_of_amplitudes() {
        // m -> -m maps couplings onto each other up to sign
        let s = standard(4.0);
        for (tr, pol) in [
            (Transition::SP, Polarization::Pi),
            (Transition::SP, Polarization::SigmaPlusMinus),
            (Transition::DP, Polarization::Pi),
            (Transition::DP, Polarization::SigmaPlusMinus),
        ] {
            let c = coupling_amplitudes(&s, tr, pol);
            for a in &c {
                let lo_m = -s.levels[a.lower].two_m;
                let up_m = -s.levels[a.upper].two_m;
                let partner = c
                    .iter()
                    .find(|b| s.levels[b.lower].two_m == lo_m && s.levels[b.upper].two_m == up_m)
                    .expect("mirror coupling exists");
                assert!((a.amplitude.abs() - partner.amplitude.abs()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn branching_fractions_sum_to_one() {
        let s = standard(4.0);
        let total = mhz(21.57) + mhz(1.35);
        for up in [idx::P_M, idx::P_P] {
            let sum = s.total_decay_rate(up);
            assert!((sum - total).abs() / total < 1e-12);
            // known Clebsch-Gordan partition of the D branch
            let d3: f64 = s
                .decay_channels
                .iter()
                .filter(|c| c.upper == up && matches!(s.levels[c.lower].manifold, Manifold::D32))
                .map(|c| c.rate)
                .sum();
            assert!((d3 - mhz(1.35)).abs() / d3 < 1e-12);
            let stretched = s
                .decay_channels
                .iter()
                .find(|c| c.upper == up && (c.lower == idx::D_M3 || c.lower == idx::D_P3))
                .unwrap();
            assert!((stretched.rate - mhz(1.35) / 2.0).abs() < 1e-3);
        }
    }

    #[test]
    fn dark_positions_at_quoted_detunings() {
        let s = standard(4.0);
        let dips = dark_resonance_positions(&s, mhz(-20.0), mhz(30.0));
        assert_eq!(dips.len(), 4);
        let sd: Vec<&DarkResonance> = dips.iter().filter(|d| d.kind == DipKind::SD).collect();
        let dd: Vec<&DarkResonance> = dips.iter().filter(|d| d.kind == DipKind::DD).collect();
        assert_eq!(sd.len(), 2);
        assert_eq!(dd.len(), 2);
        // SD group centered on Δ_UV, DD group on Δ_IR2
        let sd_mid = (sd[0].center + sd[1].center) / 2.0;
        let dd_mid = (dd[0].center + dd[1].center) / 2.0;
        assert!((sd_mid - mhz(-20.0)).abs() < 1e-3);
        assert!((dd_mid - mhz(30.0)).abs() < 1e-3);
        // DD dips split by twice the D Zeeman splitting: 2 x 4.47872 MHz
        let split = dd[1].center - dd[0].center;
        assert!((split - 2.0 * s.zeeman_splitting(Manifold::D32)).abs() < 1e-3);
        assert!((split - mhz(8.95744)).abs() / split < 1e-6);
        // six dark combinations in total
        let n_pairs: usize = dips.iter().map(|d| d.pairs.len()).sum();
        assert_eq!(n_pairs, 6);
        for d in &dd {
            assert_eq!(d.pairs.len(), 2);
        }
    }

    #[test]
    fn zero_field_collapses_to_two_centers() {
        let s = standard(0.0);
        let dips = dark_resonance_positions(&s, mhz(-20.0), mhz(30.0));
        let mut centers: Vec<f64> = dips.iter().map(|d| d.center).collect();
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        centers.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        assert_eq!(centers.len(), 2);
        assert!((centers[0] - mhz(-20.0)).abs() < 1e-9);
        assert!((centers[1] - mhz(30.0)).abs() < 1e-9);
    }
}
