//! Desk-scale simulation and analysis toolkit for rotational Doppler
//! spectroscopy of a single trapped ion.
//!
//! The crate integrates the time-dependent 8-level master equation of a
//! ⁴⁰Ca⁺ ion driven by three lasers (two of them Laguerre-Gaussian vortex
//! beams), with trap micromotion entering as a frequency modulation of the
//! laser detunings. From the simulated fluorescence it extracts
//! dark-resonance dips, runs radial, angular and waist scans, evaluates a
//! closed-form three-level model of the dip depth, and fits depth-vs-radius
//! data with a χ²-based velocity-interval protocol.
//!
//! Module map:
//! - [`atom`]: Zeeman structure, dipole couplings, decay and dephasing
//!   channels, dark-resonance positions
//! - [`beams`]: Laguerre-Gaussian geometry, intensity and Doppler shifts
//! - [`dynamics`]: Hamiltonian and dissipator assembly, master-equation
//!   integration, fluorescence
//! - [`spectra`]: detuning sweeps, Lorentzian dip fits, scans
//! - [`analytic`]: three-level depth model and its J₀² approximation
//! - [`fitkit`]: nonlinear least squares, velocity interval scan, χ²
//!   percentiles
//! - [`config`]: run configuration, unit conversion, fingerprinting

pub mod analytic;
pub mod atom;
pub mod beams;
pub mod bessel;
pub mod config;
pub mod dynamics;
pub mod fitkit;
pub mod lm;
pub mod ode;
pub mod spectra;
pub mod units;
