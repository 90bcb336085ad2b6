//! Adaptive embedded Runge-Kutta integration for complex matrix-valued
//! states (Dormand-Prince 5(4) with FSAL).
//!
//! The integrator is deliberately generic over the matrix dimension so the
//! same stepper drives the 8-level master equation and the reduced few-level
//! systems used as cross-checks.

use nalgebra::SMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

pub type CMat<const N: usize> = SMatrix<C64, N, N>;

#[derive(Copy, Clone, Debug)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Hard upper bound on the step, s.
    pub max_step: f64,
    /// Below this step size the integration is declared failed, s.
    pub min_step: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
            min_step: 1e-18,
        }
    }
}

#[derive(Copy, Clone, Debug, Default)]
pub struct StepperStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t:.6e} s (h = {h:.3e} s)")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("state invariant violated at t = {t:.6e} s: {what}")]
    InvariantViolation { t: f64, what: String },
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Error weights (5th minus embedded 4th order).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate dy/dt = rhs(t, y) from t0 to t1 with adaptive step control.
///
/// `on_accept(t_prev, t_new, y_prev, y_new)` runs after every accepted step;
/// returning an error aborts the integration (used for invariant policing
/// and windowed averaging by the caller).
pub fn integrate<const N: usize, F, G>(
    mut rhs: F,
    y: &mut CMat<N>,
    t0: f64,
    t1: f64,
    ctrl: &StepControl,
    mut on_accept: G,
) -> Result<StepperStats, OdeError>
where
    F: FnMut(f64, &CMat<N>) -> CMat<N>,
    G: FnMut(f64, f64, &CMat<N>, &CMat<N>) -> Result<(), OdeError>,
{
    let mut stats = StepperStats::default();
    if t1 <= t0 {
        return Ok(stats);
    }
    let span = t1 - t0;
    let mut t = t0;
    let mut h = ctrl.max_step.min(span / 16.0).min(span);
    let mut k1 = rhs(t, y);
    stats.rhs_evals += 1;

    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        let hc = C64::new(h, 0.0);

        let y2 = *y + k1 * (hc * A21);
        let k2 = rhs(t + h / 5.0, &y2);
        let y3 = *y + k1 * (hc * A31) + k2 * (hc * A32);
        let k3 = rhs(t + 3.0 * h / 10.0, &y3);
        let y4 = *y + k1 * (hc * A41) + k2 * (hc * A42) + k3 * (hc * A43);
        let k4 = rhs(t + 4.0 * h / 5.0, &y4);
        let y5 = *y + k1 * (hc * A51) + k2 * (hc * A52) + k3 * (hc * A53) + k4 * (hc * A54);
        let k5 = rhs(t + 8.0 * h / 9.0, &y5);
        let y6 = *y
            + k1 * (hc * A61)
            + k2 * (hc * A62)
            + k3 * (hc * A63)
            + k4 * (hc * A64)
            + k5 * (hc * A65);
        let k6 = rhs(t + h, &y6);
        let y_new =
            *y + k1 * (hc * B1) + k3 * (hc * B3) + k4 * (hc * B4) + k5 * (hc * B5) + k6 * (hc * B6);
        let k7 = rhs(t + h, &y_new);
        stats.rhs_evals += 6;

        let err_mat = k1 * (hc * E1)
            + k3 * (hc * E3)
            + k4 * (hc * E4)
            + k5 * (hc * E5)
            + k6 * (hc * E6)
            + k7 * (hc * E7);

        // RMS of the componentwise error against mixed tolerance. |re|+|im|
        // stands in for the modulus (within sqrt(2), absorbed by the safety
        // factor) to keep square roots out of the hot loop.
        let mut acc = 0.0;
        let (es, ys, yns) = (err_mat.as_slice(), y.as_slice(), y_new.as_slice());
        for k in 0..N * N {
            let ya = (ys[k].re.abs() + ys[k].im.abs()).max(yns[k].re.abs() + yns[k].im.abs());
            let scale = ctrl.abs_tol + ctrl.rel_tol * ya;
            let e = (es[k].re.abs() + es[k].im.abs()) / scale;
            acc += e * e;
        }
        let err = (acc / (N * N) as f64).sqrt();

        if err <= 1.0 {
            let t_new = t + h;
            on_accept(t, t_new, y, &y_new)?;
            *y = y_new;
            t = t_new;
            k1 = k7; // FSAL
            stats.accepted += 1;
        } else {
            stats.rejected += 1;
        }

        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h = (h * factor).min(ctrl.max_step);
        if h < ctrl.min_step && t < t1 {
            return Err(OdeError::StepSizeUnderflow { t, h });
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        // d rho / dt = -lambda rho, 1x1 case
        let lambda = 3.0e6;
        let mut y = CMat::<1>::from_element(C64::new(1.0, 0.0));
        let ctrl = StepControl {
            max_step: 1e-7,
            ..Default::default()
        };
        integrate(
            |_, y: &CMat<1>| y * C64::new(-lambda, 0.0),
            &mut y,
            0.0,
            2e-6,
            &ctrl,
            |_, _, _, _| Ok(()),
        )
        .unwrap();
        let exact = (-lambda * 2e-6_f64).exp();
        assert!((y[(0, 0)].re - exact).abs() < 1e-9);
    }

    #[test]
    fn phase_rotation_accuracy() {
        // dy/dt = i w y with a fast frequency; checks the error control
        let w = std::f64::consts::TAU * 30e6;
        let mut y = CMat::<1>::from_element(C64::new(1.0, 0.0));
        let ctrl = StepControl::default();
        let t1 = 5e-6;
        let stats = integrate(
            |_, y: &CMat<1>| y * C64::new(0.0, w),
            &mut y,
            0.0,
            t1,
            &ctrl,
            |_, _, _, _| Ok(()),
        )
        .unwrap();
        let exact = C64::new(0.0, w * t1).exp();
        assert!((y[(0, 0)] - exact).norm() < 1e-5, "drift {}", (y[(0, 0)] - exact).norm());
        assert!(stats.accepted > 100);
    }

    #[test]
    fn halving_tolerance_tightens_result() {
        let w = std::f64::consts::TAU * 22e6;
        let run = |rel: f64| {
            let mut y = CMat::<2>::zeros();
            y[(0, 0)] = C64::new(1.0, 0.0);
            y[(0, 1)] = C64::new(0.5, 0.0);
            y[(1, 0)] = C64::new(0.5, 0.0);
            y[(1, 1)] = C64::new(0.0, 0.0);
            let ctrl = StepControl {
                rel_tol: rel,
                abs_tol: rel * 1e-2,
                ..Default::default()
            };
            let mut h = CMat::<2>::zeros();
            h[(0, 0)] = C64::new(w, 0.0);
            integrate(
                |_, y: &CMat<2>| {
                    let c = h * y;
                    (c - c.adjoint()) * C64::new(0.0, -1.0)
                },
                &mut y,
                0.0,
                2e-6,
                &ctrl,
                |_, _, _, _| Ok(()),
            )
            .unwrap();
            y
        };
        let coarse = run(1e-6);
        let mid = run(1e-8);
        let fine = run(1e-10);
        let diff = (coarse - fine).map(|c| c.norm()).max();
        let diff_mid = (mid - fine).map(|c| c.norm()).max();
        // global error tracks the requested tolerance
        assert!(diff < 5e-4, "coarse drift {diff:e}");
        assert!(diff_mid < 5e-6, "mid drift {diff_mid:e}");
        assert!(diff_mid < diff);
    }

    #[test]
    fn on_accept_error_aborts() {
        let mut y = CMat::<1>::from_element(C64::new(1.0, 0.0));
        let ctrl = StepControl::default();
        let r = integrate(
            |_, y: &CMat<1>| *y,
            &mut y,
            0.0,
            1.0,
            &ctrl,
            |_, t, _, _| {
                Err(OdeError::InvariantViolation {
                    t,
                    what: "test".into(),
                })
            },
        );
        assert!(matches!(r, Err(OdeError::InvariantViolation { .. })));
    }
}
