//! Trust-region nonlinear least squares (Levenberg-Marquardt) with numeric
//! Jacobians and box constraints via a sine parameter transform.
//!
//! The residual function owns all weighting: it should return
//! (model - data)/σ so the cost is the χ² of the fit.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Copy, Clone, Debug)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub max_evaluations: usize,
    /// Relative cost decrease below which the fit is declared converged.
    pub ftol: f64,
    /// Step-size convergence threshold (internal coordinates).
    pub xtol: f64,
    /// Relative central-difference step for the numeric Jacobian.
    pub fd_step: f64,
    pub initial_lambda: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 100,
            max_evaluations: 4000,
            ftol: 1e-12,
            xtol: 1e-12,
            fd_step: 1e-6,
            initial_lambda: 1e-3,
        }
    }
}

/// Outcome of a least-squares run. `cost` is the sum of squared residuals
/// at `params`; with σ-weighted residuals that is the χ².
#[derive(Clone, Debug)]
pub struct FitReport {
    pub params: Vec<f64>,
    pub cost: f64,
    /// Covariance (JᵀJ)⁻¹ of the external parameters at the optimum.
    pub covariance: DMatrix<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

impl FitReport {
    /// 1σ uncertainty of parameter `i`, scaled by sqrt(χ²/ν) when the
    /// reduced χ² exceeds one (convention; ν = residual count − free
    /// parameters).
    pub fn uncertainty(&self, i: usize, n_residuals: usize) -> f64 {
        let nu = n_residuals.saturating_sub(self.params.len()).max(1) as f64;
        let scale = (self.cost / nu).max(1.0);
        (self.covariance[(i, i)].max(0.0) * scale).sqrt()
    }

    /// Correlation matrix derived from the covariance.
    pub fn correlations(&self) -> DMatrix<f64> {
        let n = self.params.len();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let d = (self.covariance[(i, i)] * self.covariance[(j, j)]).sqrt();
                out[(i, j)] = if d > 0.0 {
                    self.covariance[(i, j)] / d
                } else {
                    0.0
                };
            }
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum LmError {
    #[error("residual evaluation failed: {0}")]
    EvalFailed(String),
    #[error("more free parameters than residuals ({params} > {residuals})")]
    Underdetermined { params: usize, residuals: usize },
    #[error("fit did not converge within the evaluation budget")]
    Budget(FitReport),
    #[error("invalid bound for parameter {0}")]
    BadBound(usize),
}

/// Optional box constraint per parameter.
pub type Bounds = Vec<Option<(f64, f64)>>;

struct Transform {
    bounds: Bounds,
}

impl Transform {
    // p = lo + (hi-lo)(sin u + 1)/2 maps R onto (lo, hi)
    fn to_external(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.bounds)
            .map(|(&u, b)| match b {
                None => u,
                Some((lo, hi)) => lo + (hi - lo) * (u.sin() + 1.0) / 2.0,
            })
            .collect()
    }

    fn to_internal(&self, p: &[f64]) -> Result<Vec<f64>, LmError> {
        p.iter()
            .zip(&self.bounds)
            .enumerate()
            .map(|(i, (&p, b))| match b {
                None => Ok(p),
                Some((lo, hi)) => {
                    if !(hi > lo) {
                        return Err(LmError::BadBound(i));
                    }
                    let x = ((p - lo) / (hi - lo)).clamp(1e-10, 1.0 - 1e-10);
                    Ok((2.0 * x - 1.0).asin())
                }
            })
            .collect()
    }

    // dp/du, the chain-rule factor for covariance back-transformation
    fn jacobian_diag(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.bounds)
            .map(|(&u, b)| match b {
                None => 1.0,
                Some((lo, hi)) => (hi - lo) * u.cos() / 2.0,
            })
            .collect()
    }
}

/// Minimize the sum of squared residuals over the boxed parameters.
///
/// Accepts only cost-decreasing steps, so the returned optimum is never
/// worse than the seed. Budget exhaustion returns the best iterate flagged
/// unconverged inside [`LmError::Budget`].
pub fn fit<F>(
    mut residuals: F,
    initial: &[f64],
    bounds: &Bounds,
    opts: &FitOptions,
) -> Result<FitReport, LmError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, String>,
{
    assert_eq!(initial.len(), bounds.len(), "one bound entry per parameter");
    let transform = Transform {
        bounds: bounds.clone(),
    };
    let n = initial.len();
    let mut u = transform.to_internal(initial)?;
    let mut evals = 0_usize;

    let mut eval = |u: &[f64], evals: &mut usize| -> Result<(Vec<f64>, f64), LmError> {
        *evals += 1;
        let r = residuals(&transform.to_external(u)).map_err(LmError::EvalFailed)?;
        let cost = r.iter().map(|x| x * x).sum();
        Ok((r, cost))
    };

    let (mut r, mut cost) = eval(&u, &mut evals)?;
    let m = r.len();
    if m < n {
        return Err(LmError::Underdetermined {
            params: n,
            residuals: m,
        });
    }

    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = DMatrix::<f64>::zeros(m, n);

    while iterations < opts.max_iterations && evals + 2 * n + 1 <= opts.max_evaluations {
        iterations += 1;
        // central-difference Jacobian in internal coordinates
        for j in 0..n {
            let h = opts.fd_step * u[j].abs().max(1.0);
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let (rp, _) = eval(&up, &mut evals)?;
            let (rm, _) = eval(&um, &mut evals)?;
            for i in 0..m {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rv = DVector::from_column_slice(&r);
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * &rv;

        let mut improved = false;
        for _ in 0..24 {
            if evals >= opts.max_evaluations {
                break;
            }
            let mut damped = a.clone();
            for j in 0..n {
                let d = a[(j, j)];
                damped[(j, j)] = d + lambda * d.max(1e-30);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-&g));
            let mut u_trial = u.clone();
            for j in 0..n {
                u_trial[j] += delta[j];
            }
            match eval(&u_trial, &mut evals) {
                Ok((r_trial, cost_trial)) if cost_trial < cost => {
                    let rel_drop = (cost - cost_trial) / cost.max(1e-300);
                    let step = delta.amax();
                    u = u_trial;
                    r = r_trial;
                    cost = cost_trial;
                    lambda = (lambda / 3.0).max(1e-14);
                    improved = true;
                    if rel_drop < opts.ftol || step < opts.xtol {
                        converged = true;
                    }
                    break;
                }
                Ok(_) => {
                    lambda *= 4.0;
                }
                Err(LmError::EvalFailed(_)) => {
                    // step landed in an invalid region; treat as rejected
                    lambda *= 4.0;
                }
                Err(e) => return Err(e),
            }
        }
        if !improved {
            if evals >= opts.max_evaluations {
                break; // budget ran out mid-search, not an optimum
            }
            // no descent direction at any damping: local optimum
            converged = true;
        }
        if converged {
            break;
        }
    }

    // covariance in external coordinates from the last Jacobian
    let scale = transform.jacobian_diag(&u);
    let mut jac_ext = jac.clone();
    for j in 0..n {
        let s = scale[j];
        for i in 0..m {
            jac_ext[(i, j)] = if s.abs() > 1e-300 {
                jac[(i, j)] / s
            } else {
                0.0
            };
        }
    }
    let jtj = jac_ext.transpose() * &jac_ext;
    let covariance = jtj
        .clone()
        .try_inverse()
        .unwrap_or_else(|| pseudo_inverse(&jtj));

    let report = FitReport {
        params: transform.to_external(&u),
        cost,
        covariance,
        iterations,
        evaluations: evals,
        converged,
    };
    if report.converged {
        Ok(report)
    } else {
        Err(LmError::Budget(report))
    }
}

fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone()
        .svd(true, true)
        .pseudo_inverse(1e-12)
        .unwrap_or_else(|_| DMatrix::zeros(a.nrows(), a.ncols()))
}
