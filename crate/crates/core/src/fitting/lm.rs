//! Levenberg–Marquardt least squares with Marquardt diagonal scaling.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub trait LeastSquares {
    fn n_params(&self) -> usize;

    /// Residuals (model − data) at `p`.
    fn residuals(&self, p: &[f64]) -> Result<Vec<f64>>;

    /// Jacobian ∂r_i/∂p_j. Defaults to central differences.
    fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let r0 = self.residuals(p)?;
        let mut j = DMatrix::zeros(r0.len(), p.len());
        let mut q = p.to_vec();
        for k in 0..p.len() {
            let h = 1e-6 * p[k].abs().max(1e-3);
            q[k] = p[k] + h;
            let rp = self.residuals(&q)?;
            q[k] = p[k] - h;
            let rm = self.residuals(&q)?;
            q[k] = p[k];
            for i in 0..r0.len() {
                j[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        Ok(j)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when ‖δp‖ ≤ tol·(‖p‖ + tol).
    pub relative_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            relative_tolerance: 1e-10,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    /// s²·(JᵀJ)⁻¹ at the optimum, when JᵀJ is invertible and dof > 0.
    pub covariance: Option<DMatrix<f64>>,
}

impl LmResult {
    pub fn std_error(&self, k: usize) -> f64 {
        self.covariance
            .as_ref()
            .map(|c| c[(k, k)].max(0.0).sqrt())
            .unwrap_or(f64::NAN)
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

pub fn levenberg_marquardt<P: LeastSquares>(problem: &P, p0: &[f64], opts: LmOptions) -> Result<LmResult> {
    let n = problem.n_params();
    if p0.len() != n {
        return Err(Error::invalid("initial parameter vector has the wrong length"));
    }
    let mut p = p0.to_vec();
    let mut r = problem.residuals(&p)?;
    if r.len() < n {
        return Err(Error::InsufficientData(format!(
            "{} residuals for {n} parameters",
            r.len()
        )));
    }
    let mut cost = sum_sq(&r);
    if !cost.is_finite() {
        return Err(Error::numerical("non-finite residuals at the initial guess"));
    }
    let mut lambda = opts.initial_damping;
    let mut jac = problem.jacobian(&p)?;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * DVector::from_column_slice(&r);
        let diag_floor = jtj.diagonal().max() * 1e-30;
        let mut a = jtj.clone();
        for k in 0..n {
            a[(k, k)] += lambda * jtj[(k, k)].max(diag_floor).max(f64::MIN_POSITIVE);
        }
        let step = match a.cholesky() {
            Some(ch) => -ch.solve(&grad),
            None => {
                lambda *= 10.0;
                if lambda > 1e30 {
                    break;
                }
                continue;
            }
        };
        let p_norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        let small = step.norm() <= opts.relative_tolerance * (p_norm + opts.relative_tolerance);
        let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let r_trial = problem.residuals(&trial)?;
        let c_trial = sum_sq(&r_trial);
        if c_trial.is_finite() && c_trial < cost {
            p = trial;
            r = r_trial;
            cost = c_trial;
            lambda = (lambda / 10.0).max(1e-15);
            if small {
                converged = true;
                break;
            }
            jac = problem.jacobian(&p)?;
        } else {
            if small {
                // no further descent is resolvable at this precision
                converged = true;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e30 {
                converged = true;
                break;
            }
        }
    }

    let residual_norm = cost.sqrt();
    if !converged {
        return Err(Error::FitFailure {
            message: format!("no convergence after {iterations} iterations"),
            last_params: p,
            residual_norm,
        });
    }
    let dof = r.len().saturating_sub(n);
    let covariance = if dof > 0 {
        let jtj = jac.transpose() * &jac;
        jtj.try_inverse().map(|inv| inv * (cost / dof as f64))
    } else {
        None
    };
    Ok(LmResult {
        params: p,
        residual_norm,
        iterations,
        covariance,
    })
}
