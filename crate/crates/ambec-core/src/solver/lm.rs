//! Small damped least-squares (Levenberg-Marquardt) minimizer with a central
//! finite-difference Jacobian. Deterministic: fixed iteration order, no
//! randomness.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// relative decrease of the cost below which we stop
    pub cost_tol: f64,
    /// step-size stop: ||δ|| < step_tol (1 + ||x||)
    pub step_tol: f64,
    /// gradient stop: ||Jᵀr||∞ < grad_tol
    pub grad_tol: f64,
    /// per-parameter finite-difference step scale: h_i = fd_step max(1, |x_i|)
    pub fd_step: f64,
    pub lambda_init: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            cost_tol: 1e-12,
            step_tol: 1e-12,
            grad_tol: 1e-12,
            fd_step: 1e-6,
            lambda_init: 1e-3,
            lambda_up: 10.0,
            lambda_down: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmStop {
    CostTol,
    StepTol,
    GradTol,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub x: Vec<f64>,
    /// 1/2 ||r||²
    pub cost: f64,
    pub residual_sup: f64,
    pub iterations: usize,
    pub stop: LmStop,
    /// Jacobian at the final iterate (for rank / null-space analysis)
    pub jacobian: DMatrix<f64>,
}

fn eval<F>(f: &mut F, x: &[f64]) -> Result<DVector<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let r = f(x)?;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "residual returned non-finite entries".into(),
        ));
    }
    Ok(DVector::from_vec(r))
}

fn jacobian<F>(f: &mut F, x: &[f64], m: usize, h_scale: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = h_scale * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let rp = eval(f, &xp)?;
        xp[j] = x[j] - h;
        let rm = eval(f, &xp)?;
        xp[j] = x[j];
        let inv = 1.0 / (2.0 * h);
        for i in 0..m {
            jac[(i, j)] = (rp[i] - rm[i]) * inv;
        }
    }
    Ok(jac)
}

/// Minimize 1/2 ||r(x)||² starting from `x0`. Domain violations inside `f`
/// (Err returns) are treated as rejected trial steps; an error at the start
/// point is fatal.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &LmOptions) -> Result<LmResult>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if x0.is_empty() {
        return Err(Error::InvalidArgument("no unknowns to solve for".into()));
    }
    let mut x = DVector::from_vec(x0.to_vec());
    let mut r = eval(&mut f, x.as_slice())?;
    let m = r.len();
    if m < x.len() {
        return Err(Error::InvalidArgument(format!(
            "{} unknowns but only {} residual components",
            x.len(),
            m
        )));
    }
    let mut cost = 0.5 * r.norm_squared();
    let mut lambda = opts.lambda_init;
    let mut jac = jacobian(&mut f, x.as_slice(), m, opts.fd_step)?;
    let mut stop = LmStop::MaxIterations;
    let mut iterations = 0;

    'outer: for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        let grad = jac.transpose() * &r;
        if grad.amax() < opts.grad_tol {
            stop = LmStop::GradTol;
            break;
        }
        let jtj = jac.transpose() * &jac;

        // inner damping loop
        let mut accepted = false;
        for _ in 0..40 {
            // Marquardt scaling: damp proportionally to the diagonal
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                let d = jtj[(i, i)].max(1e-30);
                a[(i, i)] += lambda * d;
            }
            let delta = match a.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    lambda *= opts.lambda_up;
                    continue;
                }
            };
            let x_trial = &x + &delta;
            match eval(&mut f, x_trial.as_slice()) {
                Ok(r_trial) => {
                    let cost_trial = 0.5 * r_trial.norm_squared();
                    if cost_trial.is_finite() && cost_trial < cost {
                        let rel_drop = (cost - cost_trial) / cost.max(1e-300);
                        let step_small = delta.norm() < opts.step_tol * (1.0 + x.norm());
                        x = x_trial;
                        r = r_trial;
                        cost = cost_trial;
                        lambda = (lambda / opts.lambda_down).max(1e-14);
                        accepted = true;
                        if rel_drop < opts.cost_tol {
                            stop = LmStop::CostTol;
                            jac = jacobian(&mut f, x.as_slice(), m, opts.fd_step)?;
                            break 'outer;
                        }
                        if step_small {
                            stop = LmStop::StepTol;
                            jac = jacobian(&mut f, x.as_slice(), m, opts.fd_step)?;
                            break 'outer;
                        }
                        break;
                    }
                    lambda *= opts.lambda_up;
                }
                // out-of-domain trial: damp harder and retry
                Err(_) => lambda *= opts.lambda_up,
            }
            if lambda > 1e14 {
                stop = LmStop::StepTol;
                break 'outer;
            }
        }
        if !accepted {
            stop = LmStop::StepTol;
            break;
        }
        jac = jacobian(&mut f, x.as_slice(), m, opts.fd_step)?;
    }

    let residual_sup = r.amax();
    Ok(LmResult {
        x: x.as_slice().to_vec(),
        cost,
        residual_sup,
        iterations,
        stop,
        jacobian: jac,
    })
}

/// Number of numerically-zero singular values of the Jacobian: the dimension
/// of the local solution continuum (gauge directions the problem leaves free).
pub fn null_space_dim(jac: &DMatrix<f64>, rel_tol: f64) -> usize {
    let svd = jac.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if smax == 0.0 {
        return jac.ncols();
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s < rel_tol * smax)
        .count()
}
