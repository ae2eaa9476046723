use nalgebra::{DMatrix, DVector};

use super::{Dataset, FitModel};
use crate::error::{ensure, Error, Result};

/// Iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Stop once an accepted step changes the residual by less than this
    /// fraction.
    pub tol: f64,
    pub damping_init: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-10,
            damping_init: 1e-3,
        }
    }
}

/// Parameters stop moving when every step component is below this fraction
/// of the parameter.
const STEP_TOL: f64 = 1e-12;
const MAX_DAMPING: f64 = 1e20;
const SINGULAR_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: &'static str,
    pub parameter_names: Vec<&'static str>,
    pub parameters: Vec<f64>,
    /// One-sigma errors from the curvature matrix scaled by the residual
    /// variance. NaN when the curvature is singular.
    pub standard_errors: Vec<f64>,
    /// Weighted residual sum of squares at the solution.
    pub residual_sum_of_squares: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residual sum of squares after the initial guess and after every
    /// accepted step.
    pub trace: Vec<f64>,
    pub diagnostic: Option<String>,
}

impl FitResult {
    pub fn parameter(&self, name: &str) -> Option<(f64, f64)> {
        self.parameter_names
            .iter()
            .position(|&n| n == name)
            .map(|i| (self.parameters[i], self.standard_errors[i]))
    }
}

struct Problem<'a> {
    model: &'a FitModel,
    data: &'a Dataset,
}

impl Problem<'_> {
    fn residuals(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.data.len(),
            (0..self.data.len()).map(|i| {
                (self.model.evaluate(theta, self.data.x[i]) - self.data.y[i]) * self.data.inv_sigma(i)
            }),
        )
    }

    fn jacobian(&self, theta: &[f64], r: &DVector<f64>) -> DMatrix<f64> {
        let m = self.data.len();
        let n = theta.len();
        let mut jac = DMatrix::zeros(m, n);
        let mut probe = theta.to_vec();
        for j in 0..n {
            let mut size = (1e-6 * theta[j].abs()).max(1e-9);
            // A step lost to rounding leaves an all-zero column; widen it
            // until the residuals respond (e.g. a center at 0 on a GHz axis).
            for _ in 0..12 {
                let h = if theta[j] + size > self.model.bounds[j].1 { -size } else { size };
                probe[j] = theta[j] + h;
                let shifted = self.residuals(&probe);
                probe[j] = theta[j];
                for i in 0..m {
                    jac[(i, j)] = (shifted[i] - r[i]) / h;
                }
                if jac.column(j).iter().any(|&v| v != 0.0) {
                    break;
                }
                size *= 1e3;
            }
        }
        jac
    }
}

fn ssr(r: &DVector<f64>) -> f64 {
    r.norm_squared()
}

/// Column scaling `1/sqrt(diag(JᵀJ))`; `None` if a parameter has no
/// influence on the residuals.
fn column_scale(jtj: &DMatrix<f64>) -> Option<DVector<f64>> {
    let d = DVector::from_iterator(jtj.nrows(), (0..jtj.nrows()).map(|i| jtj[(i, i)]));
    if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    Some(d.map(|v| 1.0 / v.sqrt()))
}

/// Standard errors from `s² (JᵀJ)⁻¹`.
fn standard_errors(jac: &DMatrix<f64>, ssr: f64, dof: usize) -> Option<Vec<f64>> {
    let jtj = jac.transpose() * jac;
    let scale = column_scale(&jtj)?;
    let scaled = DMatrix::from_fn(jtj.nrows(), jtj.ncols(), |i, j| jtj[(i, j)] * scale[i] * scale[j]);
    // The scaled matrix has unit diagonal, so its smallest eigenvalue is an
    // absolute measure of how close the parameters are to degenerate.
    let min_eigenvalue = scaled.clone().symmetric_eigenvalues().min();
    if !(min_eigenvalue > SINGULAR_EIGENVALUE) {
        return None;
    }
    let inv = scaled.cholesky()?.inverse();
    let variance = ssr / dof.max(1) as f64;
    Some(
        (0..jtj.nrows())
            .map(|i| (inv[(i, i)] * variance).sqrt() * scale[i])
            .collect(),
    )
}

/// Fits `model` to `data` starting from the model's initial-guess heuristic.
pub fn fit(model: &FitModel, data: &Dataset, options: &FitOptions) -> Result<FitResult> {
    let initial = model.initial_guess(data);
    fit_from(model, data, &initial, options)
}

/// Fits `model` to `data` starting from `initial`.
pub fn fit_from(model: &FitModel, data: &Dataset, initial: &[f64], options: &FitOptions) -> Result<FitResult> {
    let n = model.num_parameters();
    ensure(initial.len() == n, "initial", format!("expected {n} parameters"))?;
    if data.len() < n {
        return Err(Error::Fit(format!(
            "{} points cannot constrain {} parameters of `{}`",
            data.len(),
            n,
            model.name
        )));
    }
    ensure(options.tol > 0.0, "tol", "must be positive")?;
    ensure(options.damping_init > 0.0, "damping_init", "must be positive")?;

    let problem = Problem { model, data };
    let mut theta = model.project(initial);
    let mut r = problem.residuals(&theta);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit(format!(
            "model `{}` is not finite at the initial parameters {:?}",
            model.name, theta
        )));
    }
    let mut cost = ssr(&r);
    let mut trace = vec![cost];
    let mut damping = options.damping_init;
    let mut converged = false;
    let mut diagnostic = None;
    let mut iterations = 0;

    'outer: while iterations < options.max_iter {
        if cost == 0.0 {
            converged = true;
            break;
        }
        iterations += 1;
        let jac = problem.jacobian(&theta, &r);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let Some(scale) = column_scale(&jtj) else {
            diagnostic = Some("singular curvature: a parameter does not affect the residuals".into());
            break;
        };
        let scaled = DMatrix::from_fn(n, n, |i, j| jtj[(i, j)] * scale[i] * scale[j]);
        let scaled_grad = grad.component_mul(&scale);

        loop {
            let damped = &scaled + DMatrix::identity(n, n) * damping;
            let Some(chol) = damped.cholesky() else {
                damping *= 10.0;
                if damping > MAX_DAMPING {
                    diagnostic = Some("singular curvature: damped system not positive definite".into());
                    break 'outer;
                }
                continue;
            };
            let step = chol.solve(&(-&scaled_grad)).component_mul(&scale);
            let candidate: Vec<f64> = model.project(
                &theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect::<Vec<_>>(),
            );
            let small_step = theta
                .iter()
                .zip(&candidate)
                .all(|(t, c)| (c - t).abs() <= STEP_TOL * t.abs().max(f64::MIN_POSITIVE));
            let r_new = problem.residuals(&candidate);
            let cost_new = ssr(&r_new);
            if cost_new.is_finite() && cost_new < cost {
                let relative_change = (cost - cost_new) / cost;
                theta = candidate;
                r = r_new;
                cost = cost_new;
                trace.push(cost);
                damping = (damping / 10.0).max(1e-15);
                if relative_change < options.tol || small_step {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            if small_step {
                // No representable step lowers the residual.
                converged = true;
                break 'outer;
            }
            damping *= 10.0;
            if damping > MAX_DAMPING {
                converged = true;
                break 'outer;
            }
        }
    }
    if !converged && diagnostic.is_none() {
        diagnostic = Some(format!("no convergence within {} iterations", options.max_iter));
    }

    let jac = problem.jacobian(&theta, &r);
    let standard_errors = match standard_errors(&jac, cost, data.len() - n) {
        Some(se) => se,
        None => {
            converged = false;
            diagnostic.get_or_insert_with(|| "singular curvature at the solution".into());
            vec![f64::NAN; n]
        }
    };

    Ok(FitResult {
        model: model.name,
        parameter_names: model.parameter_names.to_vec(),
        parameters: model.canonicalize(theta),
        standard_errors,
        residual_sum_of_squares: cost,
        iterations,
        converged,
        trace,
        diagnostic,
    })
}
