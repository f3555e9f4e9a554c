//! Minimization of a certified SoS-convex model by damped Newton.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::sos::SosModel;
use crate::tensor_poly::linalg::solve_spd_with_ridge;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const INITIAL_RIDGE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SubsolveResult {
    pub s: DVector<f64>,
    pub model_value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Default absolute gradient floor, `1e-12·(1 + |f0|)`.
pub fn default_abs_tol(model: &SosModel) -> f64 {
    1e-12 * (1.0 + model.f0().abs())
}

/// Damped Newton from `s = 0` until `‖∇m(s)‖ ≤ max(θ‖s‖^{p′−1}, abs_tol)`.
///
/// The model must be convex (certified) and coercive (`σ > 0`); every
/// accepted step decreases the model (up to rounding), so the result never
/// exceeds `m(0)` by more than a few ulps.
pub fn minimize_model(model: &SosModel, theta: f64, abs_tol: f64) -> Result<SubsolveResult> {
    minimize_model_from(model, theta, abs_tol, &vec![0.0; model.n()], 500)
}

/// As [`minimize_model`] but from an arbitrary starting point.
pub fn minimize_model_from(
    model: &SosModel,
    theta: f64,
    abs_tol: f64,
    start: &[f64],
    max_iter: usize,
) -> Result<SubsolveResult> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidConfig(format!("theta = {theta} must lie in (0, 1)")));
    }
    let q = model.p_prime() as i32;
    let mut s = DVector::from_column_slice(start);
    let mut inc = model.increment(s.as_slice());
    let mut iterations = 0;
    loop {
        let grad = model.gradient(s.as_slice());
        let gn = grad.norm();
        let target = (theta * s.norm().powi(q - 1)).max(abs_tol);
        if gn <= target || iterations == max_iter {
            return Ok(SubsolveResult {
                model_value: model.f0() + inc,
                s,
                grad_norm: gn,
                iterations,
                converged: gn <= target,
            });
        }
        let hess = model.hessian(s.as_slice());
        let (dir, _) = solve_spd_with_ridge(&hess, &(-&grad), INITIAL_RIDGE)
            .ok_or_else(|| Error::Subsolver("Newton system could not be factorized".into()))?;
        let slope = grad.dot(&dir);
        let dir = if slope < 0.0 { dir } else { -grad.clone() };
        let slope = grad.dot(&dir);
        // Below this the value test cannot resolve a decrease.
        let noise = 64.0 * f64::EPSILON * (model.f0().abs() + inc.abs() + 1.0);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let trial = &s + &dir * alpha;
            let trial_inc = model.increment(trial.as_slice());
            let armijo = trial_inc <= inc + ARMIJO * alpha * slope;
            let flat = trial_inc <= inc + noise && model.gradient(trial.as_slice()).norm() < gn;
            if armijo || flat {
                s = trial;
                inc = trial_inc;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::Subsolver(format!(
                "line search failed after {MAX_HALVINGS} halvings at gradient norm {gn:e}"
            )));
        }
        iterations += 1;
    }
}
