//! The outer adaptive regularization loop and its per-iteration audit.

mod config;
mod theory;

use std::fmt;

use log::{debug, info};
use nalgebra::DMatrix;

pub use config::ArpConfig;
pub use theory::{assert_theory, TheoryCheck, TheoryReport, Violation};

use crate::error::{Error, Result};
use crate::sos::{min_sigma_sos, CaseTag, SosModel};
use crate::subproblem::{default_abs_tol, minimize_model};
use crate::tensor_poly::{linalg, taylor_increment, DerivativeBundle};

/// A smooth objective with exact derivatives up to some order.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Value and derivative tensors of orders `1..=p` at `x`.
    fn derivatives(&self, x: &[f64], p: usize) -> Result<DerivativeBundle>;
    /// Starting point used when the configuration does not give one.
    fn default_start(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
}

pub fn classify_case(lambda_min: f64, delta: f64) -> CaseTag {
    if lambda_min >= delta {
        CaseTag::StronglyConvex
    } else if lambda_min <= 0.0 {
        CaseTag::Nonconvex
    } else {
        CaseTag::NearlyStronglyConvex
    }
}

/// Builds the case-dependent model from a derivative bundle of order `p ≥ 3`.
pub fn build_model(bundle: &DerivativeBundle, case_tag: CaseTag, delta: f64, sigma: f64) -> Result<SosModel> {
    if bundle.order() < 3 {
        return Err(Error::ContractViolation(format!(
            "bundle carries order {}, need at least 3",
            bundle.order()
        )));
    }
    let h = bundle.hessian();
    let lmin = linalg::lambda_min(&h);
    if classify_case(lmin, delta) != case_tag {
        return Err(Error::ContractViolation(format!(
            "case {case_tag} inconsistent with lambda_min = {lmin:e}, delta = {delta:e}"
        )));
    }
    let n = bundle.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let h_bar = match case_tag {
        CaseTag::StronglyConvex => h,
        CaseTag::Nonconvex => h + id * (delta - lmin),
        CaseTag::NearlyStronglyConvex => h + id * delta,
    };
    SosModel::new(
        bundle.order(),
        bundle.value(),
        bundle.gradient(),
        h_bar,
        bundle.tensors()[2..].to_vec(),
        delta,
        sigma,
        case_tag,
    )
}

/// `ρ = (f_k − f_trial) / (f_k − T_p(x_k, s_k))`.
pub fn ratio_test(f_k: f64, f_trial: f64, taylor_at_step: f64) -> f64 {
    (f_k - f_trial) / (f_k - taylor_at_step)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIterations,
    SubsolverFailure,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIterations => "max_iterations",
            RunStatus::SubsolverFailure => "subsolver_failure",
        })
    }
}

/// Diagnostics attached to an iteration that did not produce a usable step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepFlag {
    StationaryStep,
    NonpositiveDenominator,
    SubsolverFailed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub case_tag: CaseTag,
    pub lambda_min: f64,
    pub delta: f64,
    pub sigma_bar: f64,
    pub sigma_r: f64,
    pub sigma: f64,
    pub step_norm: f64,
    pub rho: f64,
    pub f_before: f64,
    pub f_trial: f64,
    pub f_after: f64,
    /// `f(x_k) − T_p(x_k, s_k)`.
    pub taylor_decrease: f64,
    /// `‖∇f(x_k)‖`.
    pub grad_norm: f64,
    pub success: bool,
    pub flag: Option<StepFlag>,
    pub subsolver_iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub status: RunStatus,
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub records: Vec<IterationRecord>,
    pub successful: usize,
    pub unsuccessful: usize,
    pub sigma_max_observed: f64,
}

const MAX_CONSECUTIVE_FAILURES: usize = 60;

struct Point {
    x: Vec<f64>,
    bundle: DerivativeBundle,
    grad_norm: f64,
    lambda_min: f64,
    /// Model at σ = 0 and its σ̄; filled lazily, then reused while x is fixed.
    model: Option<(SosModel, f64)>,
}

impl Point {
    fn new<O: Objective + ?Sized>(problem: &O, x: Vec<f64>, p: usize) -> Result<Self> {
        let bundle = problem.derivatives(&x, p)?;
        let grad_norm = bundle.gradient().norm();
        let lambda_min = linalg::lambda_min(&bundle.hessian());
        Ok(Self {
            x,
            bundle,
            grad_norm,
            lambda_min,
            model: None,
        })
    }
}

pub fn run<O: Objective + ?Sized>(problem: &O, config: &ArpConfig) -> Result<RunResult> {
    config.validate()?;
    let x0 = config.x0.clone().unwrap_or_else(|| problem.default_start());
    if x0.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: x0.len(),
        });
    }
    let p = config.p;
    let delta = config.delta();
    let mut point = Point::new(problem, x0, p)?;
    let mut sigma_r = config.sigma0();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut consecutive_failures = 0;

    let status = loop {
        if point.grad_norm <= config.epsilon {
            break RunStatus::Converged;
        }
        if records.len() >= config.max_iter {
            break RunStatus::MaxIterations;
        }
        if consecutive_failures >= MAX_CONSECUTIVE_FAILURES {
            break RunStatus::SubsolverFailure;
        }
        let k = records.len();
        let case_tag = classify_case(point.lambda_min, delta);
        if point.model.is_none() {
            let base = build_model(&point.bundle, case_tag, delta, 0.0)?;
            let (sigma_bar, _) = min_sigma_sos(&base)?;
            point.model = Some((base, sigma_bar));
        }
        let (base, sigma_bar) = point.model.as_ref().expect("model cached above");
        let sigma_bar = *sigma_bar;
        let sigma = sigma_bar.max(sigma_r);
        let model = base.with_sigma(sigma);
        let f_k = point.bundle.value();

        let mut rec = IterationRecord {
            k,
            case_tag,
            lambda_min: point.lambda_min,
            delta,
            sigma_bar,
            sigma_r,
            sigma,
            step_norm: 0.0,
            rho: f64::NAN,
            f_before: f_k,
            f_trial: f_k,
            f_after: f_k,
            taylor_decrease: 0.0,
            grad_norm: point.grad_norm,
            success: false,
            flag: None,
            subsolver_iterations: 0,
        };

        let mut next = None;
        match minimize_model(&model, config.theta, default_abs_tol(&model)) {
            Err(e) => {
                debug!("iteration {k}: {e}");
                rec.flag = Some(StepFlag::SubsolverFailed);
            }
            Ok(sub) => {
                rec.subsolver_iterations = sub.iterations;
                let s = sub.s.as_slice();
                rec.step_norm = sub.s.norm();
                let xnorm = point.x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if rec.step_norm <= 1e-14 * (1.0 + xnorm) {
                    rec.flag = Some(StepFlag::StationaryStep);
                } else {
                    let decrease = -taylor_increment(&point.bundle, s)?;
                    rec.taylor_decrease = decrease;
                    let x_trial: Vec<f64> = point.x.iter().zip(s).map(|(a, b)| a + b).collect();
                    let f_trial = problem.value(&x_trial);
                    rec.f_trial = f_trial;
                    if decrease <= 0.0 {
                        rec.flag = Some(StepFlag::NonpositiveDenominator);
                    } else {
                        rec.rho = (f_k - f_trial) / decrease;
                        if rec.rho > config.eta {
                            rec.success = true;
                            rec.f_after = f_trial;
                            next = Some(x_trial);
                        }
                    }
                }
            }
        }

        debug!(
            "k={k} case={case_tag} sigma={sigma:.3e} |s|={:.3e} rho={:.6} f={:.12e}",
            rec.step_norm, rec.rho, rec.f_after
        );
        if rec.success {
            sigma_r = (config.gamma2 * sigma).max(config.sigma_min);
            consecutive_failures = 0;
        } else {
            sigma_r = config.gamma1 * sigma;
            consecutive_failures += 1;
        }
        records.push(rec);
        if let Some(x) = next {
            point = Point::new(problem, x, p)?;
        }
    };

    let successful = records.iter().filter(|r| r.success).count();
    let sigma_max_observed = records.iter().map(|r| r.sigma).fold(0.0, f64::max);
    info!(
        "run finished: {status}, {} iterations ({successful} successful), f = {:e}, |g| = {:e}",
        records.len(),
        point.bundle.value(),
        point.grad_norm
    );
    Ok(RunResult {
        status,
        f: point.bundle.value(),
        grad_norm: point.grad_norm,
        x: point.x,
        unsuccessful: records.len() - successful,
        successful,
        records,
        sigma_max_observed,
    })
}
