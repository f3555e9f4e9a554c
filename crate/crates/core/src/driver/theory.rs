use std::fmt;

use super::{ArpConfig, IterationRecord, StepFlag};
use crate::sos::{regularization_power, CaseTag};

/// The per-iteration and per-run inequalities replayed over a record stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TheoryCheck {
    /// `f(x_k) − T_p(x_k, s_k)` dominates the case-specific model terms.
    ModelDecrease,
    /// `f_before − f_after ≥ η · taylor_decrease` on successes.
    SufficientDecrease,
    /// Unsuccessful count bounded by successes and the σ range.
    IterationCount,
    /// `p = 3`, strongly convex successes: decrease `≥ η(δ/18)‖s‖² − 1e-10`.
    StronglyConvexDecrease,
    /// `f` nonincreasing over successful iterations.
    Monotone,
}

impl fmt::Display for TheoryCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TheoryCheck::ModelDecrease => "model_decrease",
            TheoryCheck::SufficientDecrease => "sufficient_decrease",
            TheoryCheck::IterationCount => "iteration_count",
            TheoryCheck::StronglyConvexDecrease => "strongly_convex_decrease",
            TheoryCheck::Monotone => "monotone",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub check: TheoryCheck,
    /// `None` for run-level checks.
    pub iteration: Option<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TheoryReport {
    pub violations: Vec<Violation>,
    /// Number of individual inequalities evaluated.
    pub evaluated: usize,
}

impl TheoryReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations_of(&self, check: TheoryCheck) -> impl Iterator<Item = &Violation> + '_ {
        self.violations.iter().filter(move |v| v.check == check)
    }

    fn fail(&mut self, check: TheoryCheck, iteration: Option<usize>, detail: String) {
        self.violations.push(Violation {
            check,
            iteration,
            detail,
        });
    }
}

const RELATIVE_SLACK: f64 = 1e-8;

pub fn assert_theory(records: &[IterationRecord], config: &ArpConfig) -> TheoryReport {
    let mut report = TheoryReport::default();
    let q = regularization_power(config.p) as i32;

    let mut last_f: Option<f64> = None;
    for r in records {
        let has_step = matches!(r.flag, None | Some(StepFlag::NonpositiveDenominator));
        if has_step {
            let s2 = r.step_norm * r.step_norm;
            let reg = r.sigma / f64::from(q) * r.step_norm.powi(q);
            let rhs = match r.case_tag {
                CaseTag::StronglyConvex => reg,
                CaseTag::Nonconvex => 0.5 * (r.delta - r.lambda_min) * s2 + reg,
                CaseTag::NearlyStronglyConvex => 0.5 * r.delta * s2 + reg,
            };
            let lhs = r.taylor_decrease;
            report.evaluated += 1;
            if lhs < rhs - RELATIVE_SLACK * lhs.abs().max(rhs.abs()) {
                report.fail(
                    TheoryCheck::ModelDecrease,
                    Some(r.k),
                    format!("{} decrease {lhs:e} below {rhs:e}", r.case_tag),
                );
            }
        }
        if r.success {
            let actual = r.f_before - r.f_after;
            let needed = config.eta * r.taylor_decrease;
            report.evaluated += 1;
            if actual < needed - 1e-12 * needed.abs() {
                report.fail(
                    TheoryCheck::SufficientDecrease,
                    Some(r.k),
                    format!("actual decrease {actual:e} below eta * predicted {needed:e}"),
                );
            }
            if config.p == 3 && r.case_tag == CaseTag::StronglyConvex {
                let bound = config.eta * r.delta / 18.0 * r.step_norm * r.step_norm - 1e-10;
                report.evaluated += 1;
                if actual < bound {
                    report.fail(
                        TheoryCheck::StronglyConvexDecrease,
                        Some(r.k),
                        format!("decrease {actual:e} below {bound:e}"),
                    );
                }
            }
            let prev = last_f.unwrap_or(r.f_before);
            report.evaluated += 1;
            if r.f_after > prev {
                report.fail(
                    TheoryCheck::Monotone,
                    Some(r.k),
                    format!("f rose from {prev:e} to {:e}", r.f_after),
                );
            }
            last_f = Some(r.f_after);
        }
    }

    // The count bound holds for any prefix ending in a successful iteration.
    if let Some(end) = records.iter().rposition(|r| r.success) {
        let prefix = &records[..=end];
        let succ = prefix.iter().filter(|r| r.success).count() as f64;
        let unsucc = prefix.len() as f64 - succ;
        let sigma_max = records.iter().map(|r| r.sigma).fold(0.0, f64::max);
        let lg1 = config.gamma1.ln();
        let bound = succ * (1.0 + config.gamma2.ln().abs() / lg1) + (sigma_max / config.sigma0()).ln() / lg1;
        report.evaluated += 1;
        if unsucc > bound + 1e-12 * (1.0 + bound.abs()) {
            report.fail(
                TheoryCheck::IterationCount,
                None,
                format!("{unsucc} unsuccessful iterations exceed bound {bound:.6}"),
            );
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(k: usize, success: bool, sigma: f64) -> IterationRecord {
        IterationRecord {
            k,
            case_tag: CaseTag::StronglyConvex,
            lambda_min: 1.0,
            delta: 0.1,
            sigma_bar: 0.0,
            sigma_r: sigma,
            sigma,
            step_norm: 0.5,
            rho: if success { 1.0 } else { 0.0 },
            f_before: 1.0,
            f_trial: if success { 0.5 } else { 1.0 },
            f_after: if success { 0.5 } else { 1.0 },
            taylor_decrease: 0.5,
            grad_norm: 1.0,
            success,
            flag: None,
            subsolver_iterations: 1,
        }
    }

    #[test]
    fn single_success_is_clean() {
        let cfg = ArpConfig::default();
        let rep = assert_theory(&[record(0, true, 1e-8)], &cfg);
        assert!(rep.is_clean(), "{rep:?}");
    }

    #[test]
    fn detects_model_decrease_violation() {
        let cfg = ArpConfig::default();
        let mut r = record(0, true, 100.0);
        r.taylor_decrease = 0.01;
        r.f_after = 0.999;
        let rep = assert_theory(&[r], &cfg);
        assert_eq!(rep.violations_of(TheoryCheck::ModelDecrease).count(), 1);
    }

    #[test]
    fn detects_excess_failures() {
        let cfg = ArpConfig::default();
        // five failures at constant σ cannot happen under the update rule
        let mut recs: Vec<_> = (0..5).map(|k| record(k, false, 1e-8)).collect();
        recs.push(record(5, true, 1e-8));
        let rep = assert_theory(&recs, &cfg);
        assert_eq!(rep.violations_of(TheoryCheck::IterationCount).count(), 1);
    }

    #[test]
    fn detects_increase() {
        let cfg = ArpConfig::default();
        let a = record(0, true, 1e-8);
        let mut b = record(1, true, 1e-8);
        b.f_before = 0.5;
        b.f_after = 0.6;
        let rep = assert_theory(&[a, b], &cfg);
        assert!(rep.violations_of(TheoryCheck::Monotone).count() >= 1);
    }
}
