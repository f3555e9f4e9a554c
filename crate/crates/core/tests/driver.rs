mod common;

use std::sync::atomic::{AtomicUsize, Ordering};

use sosarp::driver::{assert_theory, run, ArpConfig, IterationRecord, Objective, RunStatus};
use sosarp::problems::{bundled_problem, BuiltinId, ProblemSpec};
use sosarp::sos::CaseTag;
use sosarp::tensor_poly::{DerivativeBundle, SymmetricTensor};
use sosarp::Result;

fn config(p: usize, epsilon: f64) -> ArpConfig {
    ArpConfig {
        p,
        epsilon,
        ..ArpConfig::default()
    }
}

/// Replays the σʳ update and the ratio from the recorded quantities alone.
fn replay(records: &[IterationRecord], cfg: &ArpConfig) {
    let mut sigma_r = cfg.sigma0();
    for r in records {
        assert_eq!(r.sigma_r, sigma_r, "iteration {}", r.k);
        assert_eq!(r.sigma, r.sigma_bar.max(r.sigma_r));
        if r.rho.is_finite() {
            let rho = (r.f_before - r.f_trial) / r.taylor_decrease;
            assert!((rho - r.rho).abs() <= 1e-12 * (1.0 + rho.abs()));
            assert_eq!(r.success, r.rho > cfg.eta);
        }
        if r.success {
            assert_eq!(r.f_after, r.f_trial);
            sigma_r = (cfg.gamma2 * r.sigma).max(cfg.sigma_min);
        } else {
            assert_eq!(r.f_after, r.f_before);
            sigma_r = cfg.gamma1 * r.sigma;
        }
    }
}

#[test]
fn quadratic_converges_with_unit_ratio() {
    let prob = bundled_problem("quad2").unwrap();
    let cfg = config(3, 1e-6);
    let res = run(&prob, &cfg).unwrap();
    assert_eq!(res.status, RunStatus::Converged);
    assert!(res.grad_norm <= 1e-6);
    assert!(!res.records.is_empty());
    for r in &res.records {
        assert!(r.success);
        assert!((r.rho - 1.0).abs() <= 1e-12, "rho {}", r.rho);
    }
    replay(&res.records, &cfg);
}

#[test]
fn starting_at_a_stationary_point_takes_no_iterations() {
    let prob = bundled_problem("quad2").unwrap();
    let cfg = ArpConfig {
        x0: Some(vec![0.0, 0.0]),
        ..config(3, 1e-6)
    };
    let res = run(&prob, &cfg).unwrap();
    assert_eq!(res.status, RunStatus::Converged);
    assert!(res.records.is_empty());
    assert_eq!(res.x, vec![0.0, 0.0]);
}

#[test]
fn nonconvex_run_visits_every_case() {
    let prob = bundled_problem("nonconvex_quartic").unwrap();
    let cfg = config(3, 1e-5);
    let res = run(&prob, &cfg).unwrap();
    assert_eq!(res.status, RunStatus::Converged);
    for tag in [CaseTag::StronglyConvex, CaseTag::Nonconvex, CaseTag::NearlyStronglyConvex] {
        assert!(res.records.iter().any(|r| r.case_tag == tag), "{tag} never seen");
    }
    let report = assert_theory(&res.records, &cfg);
    assert!(report.is_clean(), "{:?}", report.violations);
    replay(&res.records, &cfg);
}

#[test]
fn quartic_polynomials_at_order_four() {
    for name in ["convex_quartic", "nonconvex_quartic"] {
        let prob = bundled_problem(name).unwrap();
        let cfg = config(4, 1e-5);
        let res = run(&prob, &cfg).unwrap();
        assert_eq!(res.status, RunStatus::Converged, "{name}");
        for r in &res.records {
            assert!(r.success && (r.rho - 1.0).abs() <= 1e-8, "{name}: rho {}", r.rho);
        }
        assert!(assert_theory(&res.records, &cfg).is_clean());
    }
}

/// `f(x) = x²/2 + x⁶/6`; a cubic Taylor model badly underestimates its growth.
struct Sextic;

impl Objective for Sextic {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x[0] * x[0] + x[0].powi(6) / 6.0
    }

    fn derivatives(&self, x: &[f64], p: usize) -> Result<DerivativeBundle> {
        let v = x[0];
        let all = [v + v.powi(5), 1.0 + 5.0 * v.powi(4), 20.0 * v.powi(3), 60.0 * v * v];
        let tensors = (1..=p)
            .map(|j| SymmetricTensor::from_fn(j, 1, |_| all.get(j - 1).copied().unwrap_or(0.0)))
            .collect();
        DerivativeBundle::new(x.to_vec(), self.value(x), tensors)
    }

    fn default_start(&self) -> Vec<f64> {
        vec![-3.0]
    }
}

#[test]
fn rejected_steps_keep_the_iterate() {
    let cfg = ArpConfig {
        eta: 0.5,
        sigma0: Some(1e-8),
        ..config(3, 1e-6)
    };
    let res = run(&Sextic, &cfg).unwrap();
    assert_eq!(res.status, RunStatus::Converged);
    assert!(res.unsuccessful > 0, "{:?}", res.records.iter().map(|r| r.rho).collect::<Vec<_>>());
    replay(&res.records, &cfg);
    let report = assert_theory(&res.records, &cfg);
    assert!(report.is_clean(), "{:?}", report.violations);
    let mut f = f64::INFINITY;
    for r in res.records.iter().filter(|r| r.success) {
        assert!(r.f_after <= f);
        f = r.f_after;
    }
}

#[test]
fn iteration_cap_is_respected() {
    let prob = ProblemSpec::builtin(BuiltinId::ScaledRosenbrock, 2).unwrap();
    let cfg = ArpConfig {
        max_iter: 3,
        ..config(3, 1e-8)
    };
    let res = run(&prob, &cfg).unwrap();
    assert_eq!(res.status, RunStatus::MaxIterations);
    assert_eq!(res.records.len(), 3);
}

#[test]
fn wrong_start_dimension_is_rejected() {
    let prob = bundled_problem("quad2").unwrap();
    let cfg = ArpConfig {
        x0: Some(vec![1.0]),
        ..config(3, 1e-5)
    };
    assert!(run(&prob, &cfg).is_err());
}

/// [`Sextic`] with a call counter on the derivative oracle.
#[derive(Default)]
struct Counted {
    calls: AtomicUsize,
}

impl Objective for Counted {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        Sextic.value(x)
    }

    fn derivatives(&self, x: &[f64], p: usize) -> Result<DerivativeBundle> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Sextic.derivatives(x, p)
    }

    fn default_start(&self) -> Vec<f64> {
        Sextic.default_start()
    }
}

#[test]
fn derivatives_are_evaluated_once_per_accepted_point() {
    let prob = Counted::default();
    let cfg = ArpConfig {
        eta: 0.5,
        sigma0: Some(1e-8),
        ..config(3, 1e-8)
    };
    let res = run(&prob, &cfg).unwrap();
    assert_eq!(res.status, RunStatus::Converged);
    assert!(res.unsuccessful > 0);
    assert_eq!(prob.calls.load(Ordering::SeqCst), res.successful + 1);
    assert!(res.x[0].abs() < 1e-7);
}
