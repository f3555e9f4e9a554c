mod common;

use common::{random_cubic_model, rng};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sosarp::sos::{min_sigma_sos, CaseTag, SosModel};
use sosarp::subproblem::{default_abs_tol, minimize_model, minimize_model_from};
use sosarp::tensor_poly::SymmetricTensor;

fn certified(model: &SosModel) -> SosModel {
    let (sigma_bar, _) = min_sigma_sos(model).unwrap();
    model.with_sigma(sigma_bar.max(0.5) * 1.5)
}

#[test]
fn restarts_agree_on_the_minimum() {
    let mut r = rng(31);
    for seed in 0..5 {
        let m = certified(&random_cubic_model(3, 0.2, 100 + seed));
        let tol = default_abs_tol(&m);
        let best = minimize_model(&m, 1e-10, tol).unwrap();
        assert!(best.converged);
        for _ in 0..10 {
            let start: Vec<f64> = (0..3).map(|_| r.random_range(-3.0..3.0)).collect();
            let other = minimize_model_from(&m, 1e-10, tol, &start, 500).unwrap();
            assert!(other.converged, "{other:?} best {best:?}");
            assert!((other.model_value - best.model_value).abs() <= 1e-9 * (1.0 + best.model_value.abs()));
            assert!((&other.s - &best.s).norm() <= 1e-5 * (1.0 + best.s.norm()));
        }
    }
}

#[test]
fn stopping_rule_holds() {
    for seed in 0..5 {
        let m = certified(&random_cubic_model(2, 0.1, 200 + seed));
        let theta = 0.5;
        let res = minimize_model(&m, theta, default_abs_tol(&m)).unwrap();
        let g = m.gradient(res.s.as_slice()).norm();
        let bound = (theta * res.s.norm().powi(m.p_prime() as i32 - 1)).max(default_abs_tol(&m));
        assert!(g <= bound, "seed {seed}: {g} > {bound}");
        assert!(res.model_value <= m.f0());
    }
}

/// Root of `φ'(t) = 0` for the axis-aligned model by bisection.
fn axis_minimizer(g: f64, h: f64, t3: f64, sigma: f64) -> f64 {
    let dphi = |t: f64| g + h * t + 0.5 * t3 * t * t + sigma * t.abs().powi(2) * t;
    let (mut lo, mut hi) = (-100.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dphi(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn axis_aligned_model_reduces_to_one_dimension() {
    // Data only along e₀, so the minimizer stays on that axis.
    let (g, h, t3) = (1.3, 0.4, -2.0);
    let hbar = DMatrix::from_diagonal(&DVector::from_vec(vec![h, 2.0]));
    let tensor = SymmetricTensor::from_fn(3, 2, |k| if k.iter().all(|&i| i == 0) { t3 } else { 0.0 });
    let base = SosModel::new(
        3,
        0.0,
        DVector::from_vec(vec![g, 0.0]),
        hbar,
        vec![tensor],
        0.4,
        0.0,
        CaseTag::StronglyConvex,
    )
    .unwrap();
    let m = certified(&base);
    let res = minimize_model(&m, 1e-12, 1e-13).unwrap();
    let want = axis_minimizer(g, h, t3, m.sigma());
    assert!((res.s[0] - want).abs() <= 1e-9, "{} vs {want}", res.s[0]);
    assert!(res.s[1].abs() <= 1e-12);
}
