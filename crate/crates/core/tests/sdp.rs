mod common;

use common::planted_sdp;
use sosarp::sdp::{solve_sdp, SdpStatus};
use sosarp::tensor_poly::linalg::lambda_min;

#[test]
fn planted_problems_reach_the_planted_optimum() {
    for seed in 0..30 {
        let planted = planted_sdp(seed, 8, 30);
        let sol = solve_sdp(&planted.problem, 1e-9, 200);
        assert_eq!(sol.status, SdpStatus::Optimal, "seed {seed}: {sol:?}");
        assert!(sol.gap <= 1e-7 && sol.primal_residual <= 1e-7 && sol.dual_residual <= 1e-7);
        let err = (sol.primal_objective - planted.optimum).abs();
        assert!(err <= 1e-6 * (1.0 + planted.optimum.abs()), "seed {seed}: {err}");
        for (x, z) in sol.x.iter().zip(&sol.z) {
            assert!(lambda_min(x) >= -1e-9 && lambda_min(z) >= -1e-9);
        }
    }
}

#[test]
fn contradictory_planted_constraint_is_not_optimal() {
    for seed in 100..110 {
        let planted = planted_sdp(seed, 5, 10);
        let mut p = planted.problem.clone();
        let a = p.constraints()[0].clone();
        let b = p.rhs()[0];
        p.add_constraint(a, b + 1.0);
        let sol = solve_sdp(&p, 1e-9, 200);
        assert_ne!(sol.status, SdpStatus::Optimal, "seed {seed}");
    }
}
