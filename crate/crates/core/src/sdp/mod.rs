//! Dense semidefinite programming in block-diagonal standard primal form.
//!
//! ```text
//! minimize    ⟨C, X⟩
//! subject to  ⟨A_k, X⟩ = b_k,   k = 1..m
//!             X = diag(X_1, …, X_B) ⪰ 0
//! ```
//!
//! Data matrices are kept sparse (upper-triangle triplets); iterates and
//! factorizations are dense. Intended for small problems: blocks up to a few
//! dozen rows and a few hundred constraints.

mod problem;
mod solver;

pub use problem::{SdpProblem, SparseSym};
pub use solver::{solve_sdp, solve_sdp_with, SdpOptions, SdpSolution, SdpStatus};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_poly::linalg::lambda_min;

    #[test]
    fn schur_complement_two_by_two() {
        // min X11 s.t. X12 = 1, X22 = 1
        let mut p = SdpProblem::new(vec![2]);
        let mut c = SparseSym::new();
        c.push(0, 0, 0, 1.0);
        p.set_objective(c);
        let mut a1 = SparseSym::new();
        a1.push(0, 0, 1, 0.5);
        p.add_constraint(a1, 1.0);
        let mut a2 = SparseSym::new();
        a2.push(0, 1, 1, 1.0);
        p.add_constraint(a2, 1.0);
        let sol = solve_sdp(&p, 1e-9, 200);
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.x[0][(0, 0)] - 1.0).abs() < 1e-7, "{}", sol.x[0]);
        assert!((sol.primal_objective - 1.0).abs() < 1e-7);
    }

    #[test]
    fn scalar_block() {
        let mut p = SdpProblem::new(vec![1]);
        let mut c = SparseSym::new();
        c.push(0, 0, 0, 1.0);
        p.set_objective(c.clone());
        p.add_constraint(c, 2.0);
        let sol = solve_sdp(&p, 1e-9, 200);
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_objective - 2.0).abs() < 1e-8);
        assert!(lambda_min(&sol.z[0]) >= -1e-9);
    }

    #[test]
    fn redundant_constraint_is_dropped() {
        let mut p = SdpProblem::new(vec![1]);
        let mut c = SparseSym::new();
        c.push(0, 0, 0, 1.0);
        p.set_objective(c.clone());
        p.add_constraint(c.clone(), 2.0);
        let mut twice = SparseSym::new();
        twice.push(0, 0, 0, 2.0);
        p.add_constraint(twice, 4.0);
        let sol = solve_sdp(&p, 1e-9, 200);
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.primal_objective - 2.0).abs() < 1e-8);
        assert_eq!(sol.y.len(), 2);
    }

    #[test]
    fn inconsistent_constraints_are_infeasible() {
        let mut p = SdpProblem::new(vec![1]);
        let mut c = SparseSym::new();
        c.push(0, 0, 0, 1.0);
        p.set_objective(c.clone());
        p.add_constraint(c.clone(), 2.0);
        p.add_constraint(c, 3.0);
        assert_eq!(solve_sdp(&p, 1e-9, 200).status, SdpStatus::Infeasible);
    }

    #[test]
    fn negative_requirement_is_infeasible() {
        // X ⪰ 0 with X11 = -1
        let mut p = SdpProblem::new(vec![1]);
        let mut a = SparseSym::new();
        a.push(0, 0, 0, 1.0);
        p.add_constraint(a, -1.0);
        let sol = solve_sdp(&p, 1e-9, 200);
        assert_ne!(sol.status, SdpStatus::Optimal);
    }

    #[test]
    fn unbounded_objective_is_not_optimal() {
        // min -X11 - X22 s.t. X11 - X22 = 0: unbounded below.
        let mut p = SdpProblem::new(vec![2]);
        let mut c = SparseSym::new();
        c.push(0, 0, 0, -1.0);
        c.push(0, 1, 1, -1.0);
        p.set_objective(c);
        let mut a = SparseSym::new();
        a.push(0, 0, 0, 1.0);
        a.push(0, 1, 1, -1.0);
        p.add_constraint(a, 0.0);
        let sol = solve_sdp(&p, 1e-9, 200);
        assert_ne!(sol.status, SdpStatus::Optimal);
    }
}
