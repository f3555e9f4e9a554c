//! Symmetric tensors, Taylor expansions and monomial-basis polynomials.

mod bundle;
pub mod linalg;
mod poly;
mod tensor;

pub use bundle::{expand_to_polynomial, taylor_increment, taylor_value, DerivativeBundle};
pub use linalg::min_eigenvalue;
pub use poly::{poly_gradient, poly_hessian, Exponent, Polynomial};
pub use tensor::{
    exponent_of, factorial, multiplicity, sorted_indices, Contraction, SymmetricTensor, TensorNorm,
};

/// Contracts `t` with `s`, leaving `drop ∈ {0, 1, 2}` slots free.
pub fn tensor_apply(t: &SymmetricTensor, s: &[f64], drop: usize) -> crate::Result<Contraction> {
    t.apply(s, drop)
}

/// Default number of restarts for order ≥ 3 norm estimates.
pub const NORM_RESTARTS: usize = 50;

pub fn tensor_norm(t: &SymmetricTensor) -> TensorNorm {
    t.norm(NORM_RESTARTS)
}

/// Largest absolute coefficient of `q` in the monomial basis.
pub fn inf_star_norm(q: &Polynomial) -> f64 {
    q.inf_star_norm()
}
