use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::tensor_poly::{factorial, linalg, SymmetricTensor};

/// Local convexity classification of the objective at the current iterate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseTag {
    /// `λ_min(H) ≥ δ`; the model uses `H̄ = H`.
    StronglyConvex,
    /// `λ_min(H) ≤ 0`; the model uses `H̄ = H − λ_min(H)·I + δ·I`.
    Nonconvex,
    /// `0 < λ_min(H) < δ`; the model uses `H̄ = H + δ·I`.
    NearlyStronglyConvex,
}

impl CaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseTag::StronglyConvex => "strongly_convex",
            CaseTag::Nonconvex => "nonconvex",
            CaseTag::NearlyStronglyConvex => "nearly_strongly_convex",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Regularization power: `p + 1` for odd `p`, `p + 2` for even `p`.
pub fn regularization_power(p: usize) -> usize {
    if !p.is_multiple_of(2) {
        p + 1
    } else {
        p + 2
    }
}

/// One iteration's local model
///
/// ```text
/// m(s) = f0 + gᵀs + ½ sᵀH̄s + Σ_{j=3..p} (1/j!) ∇ʲf[s]^j + (σ/p′)‖s‖^{p′}
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct SosModel {
    n: usize,
    p: usize,
    p_prime: usize,
    f0: f64,
    g: DVector<f64>,
    h_bar: DMatrix<f64>,
    higher: Vec<SymmetricTensor>,
    delta: f64,
    sigma: f64,
    case_tag: CaseTag,
}

impl SosModel {
    /// `higher` holds the tensors of orders `3..=p` in order.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: usize,
        f0: f64,
        g: DVector<f64>,
        h_bar: DMatrix<f64>,
        higher: Vec<SymmetricTensor>,
        delta: f64,
        sigma: f64,
        case_tag: CaseTag,
    ) -> Result<Self> {
        let n = g.len();
        if p < 3 {
            return Err(Error::ContractViolation(format!("order p = {p} must be at least 3")));
        }
        check_dim(n, h_bar.nrows())?;
        linalg::check_symmetric(&h_bar)?;
        if higher.len() != p - 2 {
            return Err(Error::ContractViolation(format!(
                "expected {} higher-order tensors for p = {p}, got {}",
                p - 2,
                higher.len()
            )));
        }
        for (i, t) in higher.iter().enumerate() {
            check_dim(n, t.dim())?;
            if t.order() != i + 3 {
                return Err(Error::ContractViolation(format!(
                    "higher tensor {i} has order {}, expected {}",
                    t.order(),
                    i + 3
                )));
            }
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::ContractViolation(format!("delta = {delta} must be positive")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::ContractViolation(format!("sigma = {sigma} must be nonnegative")));
        }
        let lmin = linalg::lambda_min(&h_bar);
        if lmin < delta - 1e-10 * (1.0 + h_bar.amax()) {
            return Err(Error::ContractViolation(format!(
                "lambda_min(H_bar) = {lmin:e} is below delta = {delta:e}"
            )));
        }
        Ok(Self {
            n,
            p,
            p_prime: regularization_power(p),
            f0,
            g,
            h_bar,
            higher,
            delta,
            sigma,
            case_tag,
        })
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        assert!(sigma >= 0.0 && sigma.is_finite(), "sigma must be finite and nonnegative");
        Self {
            sigma,
            ..self.clone()
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn p_prime(&self) -> usize {
        self.p_prime
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn g(&self) -> &DVector<f64> {
        &self.g
    }

    pub fn h_bar(&self) -> &DMatrix<f64> {
        &self.h_bar
    }

    pub fn higher(&self) -> &[SymmetricTensor] {
        &self.higher
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn case_tag(&self) -> CaseTag {
        self.case_tag
    }

    pub fn value(&self, s: &[f64]) -> f64 {
        self.f0 + self.increment(s)
    }

    /// `m(s) − m(0)`, summed without `f0` so small changes keep full precision.
    pub fn increment(&self, s: &[f64]) -> f64 {
        let sv = DVector::from_column_slice(s);
        let mut v = self.g.dot(&sv) + 0.5 * sv.dot(&(&self.h_bar * &sv));
        for t in &self.higher {
            v += t.apply_full(s) / factorial(t.order());
        }
        v + self.sigma / self.p_prime as f64 * sv.norm().powi(self.p_prime as i32)
    }

    pub fn gradient(&self, s: &[f64]) -> DVector<f64> {
        let sv = DVector::from_column_slice(s);
        let mut gr = &self.g + &self.h_bar * &sv;
        for t in &self.higher {
            gr += t.apply_vector(s) / factorial(t.order() - 1);
        }
        let ns = sv.norm();
        gr + &sv * (self.sigma * ns.powi(self.p_prime as i32 - 2))
    }

    pub fn hessian(&self, s: &[f64]) -> DMatrix<f64> {
        let sv = DVector::from_column_slice(s);
        let mut h = self.h_bar.clone();
        for t in &self.higher {
            h += t.apply_matrix(s) / factorial(t.order() - 2);
        }
        let q = self.p_prime as i32;
        let ns2 = sv.norm_squared();
        if self.sigma != 0.0 {
            let base = ns2.powi((q - 4) / 2);
            h += (DMatrix::identity(self.n, self.n) * ns2 + &sv * sv.transpose() * f64::from(q - 2))
                * (self.sigma * base);
        }
        h
    }
}
