use nalgebra::{DMatrix, DVector};

use super::poly::Polynomial;
use super::tensor::{factorial, SymmetricTensor};
use crate::error::{check_dim, Error, Result};

/// Value and derivative tensors of orders `1..=p` at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeBundle {
    x: Vec<f64>,
    value: f64,
    tensors: Vec<SymmetricTensor>,
}

impl DerivativeBundle {
    pub fn new(x: Vec<f64>, value: f64, tensors: Vec<SymmetricTensor>) -> Result<Self> {
        let n = x.len();
        for (i, t) in tensors.iter().enumerate() {
            if t.order() != i + 1 {
                return Err(Error::ContractViolation(format!(
                    "tensor at position {i} has order {}, expected {}",
                    t.order(),
                    i + 1
                )));
            }
            check_dim(n, t.dim())?;
        }
        Ok(Self { x, value, tensors })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Highest derivative order carried.
    pub fn order(&self) -> usize {
        self.tensors.len()
    }

    /// The order-`j` tensor, `1 ≤ j ≤ order()`.
    pub fn tensor(&self, j: usize) -> &SymmetricTensor {
        &self.tensors[j - 1]
    }

    pub fn tensors(&self) -> &[SymmetricTensor] {
        &self.tensors
    }

    pub fn gradient(&self) -> DVector<f64> {
        self.tensor(1).to_vector()
    }

    pub fn hessian(&self) -> DMatrix<f64> {
        self.tensor(2).to_matrix()
    }

    /// Keeps only orders `1..=p`.
    pub fn truncated(&self, p: usize) -> Self {
        Self {
            x: self.x.clone(),
            value: self.value,
            tensors: self.tensors.iter().take(p).cloned().collect(),
        }
    }
}

/// `T_p(x, s) = f(x) + Σ_j (1/j!) ∇ʲf(x)[s]^j`.
pub fn taylor_value(bundle: &DerivativeBundle, s: &[f64]) -> Result<f64> {
    check_dim(bundle.dim(), s.len())?;
    let mut acc = bundle.value();
    for t in bundle.tensors() {
        acc += t.apply_full(s) / factorial(t.order());
    }
    Ok(acc)
}

/// `T_p(x, s) − f(x)`, summed without the constant term.
pub fn taylor_increment(bundle: &DerivativeBundle, s: &[f64]) -> Result<f64> {
    check_dim(bundle.dim(), s.len())?;
    Ok(bundle
        .tensors()
        .iter()
        .map(|t| t.apply_full(s) / factorial(t.order()))
        .sum())
}

/// Taylor polynomial in `s` restricted to the given orders (0 is the value).
pub fn expand_to_polynomial(bundle: &DerivativeBundle, include_orders: &[usize]) -> Result<Polynomial> {
    let n = bundle.dim();
    let mut out = Polynomial::zero(n);
    for &j in include_orders {
        if j > bundle.order() {
            return Err(Error::ContractViolation(format!(
                "order {j} requested but bundle carries up to {}",
                bundle.order()
            )));
        }
        if j == 0 {
            out.add_term(vec![0; n], bundle.value());
        } else {
            let t = bundle.tensor(j);
            out = &out + &t.to_polynomial(1.0 / factorial(j));
        }
    }
    Ok(out)
}
