//! Central finite-difference verification of derivative tensors.

use super::ProblemSpec;
use crate::driver::Objective;
use crate::error::Result;
use crate::tensor_poly::sorted_indices;

#[derive(Clone, Debug, PartialEq)]
pub struct OrderCheck {
    pub order: usize,
    pub step: f64,
    /// Largest `|analytic − fd| / max(1, |analytic|)` over all entries.
    pub max_rel_error: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeReport {
    pub x: Vec<f64>,
    pub orders: Vec<OrderCheck>,
}

impl DerivativeReport {
    pub fn passed(&self) -> bool {
        self.orders.iter().all(|o| o.passed)
    }
}

pub fn step_for(order: usize) -> f64 {
    if order >= 3 {
        1e-4
    } else {
        1e-5
    }
}

pub fn threshold_for(order: usize) -> f64 {
    if order <= 3 {
        1e-5
    } else {
        1e-3
    }
}

/// Compares the order-`j` tensor with central differences of the order
/// `j − 1` tensor (the value for `j = 1`), for `j = 1..=p`.
pub fn check_derivatives(problem: &ProblemSpec, x: &[f64], p: usize) -> Result<DerivativeReport> {
    let exact = problem.derivatives(x, p)?;
    let n = problem.n;
    let mut orders = Vec::with_capacity(p);
    for j in 1..=p {
        let h = step_for(j);
        let mut worst: f64 = 0.0;
        let mut shifted = x.to_vec();
        let mut lower_at = |i: usize, sign: f64| -> Result<Box<dyn Fn(&[usize]) -> f64>> {
            shifted.copy_from_slice(x);
            shifted[i] += sign * h;
            if j == 1 {
                let v = problem.value(&shifted);
                Ok(Box::new(move |_| v))
            } else {
                let b = problem.derivatives(&shifted, j - 1)?;
                let t = b.tensor(j - 1).clone();
                Ok(Box::new(move |k| t.get(k)))
            }
        };
        for i in 0..n {
            let up = lower_at(i, 1.0)?;
            let down = lower_at(i, -1.0)?;
            for rest in sorted_indices(j - 1, n) {
                let mut full = rest.clone();
                full.push(i);
                let fd = (up(&rest) - down(&rest)) / (2.0 * h);
                let a = exact.tensor(j).get(&full);
                worst = worst.max((a - fd).abs() / a.abs().max(1.0));
            }
        }
        let threshold = threshold_for(j);
        orders.push(OrderCheck {
            order: j,
            step: h,
            max_rel_error: worst,
            threshold,
            passed: worst <= threshold,
        });
    }
    Ok(DerivativeReport { x: x.to_vec(), orders })
}
