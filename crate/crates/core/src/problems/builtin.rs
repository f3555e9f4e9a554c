//! Registered test functions with closed-form derivatives.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor_poly::{DerivativeBundle, SymmetricTensor};

/// Highest derivative order any builtin serves; tensor sizes grow as
/// `C(n + j − 1, j)`, so larger orders are refused rather than silently slow.
pub const MAX_BUILTIN_ORDER: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BuiltinId {
    /// `Σ μ/2 (x_i − c)² + ¼ (x_i − c)⁴`; minimum 0 at `x = c·1`.
    StronglyConvexQuartic,
    /// `a/2 x₁² + b/3 x₁³ + ¼ x₁⁴ + ¼ x₂⁴`; indefinite for `x₁` between the
    /// roots of `a + 2b x + 3x²`, flat in `x₂` near 0; bounded below.
    NonconvexCubicQuartic,
    /// `(1 − x₁)² + α (x₂ − x₁²)²`.
    ScaledRosenbrock,
    /// `Σ exp(x_i − 1) + exp(−Σ x_i)`; positive, minimum at `x_i = 1/(n+1)`.
    SumOfExponentials,
}

impl BuiltinId {
    pub const ALL: [BuiltinId; 4] = [
        BuiltinId::StronglyConvexQuartic,
        BuiltinId::NonconvexCubicQuartic,
        BuiltinId::ScaledRosenbrock,
        BuiltinId::SumOfExponentials,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinId::StronglyConvexQuartic => "strongly_convex_quartic",
            BuiltinId::NonconvexCubicQuartic => "nonconvex_cubic_quartic",
            BuiltinId::ScaledRosenbrock => "scaled_rosenbrock",
            BuiltinId::SumOfExponentials => "sum_of_exponentials",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == name)
            .ok_or_else(|| Error::UnknownBuiltin(name.to_string()))
    }

    pub fn max_order(&self) -> usize {
        MAX_BUILTIN_ORDER
    }

    pub fn strongly_convex(&self) -> bool {
        matches!(self, BuiltinId::StronglyConvexQuartic)
    }

    /// Fixed dimension, if the function is not defined for general `n`.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            BuiltinId::NonconvexCubicQuartic | BuiltinId::ScaledRosenbrock => Some(2),
            _ => None,
        }
    }

    pub fn default_params(&self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            BuiltinId::StronglyConvexQuartic => &[("mu", 1.0), ("center", 1.0)],
            BuiltinId::NonconvexCubicQuartic => &[("a", 3.0), ("b", 4.0)],
            BuiltinId::ScaledRosenbrock => &[("alpha", 10.0)],
            BuiltinId::SumOfExponentials => &[],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    pub fn default_start(&self, n: usize) -> Vec<f64> {
        match self {
            BuiltinId::StronglyConvexQuartic => vec![-1.0; n],
            BuiltinId::NonconvexCubicQuartic => vec![-0.9, 1.0],
            BuiltinId::ScaledRosenbrock => vec![-1.2, 1.0],
            BuiltinId::SumOfExponentials => vec![1.0; n],
        }
    }
}

/// A builtin with resolved parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Builtin {
    id: BuiltinId,
    n: usize,
    params: BTreeMap<String, f64>,
}

impl Builtin {
    /// `params` overrides the defaults; unknown keys are rejected.
    pub fn new(id: BuiltinId, n: usize, params: &BTreeMap<String, f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        if let Some(d) = id.fixed_dim() {
            if d != n {
                return Err(Error::InvalidConfig(format!("builtin `{}` requires n = {d}", id.name())));
            }
        }
        let mut resolved = id.default_params();
        for (k, v) in params {
            if !resolved.contains_key(k) {
                return Err(Error::InvalidConfig(format!(
                    "builtin `{}` has no parameter `{k}`",
                    id.name()
                )));
            }
            resolved.insert(k.clone(), *v);
        }
        if id == BuiltinId::StronglyConvexQuartic && !(resolved["mu"] > 0.0) {
            return Err(Error::InvalidConfig("mu must be positive".into()));
        }
        Ok(Self { id, n, params: resolved })
    }

    pub fn id(&self) -> BuiltinId {
        self.id
    }

    fn param(&self, key: &str) -> f64 {
        self.params[key]
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self.id {
            BuiltinId::StronglyConvexQuartic => {
                let (mu, c) = (self.param("mu"), self.param("center"));
                x.iter()
                    .map(|xi| {
                        let u = xi - c;
                        0.5 * mu * u * u + 0.25 * u.powi(4)
                    })
                    .sum()
            }
            BuiltinId::NonconvexCubicQuartic => {
                let (a, b) = (self.param("a"), self.param("b"));
                let u = x[0];
                0.5 * a * u * u + b / 3.0 * u.powi(3) + 0.25 * u.powi(4) + 0.25 * x[1].powi(4)
            }
            BuiltinId::ScaledRosenbrock => {
                let alpha = self.param("alpha");
                let r = x[1] - x[0] * x[0];
                (1.0 - x[0]).powi(2) + alpha * r * r
            }
            BuiltinId::SumOfExponentials => {
                let sum: f64 = x.iter().sum();
                x.iter().map(|xi| (xi - 1.0).exp()).sum::<f64>() + (-sum).exp()
            }
        }
    }

    pub fn derivatives(&self, x: &[f64], p: usize) -> Result<DerivativeBundle> {
        if p > self.id.max_order() {
            return Err(Error::UnsupportedOrder {
                id: self.id.name().to_string(),
                max: self.id.max_order(),
                requested: p,
            });
        }
        crate::error::check_dim(self.n, x.len())?;
        let n = self.n;
        let tensors = (1..=p).map(|j| self.tensor(x, j, n)).collect();
        DerivativeBundle::new(x.to_vec(), self.value(x), tensors)
    }

    fn tensor(&self, x: &[f64], j: usize, n: usize) -> SymmetricTensor {
        let all_same = |k: &[usize]| k.iter().all(|&i| i == k[0]);
        match self.id {
            BuiltinId::StronglyConvexQuartic => {
                let (mu, c) = (self.param("mu"), self.param("center"));
                SymmetricTensor::from_fn(j, n, |k| {
                    if !all_same(k) {
                        return 0.0;
                    }
                    let u = x[k[0]] - c;
                    match j {
                        1 => mu * u + u.powi(3),
                        2 => mu + 3.0 * u * u,
                        3 => 6.0 * u,
                        4 => 6.0,
                        _ => 0.0,
                    }
                })
            }
            BuiltinId::NonconvexCubicQuartic => {
                let (a, b) = (self.param("a"), self.param("b"));
                SymmetricTensor::from_fn(j, n, |k| {
                    if !all_same(k) {
                        return 0.0;
                    }
                    let u = x[k[0]];
                    if k[0] == 0 {
                        match j {
                            1 => a * u + b * u * u + u.powi(3),
                            2 => a + 2.0 * b * u + 3.0 * u * u,
                            3 => 2.0 * b + 6.0 * u,
                            4 => 6.0,
                            _ => 0.0,
                        }
                    } else {
                        match j {
                            1 => u.powi(3),
                            2 => 3.0 * u * u,
                            3 => 6.0 * u,
                            4 => 6.0,
                            _ => 0.0,
                        }
                    }
                })
            }
            BuiltinId::ScaledRosenbrock => {
                let alpha = self.param("alpha");
                let (x1, x2) = (x[0], x[1]);
                let r = x2 - x1 * x1;
                // multi-index counts (#1, #2) identify the partial derivative
                SymmetricTensor::from_fn(j, n, |k| {
                    let twos = k.iter().filter(|&&i| i == 1).count();
                    let ones = j - twos;
                    match (ones, twos) {
                        (1, 0) => -2.0 * (1.0 - x1) - 4.0 * alpha * x1 * r,
                        (0, 1) => 2.0 * alpha * r,
                        (2, 0) => 2.0 - 4.0 * alpha * r + 8.0 * alpha * x1 * x1,
                        (1, 1) => -4.0 * alpha * x1,
                        (0, 2) => 2.0 * alpha,
                        (3, 0) => 24.0 * alpha * x1,
                        (2, 1) => -4.0 * alpha,
                        (4, 0) => 24.0 * alpha,
                        _ => 0.0,
                    }
                })
            }
            BuiltinId::SumOfExponentials => {
                let sum: f64 = x.iter().sum();
                let coupled = if j.is_multiple_of(2) { (-sum).exp() } else { -(-sum).exp() };
                SymmetricTensor::from_fn(j, n, |k| {
                    if all_same(k) {
                        (x[k[0]] - 1.0).exp() + coupled
                    } else {
                        coupled
                    }
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for id in BuiltinId::ALL {
            assert_eq!(BuiltinId::parse(id.name()).unwrap(), id);
        }
        assert!(matches!(BuiltinId::parse("nope"), Err(Error::UnknownBuiltin(_))));
    }

    #[test]
    fn order_cap() {
        let b = Builtin::new(BuiltinId::SumOfExponentials, 2, &BTreeMap::new()).unwrap();
        assert!(matches!(b.derivatives(&[0.0, 0.0], 9), Err(Error::UnsupportedOrder { .. })));
    }

    #[test]
    fn rosenbrock_minimum() {
        let b = Builtin::new(BuiltinId::ScaledRosenbrock, 2, &BTreeMap::new()).unwrap();
        let d = b.derivatives(&[1.0, 1.0], 4).unwrap();
        assert_eq!(d.value(), 0.0);
        assert_eq!(d.gradient().norm(), 0.0);
        assert_eq!(d.tensor(4).get(&[0, 0, 0, 0]), 240.0);
    }

    #[test]
    fn exponential_minimizer() {
        let b = Builtin::new(BuiltinId::SumOfExponentials, 3, &BTreeMap::new()).unwrap();
        let d = b.derivatives(&[0.25; 3], 3).unwrap();
        assert!(d.gradient().norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_params_and_dims() {
        let mut p = BTreeMap::new();
        p.insert("beta".to_string(), 1.0);
        assert!(Builtin::new(BuiltinId::ScaledRosenbrock, 2, &p).is_err());
        assert!(Builtin::new(BuiltinId::ScaledRosenbrock, 3, &BTreeMap::new()).is_err());
    }
}
