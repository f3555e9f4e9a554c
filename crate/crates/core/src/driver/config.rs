use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the adaptive regularization loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArpConfig {
    /// Taylor order, at least 3.
    pub p: usize,
    /// Gradient-norm tolerance in `(0, 1)`.
    pub epsilon: f64,
    /// Exponent in `δ = ε^a`, within `[0, 1/2]`.
    pub a: f64,
    /// Explicit δ in `(0, 1)`; overrides `a` when set.
    pub delta: Option<f64>,
    pub eta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub sigma_min: f64,
    /// Initial adaptive weight `σʳ₀`; `None` means `sigma_min`.
    pub sigma0: Option<f64>,
    /// Subproblem accuracy factor in `(0, 1)`.
    pub theta: f64,
    pub max_iter: usize,
    /// Starting point; `None` defers to the problem's default.
    pub x0: Option<Vec<f64>>,
}

impl Default for ArpConfig {
    fn default() -> Self {
        Self {
            p: 3,
            epsilon: 1e-5,
            a: 0.5,
            delta: None,
            eta: 0.1,
            gamma1: 2.0,
            gamma2: 0.5,
            sigma_min: 1e-8,
            sigma0: None,
            theta: 0.5,
            max_iter: 1000,
            x0: None,
        }
    }
}

impl ArpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.p < 3 {
            return bad(format!("p = {} must be at least 3", self.p));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon = {} must lie in (0, 1)", self.epsilon));
        }
        if !(0.0..=0.5).contains(&self.a) {
            return bad(format!("a = {} must lie in [0, 1/2]", self.a));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return bad(format!("delta = {d} must lie in (0, 1)"));
            }
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta = {} must lie in (0, 1)", self.eta));
        }
        if !(self.gamma1 > 1.0) {
            return bad(format!("gamma1 = {} must exceed 1", self.gamma1));
        }
        if !(self.gamma2 > 0.0 && self.gamma2 < 1.0) {
            return bad(format!("gamma2 = {} must lie in (0, 1)", self.gamma2));
        }
        if !(self.sigma_min > 0.0 && self.sigma_min.is_finite()) {
            return bad(format!("sigma_min = {} must be positive", self.sigma_min));
        }
        if let Some(s0) = self.sigma0 {
            if !(s0 >= self.sigma_min && s0.is_finite()) {
                return bad(format!("sigma0 = {s0} must be at least sigma_min"));
            }
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad(format!("theta = {} must lie in (0, 1)", self.theta));
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| self.epsilon.powf(self.a))
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0.unwrap_or(self.sigma_min)
    }
}
