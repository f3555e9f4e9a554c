//! Test problems: explicit polynomials and registered closed-form builtins.

mod builtin;
mod check;
mod file;

use std::collections::BTreeMap;

pub use builtin::{Builtin, BuiltinId, MAX_BUILTIN_ORDER};
pub use check::{check_derivatives, DerivativeReport, OrderCheck};
pub use file::{load_point, load_problem, parse_problem, problem_to_string, save_problem};

use crate::driver::Objective;
use crate::error::{check_dim, Error, Result};
use crate::tensor_poly::{sorted_indices, DerivativeBundle, Polynomial, SymmetricTensor};

/// Default cap on the degree of explicit polynomial problems.
pub const DEFAULT_DEGREE_CAP: u32 = 8;

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemKind {
    ExplicitPolynomial { degree: u32, poly: Polynomial },
    Builtin { id: BuiltinId, params: BTreeMap<String, f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub name: String,
    pub n: usize,
    pub kind: ProblemKind,
    /// Optional starting point carried by the problem file.
    pub x0: Option<Vec<f64>>,
}

impl ProblemSpec {
    pub fn polynomial(name: &str, poly: Polynomial) -> Result<Self> {
        let spec = Self {
            name: name.to_string(),
            n: poly.dim(),
            kind: ProblemKind::ExplicitPolynomial {
                degree: poly.degree(),
                poly,
            },
            x0: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn builtin(id: BuiltinId, n: usize) -> Result<Self> {
        let spec = Self {
            name: id.name().to_string(),
            n,
            kind: ProblemKind::Builtin {
                id,
                params: BTreeMap::new(),
            },
            x0: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_start(mut self, x0: Vec<f64>) -> Result<Self> {
        check_dim(self.n, x0.len())?;
        self.x0 = Some(x0);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be positive".into()));
        }
        if let Some(x0) = &self.x0 {
            check_dim(self.n, x0.len())?;
        }
        match &self.kind {
            ProblemKind::ExplicitPolynomial { degree, poly } => {
                check_dim(self.n, poly.dim())?;
                if *degree > DEFAULT_DEGREE_CAP {
                    return Err(Error::InvalidConfig(format!(
                        "degree {degree} exceeds the cap of {DEFAULT_DEGREE_CAP}"
                    )));
                }
                if poly.degree() > *degree {
                    return Err(Error::InvalidConfig(format!(
                        "declared degree {degree} below actual degree {}",
                        poly.degree()
                    )));
                }
            }
            ProblemKind::Builtin { id, params } => {
                Builtin::new(*id, self.n, params)?;
            }
        }
        Ok(())
    }

    pub fn is_strongly_convex(&self) -> bool {
        matches!(&self.kind, ProblemKind::Builtin { id, .. } if id.strongly_convex())
    }

    /// Polynomial degree, if the problem is an explicit polynomial.
    pub fn degree(&self) -> Option<u32> {
        match &self.kind {
            ProblemKind::ExplicitPolynomial { degree, .. } => Some(*degree),
            ProblemKind::Builtin { .. } => None,
        }
    }

    fn resolved_builtin(&self) -> Option<Builtin> {
        match &self.kind {
            ProblemKind::Builtin { id, params } => {
                Some(Builtin::new(*id, self.n, params).expect("validated on construction"))
            }
            _ => None,
        }
    }
}

fn polynomial_tensor(poly: &Polynomial, x: &[f64], j: usize) -> SymmetricTensor {
    let n = poly.dim();
    let mut t = SymmetricTensor::zeros(j, n);
    for k in sorted_indices(j, n) {
        let mut d = poly.clone();
        for &i in &k {
            d = d.partial(i);
            if d.is_zero() {
                break;
            }
        }
        let v = d.evaluate(x);
        if v != 0.0 {
            t.set(&k, v);
        }
    }
    t
}

/// Exact derivatives of orders `1..=p` at `x`.
pub fn derivatives(problem: &ProblemSpec, x: &[f64], p: usize) -> Result<DerivativeBundle> {
    check_dim(problem.n, x.len())?;
    match &problem.kind {
        ProblemKind::ExplicitPolynomial { poly, .. } => {
            let tensors = (1..=p).map(|j| polynomial_tensor(poly, x, j)).collect();
            DerivativeBundle::new(x.to_vec(), poly.evaluate(x), tensors)
        }
        ProblemKind::Builtin { .. } => problem.resolved_builtin().expect("builtin kind").derivatives(x, p),
    }
}

impl Objective for ProblemSpec {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ProblemKind::ExplicitPolynomial { poly, .. } => poly.evaluate(x),
            ProblemKind::Builtin { .. } => self.resolved_builtin().expect("builtin kind").value(x),
        }
    }

    fn derivatives(&self, x: &[f64], p: usize) -> Result<DerivativeBundle> {
        derivatives(self, x, p)
    }

    fn default_start(&self) -> Vec<f64> {
        if let Some(x0) = &self.x0 {
            return x0.clone();
        }
        match &self.kind {
            ProblemKind::Builtin { id, .. } => id.default_start(self.n),
            ProblemKind::ExplicitPolynomial { .. } => vec![0.0; self.n],
        }
    }
}

/// File names and contents of the problems shipped with the crate.
pub const BUNDLED: &[(&str, &str)] = &[
    ("quad2.prob", include_str!("../../problems/quad2.prob")),
    ("convex_quartic.prob", include_str!("../../problems/convex_quartic.prob")),
    ("nonconvex_quartic.prob", include_str!("../../problems/nonconvex_quartic.prob")),
    ("univariate_cubic.prob", include_str!("../../problems/univariate_cubic.prob")),
    ("sc_quartic.prob", include_str!("../../problems/sc_quartic.prob")),
    ("nonconvex_builtin.prob", include_str!("../../problems/nonconvex_builtin.prob")),
    ("rosenbrock.prob", include_str!("../../problems/rosenbrock.prob")),
    ("exponentials.prob", include_str!("../../problems/exponentials.prob")),
];

pub fn bundled_problems() -> Result<Vec<ProblemSpec>> {
    BUNDLED.iter().map(|(name, text)| parse_problem(text, name)).collect()
}

/// Looks up a bundled problem by file name, with or without `.prob`.
pub fn bundled_problem(name: &str) -> Option<ProblemSpec> {
    BUNDLED
        .iter()
        .find(|(file, _)| *file == name || file.strip_suffix(".prob") == Some(name))
        .map(|(file, text)| parse_problem(text, file).expect("bundled problems parse"))
}
