//! Sparse multivariate polynomials in the standard monomial basis.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{check_dim, Result};

/// Exponent vector `α ∈ ℕⁿ` of a monomial `s^α`.
pub type Exponent = Vec<u32>;

/// A polynomial stored as a map from exponent vector to coefficient.
///
/// Coefficients whose magnitude is at or below the drop tolerance are never
/// stored. With the default tolerance of zero only exact cancellations are
/// removed, so coefficient matching against a Gram matrix stays exact.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Exponent, f64>,
    drop_tol: f64,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
            drop_tol: 0.0,
        }
    }

    pub fn with_drop_tolerance(mut self, tol: f64) -> Self {
        self.drop_tol = tol.max(0.0);
        self.terms.retain(|_, c| c.abs() > tol);
        self
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], value);
        p
    }

    /// The coordinate polynomial `s_i`.
    pub fn variable(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        let mut p = Self::zero(dim);
        p.add_term(e, 1.0);
        p
    }

    pub fn monomial(exponent: Exponent, coefficient: f64) -> Self {
        let mut p = Self::zero(exponent.len());
        p.add_term(exponent, coefficient);
        p
    }

    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponent, f64)>,
    {
        let mut p = Self::zero(dim);
        for (e, c) in terms {
            check_dim(dim, e.len())?;
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, f64)> + '_ {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn coefficient(&self, exponent: &[u32]) -> f64 {
        self.terms.get(exponent).copied().unwrap_or(0.0)
    }

    /// Adds `c·s^α`, merging with any existing coefficient.
    pub fn add_term(&mut self, exponent: Exponent, c: f64) {
        debug_assert_eq!(exponent.len(), self.dim);
        let tol = self.drop_tol;
        let entry = self.terms.entry(exponent);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                if c.abs() > tol {
                    v.insert(c);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = *o.get() + c;
                if sum.abs() > tol {
                    *o.get_mut() = sum;
                } else {
                    o.remove();
                }
            }
        }
    }

    /// Maximum total degree over stored terms; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn evaluate(&self, s: &[f64]) -> f64 {
        debug_assert_eq!(s.len(), self.dim);
        self.terms
            .iter()
            .map(|(e, c)| c * monomial_value(e, s))
            .sum()
    }

    /// Largest absolute coefficient (the ∞* norm).
    pub fn inf_star_norm(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = Self::zero(self.dim).with_drop_tolerance(self.drop_tol);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * factor);
        }
        out
    }

    /// The polynomial `x ↦ p(d ⊙ x)`.
    pub fn scale_variables(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.dim, "one scale per variable");
        let mut out = Self::zero(self.dim).with_drop_tolerance(self.drop_tol);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * monomial_value(e, d));
        }
        out
    }

    /// Exact partial derivative with respect to variable `i`.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim).with_drop_tolerance(self.drop_tol);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                out.add_term(d, c * f64::from(e[i]));
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.dim, 1.0);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Re-expresses the polynomial in `new_dim ≥ dim` variables, placing the
    /// existing variables at positions `offset..offset + dim`.
    pub fn embed(&self, new_dim: usize, offset: usize) -> Self {
        assert!(offset + self.dim <= new_dim, "embedding out of range");
        let mut out = Self::zero(new_dim).with_drop_tolerance(self.drop_tol);
        for (e, c) in &self.terms {
            let mut big = vec![0; new_dim];
            big[offset..offset + self.dim].copy_from_slice(e);
            out.add_term(big, *c);
        }
        out
    }

    /// Largest absolute coefficient difference against `other`.
    pub fn max_coefficient_diff(&self, other: &Polynomial) -> f64 {
        let mut worst: f64 = 0.0;
        for (e, c) in &self.terms {
            worst = worst.max((c - other.coefficient(e)).abs());
        }
        for (e, c) in &other.terms {
            if !self.terms.contains_key(e) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }
}

pub(crate) fn monomial_value(e: &[u32], s: &[f64]) -> f64 {
    e.iter()
        .zip(s)
        .filter(|(k, _)| **k > 0)
        .map(|(k, x)| x.powi(*k as i32))
        .product()
}

/// Gradient of `q` at `s` by exact differentiation of each monomial.
pub fn poly_gradient(q: &Polynomial, s: &[f64]) -> Result<Vec<f64>> {
    check_dim(q.dim(), s.len())?;
    let n = q.dim();
    let mut g = vec![0.0; n];
    let mut e2 = vec![0u32; n];
    for (e, c) in q.terms() {
        for i in 0..n {
            if e[i] == 0 {
                continue;
            }
            e2.copy_from_slice(e);
            e2[i] -= 1;
            g[i] += c * f64::from(e[i]) * monomial_value(&e2, s);
        }
    }
    Ok(g)
}

/// Hessian of `q` at `s` by exact differentiation of each monomial.
pub fn poly_hessian(q: &Polynomial, s: &[f64]) -> Result<DMatrix<f64>> {
    check_dim(q.dim(), s.len())?;
    let n = q.dim();
    let mut h = DMatrix::zeros(n, n);
    let mut e2 = vec![0u32; n];
    for (e, c) in q.terms() {
        for i in 0..n {
            if e[i] == 0 {
                continue;
            }
            for j in i..n {
                let factor = if i == j {
                    if e[i] < 2 {
                        continue;
                    }
                    f64::from(e[i]) * f64::from(e[i] - 1)
                } else {
                    if e[j] == 0 {
                        continue;
                    }
                    f64::from(e[i]) * f64::from(e[j])
                };
                e2.copy_from_slice(e);
                e2[i] -= 1;
                e2[j] -= 1;
                let v = c * factor * monomial_value(&e2, s);
                h[(i, j)] += v;
                if i != j {
                    h[(j, i)] += v;
                }
            }
        }
    }
    Ok(h)
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -*c);
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        let mut out = Polynomial::zero(self.dim).with_drop_tolerance(self.drop_tol);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c:e}")?;
            for (i, p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "*x{i}")?,
                    _ => write!(f, "*x{i}^{p}")?,
                }
            }
        }
        Ok(())
    }
}
