//! Symmetric derivative tensors stored by sorted multi-index.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::linalg;
use super::poly::{Exponent, Polynomial};
use crate::error::{check_dim, Error, Result};

/// An order-`j` symmetric tensor over `ℝⁿ`.
///
/// Only one representative per index orbit is stored: the ascending sorted
/// multi-index. Lookups sort their argument first, so symmetry holds by
/// construction. Indices are zero-based.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricTensor {
    order: usize,
    dim: usize,
    entries: BTreeMap<Vec<usize>, f64>,
}

/// Result of contracting a tensor with `s` in all but `k` slots.
#[derive(Clone, Debug, PartialEq)]
pub enum Contraction {
    Scalar(f64),
    Vector(DVector<f64>),
    Matrix(DMatrix<f64>),
}

/// Estimate of `‖T‖_[j]` together with whether it is exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorNorm {
    pub value: f64,
    /// `false` when the value is a multi-start lower bound (order ≥ 3).
    pub exact: bool,
}

impl SymmetricTensor {
    pub fn zeros(order: usize, dim: usize) -> Self {
        assert!(order >= 1 && dim >= 1, "tensor order and dim must be positive");
        Self {
            order,
            dim,
            entries: BTreeMap::new(),
        }
    }

    /// Builds a tensor by evaluating `f` on every sorted multi-index.
    pub fn from_fn(order: usize, dim: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(order, dim);
        for idx in sorted_indices(order, dim) {
            let v = f(&idx);
            if v != 0.0 {
                t.entries.insert(idx, v);
            }
        }
        t
    }

    /// Order-1 tensor from a vector.
    pub fn from_vector(v: &[f64]) -> Self {
        Self::from_fn(1, v.len(), |i| v[i[0]])
    }

    /// Order-2 tensor from a symmetric matrix.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        linalg::check_symmetric(m)?;
        Ok(Self::from_fn(2, m.nrows(), |i| m[(i[0], i[1])]))
    }

    /// Random symmetric tensor with independent standard normal entries on
    /// the sorted representatives.
    pub fn random_normal<R: Rng>(order: usize, dim: usize, rng: &mut R) -> Self {
        Self::from_fn(order, dim, |_| rng.sample(StandardNormal))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        let mut k = index.to_vec();
        k.sort_unstable();
        self.entries.get(&k).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        assert_eq!(index.len(), self.order, "index length must equal order");
        assert!(index.iter().all(|&i| i < self.dim), "index out of range");
        let mut k = index.to_vec();
        k.sort_unstable();
        if value == 0.0 {
            self.entries.remove(&k);
        } else {
            self.entries.insert(k, value);
        }
    }

    /// Stored `(sorted index, value)` pairs.
    pub fn entries(&self) -> impl Iterator<Item = (&[usize], f64)> + '_ {
        self.entries.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in out.entries.values_mut() {
            *v *= factor;
        }
        out.entries.retain(|_, v| *v != 0.0);
        out
    }

    pub fn add(&self, other: &SymmetricTensor) -> Self {
        assert_eq!((self.order, self.dim), (other.order, other.dim));
        let mut out = self.clone();
        for (k, v) in &other.entries {
            *out.entries.entry(k.clone()).or_insert(0.0) += v;
        }
        out.entries.retain(|_, v| *v != 0.0);
        out
    }

    /// Dense matrix view of an order-2 tensor.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.order, 2, "to_matrix needs an order-2 tensor");
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (k, v) in &self.entries {
            m[(k[0], k[1])] = *v;
            m[(k[1], k[0])] = *v;
        }
        m
    }

    pub fn to_vector(&self) -> DVector<f64> {
        assert_eq!(self.order, 1, "to_vector needs an order-1 tensor");
        let mut v = DVector::zeros(self.dim);
        for (k, x) in &self.entries {
            v[k[0]] = *x;
        }
        v
    }

    /// Contracts with `s` in `order - drop` slots.
    ///
    /// `drop = 0` gives `T[s]^j`, `drop = 1` the vector `T[s]^{j-1}` and
    /// `drop = 2` the matrix `T[s]^{j-2}`. Each stored representative is
    /// weighted by the number of index tuples in its orbit.
    pub fn apply(&self, s: &[f64], drop: usize) -> Result<Contraction> {
        check_dim(self.dim, s.len())?;
        if drop > 2 || drop > self.order {
            return Err(Error::ContractViolation(format!(
                "cannot leave {drop} free slots on an order-{} tensor",
                self.order
            )));
        }
        match drop {
            0 => Ok(Contraction::Scalar(self.apply_full(s))),
            1 => Ok(Contraction::Vector(self.apply_vector(s))),
            _ => Ok(Contraction::Matrix(self.apply_matrix(s))),
        }
    }

    /// `T[s]^j`.
    pub fn apply_full(&self, s: &[f64]) -> f64 {
        debug_assert_eq!(s.len(), self.dim);
        self.entries
            .iter()
            .map(|(k, v)| v * multiplicity(k) * k.iter().map(|&i| s[i]).product::<f64>())
            .sum()
    }

    /// `T[s]^{j-1}`, equal to `(1/j)·∇_s T[s]^j`.
    pub fn apply_vector(&self, s: &[f64]) -> DVector<f64> {
        debug_assert_eq!(s.len(), self.dim);
        let j = self.order as f64;
        let mut out = DVector::zeros(self.dim);
        for (k, v) in &self.entries {
            let w = v * multiplicity(k) / j;
            let e = exponent_of(k, self.dim);
            for a in distinct(k) {
                let mut d = e.clone();
                d[a] -= 1;
                out[a] += w * f64::from(e[a]) * mono(&d, s);
            }
        }
        out
    }

    /// `T[s]^{j-2}`, equal to `(1/(j(j-1)))·∇²_s T[s]^j`.
    pub fn apply_matrix(&self, s: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(s.len(), self.dim);
        let n = self.dim;
        let mut out = DMatrix::zeros(n, n);
        if self.order < 2 {
            return out;
        }
        let j = self.order as f64;
        for (k, v) in &self.entries {
            let w = v * multiplicity(k) / (j * (j - 1.0));
            let e = exponent_of(k, n);
            let support = distinct(k);
            for (ia, &a) in support.iter().enumerate() {
                for &b in &support[ia..] {
                    let (factor, d) = if a == b {
                        if e[a] < 2 {
                            continue;
                        }
                        let mut d = e.clone();
                        d[a] -= 2;
                        (f64::from(e[a] * (e[a] - 1)), d)
                    } else {
                        let mut d = e.clone();
                        d[a] -= 1;
                        d[b] -= 1;
                        (f64::from(e[a] * e[b]), d)
                    };
                    let val = w * factor * mono(&d, s);
                    out[(a, b)] += val;
                    if a != b {
                        out[(b, a)] += val;
                    }
                }
            }
        }
        out
    }

    /// Polynomial `scale · T[s]^j` in the monomial basis.
    pub fn to_polynomial(&self, scale: f64) -> Polynomial {
        let mut p = Polynomial::zero(self.dim);
        for (k, v) in &self.entries {
            p.add_term(exponent_of(k, self.dim), scale * v * multiplicity(k));
        }
        p
    }

    /// `‖T‖_[j] = max |T[v₁,…,v_j]|` over unit vectors.
    ///
    /// Orders 1 and 2 are exact (Euclidean and spectral norm). For order ≥ 3
    /// the maximum is attained at `v₁ = … = v_j` for symmetric tensors, and
    /// is estimated by a shifted power ascent from `restarts` seeded starting
    /// points; the result is a value attained on the sphere and hence a lower
    /// bound on the true norm.
    pub fn norm(&self, restarts: usize) -> TensorNorm {
        match self.order {
            1 => TensorNorm {
                value: self.to_vector().norm(),
                exact: true,
            },
            2 => TensorNorm {
                value: linalg::spectral_norm(&self.to_matrix()),
                exact: true,
            },
            _ => TensorNorm {
                value: self.ascent_norm(restarts.max(1)),
                exact: false,
            },
        }
    }

    fn ascent_norm(&self, restarts: usize) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        let j = self.order as f64;
        // Frobenius-type bound on the Hessian of T[v]^j over the unit ball;
        // shifting by it makes each update a monotone ascent step.
        let frob: f64 = self
            .entries
            .iter()
            .map(|(k, v)| v * v * multiplicity(k))
            .sum::<f64>()
            .sqrt();
        let shift = (j - 1.0) * frob;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_7e45);
        let mut best: f64 = 0.0;
        for r in 0..restarts {
            let mut v = if r < self.dim {
                let mut e = DVector::zeros(self.dim);
                e[r] = 1.0;
                e
            } else {
                DVector::from_fn(self.dim, |_, _| rng.sample::<f64, _>(StandardNormal))
            };
            v /= v.norm().max(f64::MIN_POSITIVE);
            for sign in [1.0, -1.0] {
                let mut u = v.clone();
                let mut val = sign * self.apply_full(u.as_slice());
                for _ in 0..2000 {
                    let grad = self.apply_vector(u.as_slice()) * sign;
                    let mut next = grad + &u * shift;
                    let nn = next.norm();
                    if nn == 0.0 {
                        break;
                    }
                    next /= nn;
                    let nval = sign * self.apply_full(next.as_slice());
                    let moved = (&next - &u).norm();
                    u = next;
                    val = nval;
                    if moved < 1e-13 {
                        break;
                    }
                }
                best = best.max(val.abs());
            }
        }
        best
    }
}

/// All ascending multi-indices of length `order` over `0..dim`.
pub fn sorted_indices(order: usize, dim: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; order];
    loop {
        out.push(cur.clone());
        // advance to the next nondecreasing sequence
        let mut pos = order;
        while pos > 0 && cur[pos - 1] == dim - 1 {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        let v = cur[pos - 1] + 1;
        for c in cur.iter_mut().skip(pos - 1) {
            *c = v;
        }
    }
    out
}

/// Number of index tuples that sort to `k`: `j! / Π αᵢ!`.
pub fn multiplicity(k: &[usize]) -> f64 {
    let mut m = factorial(k.len());
    let mut run = 1usize;
    for w in 1..=k.len() {
        if w < k.len() && k[w] == k[w - 1] {
            run += 1;
        } else {
            m /= factorial(run);
            run = 1;
        }
    }
    m
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Exponent vector of the monomial `Π s_{kᵢ}`.
pub fn exponent_of(k: &[usize], dim: usize) -> Exponent {
    let mut e = vec![0u32; dim];
    for &i in k {
        e[i] += 1;
    }
    e
}

fn distinct(k: &[usize]) -> Vec<usize> {
    let mut d = k.to_vec();
    d.dedup();
    d
}

fn mono(e: &[u32], s: &[f64]) -> f64 {
    super::poly::monomial_value(e, s)
}
