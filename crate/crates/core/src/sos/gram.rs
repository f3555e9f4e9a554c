use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::model::SosModel;
use crate::sdp::{SdpProblem, SparseSym};
use crate::tensor_poly::{factorial, linalg, Exponent, Polynomial};

/// Exponents over `(s, y)` of the Gram basis `y_i · s^β`, `|β| ≤ (p′−2)/2`.
///
/// Ordered by `y` index first, then by total degree of `β`, then
/// lexicographically.
pub fn gram_basis(n: usize, p_prime: usize) -> Vec<Exponent> {
    let d = (p_prime as u32 - 2) / 2;
    let mut betas = Vec::new();
    for deg in 0..=d {
        let mut cur = vec![0u32; n];
        push_compositions(&mut betas, &mut cur, 0, deg);
    }
    let mut out = Vec::with_capacity(n * betas.len());
    for i in 0..n {
        for b in &betas {
            let mut e = vec![0u32; 2 * n];
            e[..n].copy_from_slice(b);
            e[n + i] = 1;
            out.push(e);
        }
    }
    out
}

fn push_compositions(out: &mut Vec<Exponent>, cur: &mut Vec<u32>, pos: usize, left: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k;
        push_compositions(out, cur, pos + 1, left - k);
    }
    cur[pos] = 0;
}

fn add_exponents(a: &[u32], b: &[u32]) -> Exponent {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Adds `c · y_a y_b · q(s)` to `out`, where `out` lives in `(s, y)`.
fn add_times_yy(out: &mut Polynomial, q: &Polynomial, a: usize, b: usize, c: f64) {
    let n = q.dim();
    for (e, v) in q.terms() {
        let mut big = vec![0u32; 2 * n];
        big[..n].copy_from_slice(e);
        big[n + a] += 1;
        big[n + b] += 1;
        out.add_term(big, c * v);
    }
}

/// `yᵀ ∇²(σ/p′ ‖s‖^{p′}) y = ‖s‖^{p′−4}(‖s‖²‖y‖² + (p′−2)(s·y)²)` per unit σ.
pub fn regularizer_form(n: usize, p_prime: usize) -> Polynomial {
    assert!(p_prime >= 4 && p_prime.is_multiple_of(2), "p' must be even and at least 4");
    let dim = 2 * n;
    let mut ss = Polynomial::zero(dim);
    let mut yy = Polynomial::zero(dim);
    let mut sy = Polynomial::zero(dim);
    for i in 0..n {
        let mut e = vec![0u32; dim];
        e[i] = 2;
        ss.add_term(e, 1.0);
        let mut e = vec![0u32; dim];
        e[n + i] = 2;
        yy.add_term(e, 1.0);
        let mut e = vec![0u32; dim];
        e[i] = 1;
        e[n + i] = 1;
        sy.add_term(e, 1.0);
    }
    let inner = &(&ss * &yy) + &(&sy * &sy).scale((p_prime - 2) as f64);
    &ss.pow((p_prime as u32 - 4) / 2) * &inner
}

/// `ĥ(s, y) = yᵀ ∇²_s m(s) y` over the `2n` variables `(s, y)`.
pub fn hessian_form(model: &SosModel) -> Polynomial {
    let n = model.n();
    let mut out = Polynomial::zero(2 * n);
    let one = Polynomial::constant(n, 1.0);
    let hb = model.h_bar();
    for a in 0..n {
        for b in a..n {
            let c = if a == b { hb[(a, a)] } else { hb[(a, b)] + hb[(b, a)] };
            if c != 0.0 {
                add_times_yy(&mut out, &one, a, b, c);
            }
        }
    }
    for t in model.higher() {
        let q = t.to_polynomial(1.0 / factorial(t.order()));
        for a in 0..n {
            let qa = q.partial(a);
            for b in a..n {
                let qab = qa.partial(b);
                add_times_yy(&mut out, &qab, a, b, if a == b { 1.0 } else { 2.0 });
            }
        }
    }
    if model.sigma() != 0.0 {
        out = &out + &regularizer_form(n, model.p_prime()).scale(model.sigma());
    }
    out
}

/// `zᵀQz` as a polynomial.
pub fn gram_polynomial(basis: &[Exponent], q: &DMatrix<f64>) -> Polynomial {
    let dim = basis.first().map_or(0, |e| e.len());
    let mut out = Polynomial::zero(dim);
    for a in 0..basis.len() {
        for b in a..basis.len() {
            let c = if a == b { q[(a, a)] } else { q[(a, b)] + q[(b, a)] };
            if c != 0.0 {
                out.add_term(add_exponents(&basis[a], &basis[b]), c);
            }
        }
    }
    out
}

/// Max coefficient mismatch between `zᵀQz` and `target`.
pub fn gram_residual(basis: &[Exponent], q: &DMatrix<f64>, target: &Polynomial) -> f64 {
    if basis.is_empty() {
        return target.inf_star_norm();
    }
    gram_polynomial(basis, q).max_coefficient_diff(target)
}

/// Per-variable scales `d` for which the coefficients of `p(d ⊙ x)` are as
/// uniform as possible, by least squares on their logarithms.
pub fn balancing_scales(p: &Polynomial) -> Vec<f64> {
    const RIDGE: f64 = 1e-3;
    const LOG_CAP: f64 = 30.0;
    let dim = p.dim();
    let floor = 1e-14 * p.inf_star_norm();
    let k = dim + 1;
    let mut a = DMatrix::<f64>::zeros(k, k);
    let mut b = DVector::<f64>::zeros(k);
    let mut used = 0;
    for (e, c) in p.terms().filter(|(_, c)| c.abs() > floor) {
        let row = DVector::from_iterator(k, e.iter().map(|&v| f64::from(v)).chain([1.0]));
        a += &row * row.transpose();
        b -= &row * c.abs().ln();
        used += 1;
    }
    if used == 0 {
        return vec![1.0; dim];
    }
    for i in 0..k {
        a[(i, i)] += RIDGE;
    }
    match linalg::solve_spd_with_ridge(&a, &b, 0.0) {
        Some((w, _)) => w.iter().take(dim).map(|v| v.clamp(-LOG_CAP, LOG_CAP).exp()).collect(),
        None => vec![1.0; dim],
    }
}

/// Value of every basis monomial at the scales `d`.
pub fn basis_scales(basis: &[Exponent], d: &[f64]) -> Vec<f64> {
    basis
        .iter()
        .map(|e| e.iter().zip(d).map(|(&k, v)| v.powi(k as i32)).product())
        .collect()
}

/// `D Q D` with `D = diag(dz)`.
pub fn congruence(q: &DMatrix<f64>, dz: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| dz[i] * q[(i, j)] * dz[j])
}

/// Builds `min t  s.t.  zᵀQz + t·w = target` coefficientwise, with blocks
/// `[Q (|basis|×|basis|), t (1×1)]`.
pub(crate) fn gram_program(target: &Polynomial, weight: &Polynomial, basis: &[Exponent]) -> SdpProblem {
    let mut pairs: BTreeMap<Exponent, Vec<(usize, usize)>> = BTreeMap::new();
    for a in 0..basis.len() {
        for b in a..basis.len() {
            pairs
                .entry(add_exponents(&basis[a], &basis[b]))
                .or_default()
                .push((a, b));
        }
    }
    for (e, _) in target.terms().chain(weight.terms()) {
        pairs.entry(e.clone()).or_default();
    }
    let mut prob = SdpProblem::new(vec![basis.len(), 1]);
    let mut c = SparseSym::new();
    c.push(1, 0, 0, 1.0);
    prob.set_objective(c);
    for (m, list) in &pairs {
        let mut a = SparseSym::new();
        for &(i, j) in list {
            a.push(0, i, j, 1.0);
        }
        let w = weight.coefficient(m);
        if w != 0.0 {
            a.push(1, 0, 0, w);
        }
        prob.add_constraint(a, target.coefficient(m));
    }
    prob
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sos::CaseTag;
    use crate::tensor_poly::SymmetricTensor;
    use nalgebra::DVector;

    fn univariate(h: f64, t: f64, sigma: f64) -> SosModel {
        SosModel::new(
            3,
            0.0,
            DVector::from_element(1, 0.0),
            DMatrix::from_element(1, 1, h),
            vec![SymmetricTensor::from_fn(3, 1, |_| t)],
            0.5,
            sigma,
            CaseTag::StronglyConvex,
        )
        .unwrap()
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(gram_basis(1, 4).len(), 2);
        assert_eq!(gram_basis(2, 4).len(), 6);
        assert_eq!(gram_basis(2, 6).len(), 12);
        let b = gram_basis(3, 4);
        assert_eq!(b.len(), 12);
        assert_eq!(b[0], vec![0, 0, 0, 1, 0, 0]);
        assert_eq!(b[1], vec![1, 0, 0, 1, 0, 0]);
    }

    #[test]
    fn univariate_form() {
        let m = univariate(1.0, 6.0, 2.0);
        let h = hessian_form(&m);
        // (1 + 6s + 6s²) y²
        assert_eq!(h.len(), 3);
        assert_eq!(h.coefficient(&[0, 2]), 1.0);
        assert_eq!(h.coefficient(&[1, 2]), 6.0);
        assert_eq!(h.coefficient(&[2, 2]), 6.0);
    }

    #[test]
    fn quadratic_form_is_constant_in_s() {
        let hb = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let m = SosModel::new(
            3,
            1.0,
            DVector::zeros(2),
            hb,
            vec![SymmetricTensor::zeros(3, 2)],
            0.5,
            0.0,
            CaseTag::StronglyConvex,
        )
        .unwrap();
        let h = hessian_form(&m);
        assert_eq!(h.coefficient(&[0, 0, 2, 0]), 2.0);
        assert_eq!(h.coefficient(&[0, 0, 1, 1]), 1.0);
        assert_eq!(h.coefficient(&[0, 0, 0, 2]), 1.0);
        assert_eq!(h.len(), 3);
    }

    #[test]
    fn regularizer_form_matches_direct_formula() {
        let r = regularizer_form(2, 6);
        let s = [0.3, -1.2];
        let y = [0.7, 0.4];
        let ns2 = s[0] * s[0] + s[1] * s[1];
        let ny2 = y[0] * y[0] + y[1] * y[1];
        let sy = s[0] * y[0] + s[1] * y[1];
        let want = ns2 * (ns2 * ny2 + 4.0 * sy * sy);
        let got = r.evaluate(&[s[0], s[1], y[0], y[1]]);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn zero_gram_on_zero_polynomial() {
        let basis = gram_basis(1, 4);
        let q = DMatrix::zeros(2, 2);
        assert_eq!(gram_residual(&basis, &q, &Polynomial::zero(2)), 0.0);
    }

    #[test]
    fn gram_polynomial_counts_off_diagonal_twice() {
        // basis (y, s·y): [1 1; 1 1] gives (y + sy)² = y² + 2sy² + s²y²
        let basis = gram_basis(1, 4);
        let q = DMatrix::from_element(2, 2, 1.0);
        let p = gram_polynomial(&basis, &q);
        assert_eq!(p.coefficient(&[0, 2]), 1.0);
        assert_eq!(p.coefficient(&[1, 2]), 2.0);
        assert_eq!(p.coefficient(&[2, 2]), 1.0);
    }
    #[test]
    fn balancing_flattens_a_graded_polynomial() {
        // 1e-6·y² + s·y² + 1e6·s²·y²  →  s scaled by about 1e-6
        let mut p = Polynomial::zero(2);
        p.add_term(vec![0, 2], 1e-6);
        p.add_term(vec![1, 2], 1.0);
        p.add_term(vec![2, 2], 1e6);
        let d = balancing_scales(&p);
        let b = p.scale_variables(&d);
        let coefs: Vec<f64> = b.terms().map(|(_, c)| c.abs()).collect();
        let spread = coefs.iter().cloned().fold(0.0, f64::max) / coefs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 10.0, "spread {spread}");
    }

    #[test]
    fn congruence_round_trip() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let dz = [0.5, 4.0];
        let inv: Vec<f64> = dz.iter().map(|v| 1.0 / v).collect();
        let back = congruence(&congruence(&q, &dz), &inv);
        assert!((back - q).abs().max() < 1e-15);
    }
}
