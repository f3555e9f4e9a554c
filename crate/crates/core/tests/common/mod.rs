//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sosarp::sdp::{SdpProblem, SparseSym};
use sosarp::sos::{CaseTag, SosModel};
use sosarp::tensor_poly::SymmetricTensor;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Minimal σ making `h + t·s + 3σs²` nonnegative on ℝ.
pub fn univariate_sigma_bar(h: f64, t: f64) -> f64 {
    t * t / (12.0 * h)
}

pub fn univariate_model(h: f64, t: f64, sigma: f64) -> SosModel {
    SosModel::new(
        3,
        0.0,
        DVector::zeros(1),
        DMatrix::from_element(1, 1, h),
        vec![SymmetricTensor::from_fn(3, 1, |_| t)],
        h.min(1.0),
        sigma,
        CaseTag::StronglyConvex,
    )
    .unwrap()
}

/// Random p = 3 model with `λ_min(H̄) = δ` and standard normal data.
pub fn random_cubic_model(n: usize, delta: f64, seed: u64) -> SosModel {
    let mut r = rng(seed);
    let g = DVector::from_fn(n, |_, _| r.sample::<f64, _>(StandardNormal));
    let a = DMatrix::from_fn(n, n, |_, _| r.sample::<f64, _>(StandardNormal));
    let h = (&a + a.transpose()) * 0.5;
    let lmin = h.clone().symmetric_eigen().eigenvalues.min();
    let h_bar = h + DMatrix::identity(n, n) * (delta - lmin);
    let t = SymmetricTensor::random_normal(3, n, &mut r);
    SosModel::new(3, 0.0, g, h_bar, vec![t], delta, 0.0, CaseTag::StronglyConvex).unwrap()
}

/// Central finite-difference Hessian of `f` at `x`.
pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut out = DMatrix::zeros(n, n);
    let mut p = x.to_vec();
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                p.copy_from_slice(x);
                p[i] += si * h;
                p[j] += sj * h;
                acc += w * f(&p);
            }
            out[(i, j)] = acc / (4.0 * h * h);
        }
    }
    out
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p.copy_from_slice(x);
            p[i] += h;
            let up = f(&p);
            p[i] -= 2.0 * h;
            let down = f(&p);
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// SDP with a planted strictly complementary primal-dual pair.
pub struct PlantedSdp {
    pub problem: SdpProblem,
    /// `⟨C, X*⟩ = bᵀy*`.
    pub optimum: f64,
}

fn random_orthogonal(r: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |_, _| r.sample::<f64, _>(StandardNormal)).qr().q()
}

/// Up to three blocks of size `≤ max_block` and at most `max_constraints`
/// sparse random constraints.
pub fn planted_sdp(seed: u64, max_block: usize, max_constraints: usize) -> PlantedSdp {
    let mut r = rng(seed);
    let blocks: Vec<usize> = (0..r.random_range(1..=3)).map(|_| r.random_range(1..=max_block)).collect();
    let capacity: usize = blocks.iter().map(|d| d * (d + 1) / 2).sum();
    let m = r.random_range(1..=max_constraints.min(capacity));

    let mut x_star = Vec::new();
    let mut z_star = Vec::new();
    for &d in &blocks {
        let u = random_orthogonal(&mut r, d);
        let rank = if d == 1 { r.random_range(0..=1) } else { r.random_range(1..d) };
        let mut lx = DVector::zeros(d);
        let mut lz = DVector::zeros(d);
        for i in 0..d {
            let v = r.random_range(0.5..2.0);
            if i < rank {
                lx[i] = v;
            } else {
                lz[i] = v;
            }
        }
        x_star.push(&u * DMatrix::from_diagonal(&lx) * u.transpose());
        z_star.push(&u * DMatrix::from_diagonal(&lz) * u.transpose());
    }

    let mut problem = SdpProblem::new(blocks.clone());
    let mut c = z_star.clone();
    let mut optimum = 0.0;
    for _ in 0..m {
        let mut a = SparseSym::new();
        for _ in 0..r.random_range(3..=12) {
            let b = r.random_range(0..blocks.len());
            let i = r.random_range(0..blocks[b]);
            let j = r.random_range(0..blocks[b]);
            a.push(b, i, j, r.sample::<f64, _>(StandardNormal));
        }
        let y: f64 = r.sample(StandardNormal);
        let rhs = a.dot(&x_star);
        a.add_to(&mut c, y);
        optimum += y * rhs;
        problem.add_constraint(a, rhs);
    }
    problem.set_objective(SparseSym::from_dense(&c));
    PlantedSdp { problem, optimum }
}
