//! Infeasible-start primal-dual path-following method with the HKM search
//! direction and a Mehrotra predictor-corrector step.

use nalgebra::{DMatrix, DVector};

use super::problem::{SdpProblem, SparseSym};
use crate::tensor_poly::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    DualInfeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// Objective magnitude treated as divergence.
    pub divergence: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            step_fraction: 0.98,
            divergence: 1e12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub x: Vec<DMatrix<f64>>,
    pub y: DVector<f64>,
    pub z: Vec<DMatrix<f64>>,
    pub status: SdpStatus,
    /// `max(|pobj − dobj|, ⟨X, Z⟩) / (1 + |pobj| + |dobj|)`.
    pub gap: f64,
    /// `‖b − A(X)‖ / (1 + ‖b‖)`.
    pub primal_residual: f64,
    /// `‖C − Z − Aᵀy‖_F / (1 + ‖C‖_F)`.
    pub dual_residual: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

pub fn solve_sdp(problem: &SdpProblem, tol: f64, max_iter: usize) -> SdpSolution {
    solve_sdp_with(
        problem,
        &SdpOptions {
            tol,
            max_iter,
            ..SdpOptions::default()
        },
    )
}

/// Constraint matrix entries grouped by block.
struct Row {
    blocks: Vec<(usize, Vec<(usize, usize, f64)>)>,
}

impl Row {
    fn from_sparse(a: &SparseSym, nblocks: usize) -> Self {
        let mut per: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); nblocks];
        for &(b, i, j, v) in a.entries() {
            per[b].push((i, j, v));
        }
        Self {
            blocks: per
                .into_iter()
                .enumerate()
                .filter(|(_, e)| !e.is_empty())
                .collect(),
        }
    }

    fn dot(&self, k: &[DMatrix<f64>]) -> f64 {
        let mut acc = 0.0;
        for (b, es) in &self.blocks {
            let m = &k[*b];
            for &(i, j, v) in es {
                acc += if i == j {
                    v * m[(i, i)]
                } else {
                    v * (m[(i, j)] + m[(j, i)])
                };
            }
        }
        acc
    }
}

struct Workspace<'a> {
    sizes: &'a [usize],
    rows: Vec<Row>,
    b: DVector<f64>,
    c: Vec<DMatrix<f64>>,
}

impl Workspace<'_> {
    fn apply(&self, k: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| r.dot(k)))
    }

    fn adjoint(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out = zeros_like(self.sizes);
        for (r, yk) in self.rows.iter().zip(y.iter()) {
            for (b, es) in &r.blocks {
                for &(i, j, v) in es {
                    out[*b][(i, j)] += yk * v;
                    if i != j {
                        out[*b][(j, i)] += yk * v;
                    }
                }
            }
        }
        out
    }

    /// Schur complement `M_ij = ⟨A_i, X A_j Z⁻¹⟩`.
    fn schur(&self, x: &[DMatrix<f64>], zinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let m = self.rows.len();
        let mut out = DMatrix::zeros(m, m);
        let mut g = zeros_like(self.sizes);
        for (jcol, rj) in self.rows.iter().enumerate() {
            for (b, es) in &rj.blocks {
                let n = self.sizes[*b];
                let xb = &x[*b];
                let zb = &zinv[*b];
                let gb = &mut g[*b];
                gb.fill(0.0);
                if es.len() > n {
                    let mut a = DMatrix::zeros(n, n);
                    for &(i, j, v) in es {
                        a[(i, j)] += v;
                        if i != j {
                            a[(j, i)] += v;
                        }
                    }
                    *gb = xb * a * zb;
                } else {
                    for &(r, c, v) in es {
                        gb.ger(v, &xb.column(r), &zb.row(c).transpose(), 1.0);
                        if r != c {
                            gb.ger(v, &xb.column(c), &zb.row(r).transpose(), 1.0);
                        }
                    }
                }
            }
            for (irow, ri) in self.rows.iter().enumerate().skip(jcol) {
                let mut acc = 0.0;
                for (b, es) in &ri.blocks {
                    if !rj.blocks.iter().any(|(bj, _)| bj == b) {
                        continue;
                    }
                    let gb = &g[*b];
                    for &(i, j, v) in es {
                        acc += if i == j {
                            v * gb[(i, i)]
                        } else {
                            v * (gb[(i, j)] + gb[(j, i)])
                        };
                    }
                }
                out[(irow, jcol)] = acc;
                out[(jcol, irow)] = acc;
            }
        }
        out
    }
}

fn zeros_like(sizes: &[usize]) -> Vec<DMatrix<f64>> {
    sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect()
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest `α` with `X + α·D ⪰ 0` (infinite when every block stays PSD).
fn max_step(x: &[DMatrix<f64>], d: &[DMatrix<f64>]) -> Option<f64> {
    let mut alpha = f64::INFINITY;
    for (xb, db) in x.iter().zip(d) {
        let lam = match xb.clone().cholesky() {
            Some(ch) => {
                let l = ch.unpack();
                let t = l.solve_lower_triangular(db)?;
                let w = l.solve_lower_triangular(&t.transpose())?;
                linalg::lambda_min(&w)
            }
            None => {
                // Barely definite: work in the eigenbasis instead.
                let eig = xb.clone().symmetric_eigen();
                if eig.eigenvalues.min() <= 0.0 {
                    return None;
                }
                let s = eig.eigenvalues.map(|v| 1.0 / v.sqrt());
                let w = eig.eigenvectors.transpose() * db * &eig.eigenvectors;
                let w = DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| s[i] * w[(i, j)] * s[j]);
                linalg::lambda_min(&sym(&w))
            }
        };
        if lam < 0.0 {
            alpha = alpha.min(-1.0 / lam);
        }
    }
    Some(alpha)
}

fn inverse_spd(z: &[DMatrix<f64>]) -> Option<Vec<DMatrix<f64>>> {
    z.iter()
        .map(|zb| zb.clone().cholesky().map(|c| c.inverse()))
        .collect()
}

/// Cholesky solve with diagonal jitter up to `1e-10 · max diag`.
fn schur_factor(m: &DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = m.clone().cholesky() {
        return Some(c);
    }
    let scale = m.diagonal().amax().max(1e-300);
    let n = m.nrows();
    let mut jitter = 1e-14;
    while jitter <= 1e-10 * 1.0001 {
        let shifted = m + DMatrix::identity(n, n) * (jitter * scale);
        if let Some(c) = shifted.cholesky() {
            log::debug!("schur complement needed jitter {jitter:e}");
            return Some(c);
        }
        jitter *= 10.0;
    }
    None
}

/// Selects a linearly independent subset of the constraints by modified
/// Gram-Schmidt on their vectorized matrices. Returns the kept indices, or
/// `Err(())` when a dependent row has an inconsistent right-hand side.
fn independent_rows(problem: &SdpProblem) -> Result<Vec<usize>, ()> {
    let sizes = problem.blocks();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0usize, |acc, &n| {
            let o = *acc;
            *acc += n * (n + 1) / 2;
            Some(o)
        })
        .collect();
    let dim: usize = sizes.iter().map(|n| n * (n + 1) / 2).sum();
    let tri = |b: usize, i: usize, j: usize| offsets[b] + j * (j + 1) / 2 + i;

    let mut basis: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut kept = Vec::new();
    for (k, (a, &bk)) in problem.constraints().iter().zip(problem.rhs()).enumerate() {
        let mut v = vec![0.0; dim];
        for &(b, i, j, val) in a.entries() {
            let w = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
            v[tri(b, i, j)] += w * val;
        }
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut bres = bk;
        for _ in 0..2 {
            for (q, beta) in &basis {
                let c: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
                bres -= c * beta;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm0 == 0.0 || norm <= 1e-10 * norm0 {
            if bres.abs() > 1e-8 * (1.0 + bk.abs()) {
                return Err(());
            }
            log::warn!("sdp: dropping linearly dependent constraint {k}");
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        basis.push((v, bres / norm));
        kept.push(k);
    }
    Ok(kept)
}

pub fn solve_sdp_with(problem: &SdpProblem, opts: &SdpOptions) -> SdpSolution {
    let sizes = problem.blocks();
    let m_all = problem.num_constraints();
    let ntot = problem.total_dim() as f64;

    let failed = |status: SdpStatus| SdpSolution {
        x: zeros_like(sizes),
        y: DVector::zeros(m_all),
        z: zeros_like(sizes),
        status,
        gap: f64::INFINITY,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        primal_objective: f64::NAN,
        dual_objective: f64::NAN,
        iterations: 0,
    };

    let kept = match independent_rows(problem) {
        Ok(k) => k,
        Err(()) => return failed(SdpStatus::Infeasible),
    };
    let ws = Workspace {
        sizes,
        rows: kept
            .iter()
            .map(|&k| Row::from_sparse(&problem.constraints()[k], sizes.len()))
            .collect(),
        b: DVector::from_iterator(kept.len(), kept.iter().map(|&k| problem.rhs()[k])),
        c: problem.objective().to_dense(sizes),
    };
    let scatter_y = |y: &DVector<f64>| {
        let mut full = DVector::zeros(m_all);
        for (i, &k) in kept.iter().enumerate() {
            full[k] = y[i];
        }
        full
    };

    // Scaled identity start in every block.
    let row_norms: Vec<Vec<f64>> = ws
        .rows
        .iter()
        .map(|r| {
            let mut per = vec![0.0; sizes.len()];
            for (b, es) in &r.blocks {
                per[*b] = es
                    .iter()
                    .map(|&(i, j, v)| if i == j { v * v } else { 2.0 * v * v })
                    .sum::<f64>()
                    .sqrt();
            }
            per
        })
        .collect();
    let mut x = Vec::with_capacity(sizes.len());
    let mut z = Vec::with_capacity(sizes.len());
    for (bi, &n) in sizes.iter().enumerate() {
        let nf = n as f64;
        let mut xi: f64 = 10.0f64.max(nf.sqrt());
        let mut eta: f64 = 10.0f64.max(nf.sqrt()).max(ws.c[bi].norm());
        for (k, norms) in row_norms.iter().enumerate() {
            xi = xi.max(nf * (1.0 + ws.b[k].abs()) / (1.0 + norms[bi]));
            eta = eta.max(norms[bi]);
        }
        x.push(DMatrix::identity(n, n) * xi);
        z.push(DMatrix::identity(n, n) * eta);
    }
    let mut y = DVector::zeros(ws.rows.len());

    let bnorm = ws.b.norm();
    let cnorm = frob(&ws.c);
    let mut stalls = 0usize;

    let mut status = SdpStatus::MaxIterations;
    let mut iterations = 0usize;
    let (mut gap, mut pres, mut dres, mut pobj, mut dobj);
    loop {
        pobj = inner(&ws.c, &x);
        dobj = ws.b.dot(&y);
        let rp = &ws.b - ws.apply(&x);
        let aty = ws.adjoint(&y);
        let rd: Vec<DMatrix<f64>> = ws
            .c
            .iter()
            .zip(&z)
            .zip(&aty)
            .map(|((c, z), a)| c - z - a)
            .collect();
        pres = rp.norm() / (1.0 + bnorm);
        dres = frob(&rd) / (1.0 + cnorm);
        let xz = inner(&x, &z);
        gap = (pobj - dobj).abs().max(xz) / (1.0 + pobj.abs() + dobj.abs());

        if pres <= opts.tol && dres <= opts.tol && gap <= opts.tol {
            status = SdpStatus::Optimal;
            break;
        }
        if dobj > opts.divergence * (1.0 + cnorm) && dres <= opts.tol.sqrt() {
            status = SdpStatus::Infeasible;
            break;
        }
        if -pobj > opts.divergence * (1.0 + bnorm) && pres <= opts.tol.sqrt() {
            status = SdpStatus::DualInfeasible;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let Some(zinv) = inverse_spd(&z) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let schur = ws.schur(&x, &zinv);
        let Some(chol) = schur_factor(&schur) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let mu = xz / ntot;

        // A(X Rd Z⁻¹) is shared by predictor and corrector.
        let x_rd_zinv: Vec<DMatrix<f64>> = x
            .iter()
            .zip(&rd)
            .zip(&zinv)
            .map(|((xb, rb), zb)| xb * rb * zb)
            .collect();
        let a_x_rd_zinv = ws.apply(&x_rd_zinv);

        // Newton direction; dy is refined against the exact operator because
        // the formed Schur complement loses accuracy near the boundary.
        let direction = |rc: &[DMatrix<f64>]| {
            let rhs = &rp - ws.apply(rc) + &a_x_rd_zinv;
            let mut dy = chol.solve(&rhs);
            let build = |dy: &DVector<f64>| {
                let atdy = ws.adjoint(dy);
                let dz: Vec<DMatrix<f64>> = rd.iter().zip(&atdy).map(|(r, a)| r - a).collect();
                let dx: Vec<DMatrix<f64>> = rc
                    .iter()
                    .zip(&x)
                    .zip(&dz)
                    .zip(&zinv)
                    .map(|(((r, xb), dzb), zb)| r - sym(&(xb * dzb * zb)))
                    .collect();
                (dx, dz)
            };
            let (mut dx, mut dz) = build(&dy);
            for _ in 0..3 {
                let defect = &rp - ws.apply(&dx);
                if defect.norm() <= 1e-14 * (1.0 + rp.norm() + bnorm) {
                    break;
                }
                dy += chol.solve(&defect);
                (dx, dz) = build(&dy);
            }
            (dx, dy, dz)
        };

        // Predictor (affine scaling).
        let rc_aff: Vec<DMatrix<f64>> = x.iter().map(|xb| -xb).collect();
        let (dx_a, _, dz_a) = direction(&rc_aff);
        let (Some(ap), Some(ad)) = (max_step(&x, &dx_a), max_step(&z, &dz_a)) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let ap_aff = ap.min(1.0);
        let ad_aff = ad.min(1.0);
        let (ap, ad) = (ap_aff, ad_aff);
        let x_aff: Vec<DMatrix<f64>> = x.iter().zip(&dx_a).map(|(a, d)| a + d * ap).collect();
        let z_aff: Vec<DMatrix<f64>> = z.iter().zip(&dz_a).map(|(a, d)| a + d * ad).collect();
        let mu_aff = inner(&x_aff, &z_aff) / ntot;
        // Short predictor steps mean the iterate hugs the boundary; recentre.
        let centering = if mu > 0.0 {
            (mu_aff / mu)
                .max(0.0)
                .powi(3)
                .max((1.0 - ap_aff.min(ad_aff)).powi(2))
                .min(1.0)
        } else {
            0.0
        };

        // Corrector.
        let rc: Vec<DMatrix<f64>> = x
            .iter()
            .zip(&zinv)
            .zip(dx_a.iter().zip(&dz_a))
            .map(|((xb, zb), (dxb, dzb))| zb * (centering * mu) - xb - sym(&(dxb * dzb * zb)))
            .collect();
        let (dx, dy, dz) = direction(&rc);
        let (Some(ap), Some(ad)) = (max_step(&x, &dx), max_step(&z, &dz)) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        // Shorter predictor steps signal poor centrality; back off further.
        let fraction = opts.step_fraction.min(0.9 + 0.09 * ap_aff.min(ad_aff));
        let ap = (fraction * ap).min(1.0);
        let ad = (fraction * ad).min(1.0);

        for (xb, d) in x.iter_mut().zip(&dx) {
            *xb += d * ap;
            *xb = sym(xb);
        }
        for (zb, d) in z.iter_mut().zip(&dz) {
            *zb += d * ad;
            *zb = sym(zb);
        }
        y += dy * ad;

        if ap < 1e-8 && ad < 1e-8 {
            stalls += 1;
            if stalls >= 3 {
                status = SdpStatus::NumericalFailure;
                break;
            }
        } else {
            stalls = 0;
        }
    }

    SdpSolution {
        x,
        y: scatter_y(&y),
        z,
        status,
        gap,
        primal_residual: pres,
        dual_residual: dres,
        primal_objective: pobj,
        dual_objective: dobj,
        iterations,
    }
}
