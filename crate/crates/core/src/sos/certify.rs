use std::io::{self, Write};

use log::{debug, warn};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::gram::{
    balancing_scales, basis_scales, congruence, gram_basis, gram_program, gram_residual, hessian_form,
    regularizer_form,
};
use super::model::SosModel;
use crate::error::{Error, Result};
use crate::sdp::{solve_sdp_with, SdpOptions, SdpSolution, SdpStatus};
use crate::tensor_poly::{linalg, Exponent, Polynomial};

/// Normalized feasibility margin below which a model counts as SoS-convex.
pub const FEASIBILITY_TOL: f64 = 1e-8;

const SAMPLE_SEED: u64 = 0x5a3b_1e55;
const SAMPLES: usize = 100;

fn options() -> SdpOptions {
    SdpOptions {
        tol: 1e-10,
        max_iter: 150,
        ..SdpOptions::default()
    }
}

/// Gram representation `ĥ(s, y) ≈ zᵀQz` over the monomial basis `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramCertificate {
    /// Exponents over `(s, y)`.
    pub basis: Vec<Exponent>,
    pub q: DMatrix<f64>,
    /// Per-variable scales `d` of the balanced form `ĥ(d ⊙ (s, y))`.
    pub scales: Vec<f64>,
    /// Max coefficient mismatch between `zᵀQz` and `ĥ`, in balanced
    /// variables.
    pub residual: f64,
    /// Regularization weight the certificate was produced for.
    pub sigma: f64,
}

/// Outcome of a fixed-σ SoS-convexity query.
#[derive(Clone, Debug, PartialEq)]
pub enum SosCheck {
    Certified(GramCertificate),
    /// Not SoS-convex; `margin` is the normalized distance to feasibility.
    Rejected { margin: f64 },
    /// The SDP solver did not return a usable answer.
    Indeterminate(SdpStatus),
}

impl SosCheck {
    pub fn is_certified(&self) -> bool {
        matches!(self, SosCheck::Certified(_))
    }

    pub fn certificate(&self) -> Option<&GramCertificate> {
        match self {
            SosCheck::Certified(c) => Some(c),
            _ => None,
        }
    }
}

fn sym_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn solve_scaled(
    target: &Polynomial,
    weight: &Polynomial,
    basis: &[Exponent],
) -> SdpSolution {
    let prob = gram_program(target, weight, basis);
    let sol = solve_sdp_with(&prob, &options());
    debug!(
        "gram sdp: {} constraints, status {:?}, gap {:.2e}, iters {}",
        prob.num_constraints(),
        sol.status,
        sol.gap,
        sol.iterations
    );
    sol
}

/// Smallest σ ≥ 0 for which the model is SoS-convex, with its certificate.
///
/// The model's own σ is ignored.
pub fn min_sigma_sos(model: &SosModel) -> Result<(f64, GramCertificate)> {
    let h0 = hessian_form(&model.with_sigma(0.0));
    let r = regularizer_form(model.n(), model.p_prime());
    let basis = gram_basis(model.n(), model.p_prime());

    // Minimizes τ over ĥ₀(d⊙·)/ν + τ·(κ/ν)·r(d⊙·) SoS, so σ = κτ.
    let attempt = |kappa: f64| -> Option<(f64, GramCertificate)> {
        let d = balancing_scales(&(&h0 + &r.scale(kappa)));
        let hb = h0.scale_variables(&d);
        let rb = r.scale_variables(&d);
        let nu = hb.inf_star_norm().max(rb.inf_star_norm() * kappa).max(f64::MIN_POSITIVE);
        let sol = solve_scaled(&hb.scale(1.0 / nu), &rb.scale(-kappa / nu), &basis);
        if !sol.is_optimal() {
            return None;
        }
        let sigma = sol.x[1][(0, 0)].max(0.0) * kappa;
        let qb = sym_part(&sol.x[0]) * nu;
        let full = &hb + &rb.scale(sigma);
        let residual = gram_residual(&basis, &qb, &full);
        if residual > 1e-7 * (1.0 + full.inf_star_norm()) {
            warn!("sigma SDP residual {residual:.2e} too large");
            return None;
        }
        let inv: Vec<f64> = basis_scales(&basis, &d).iter().map(|v| 1.0 / v).collect();
        Some((
            sigma,
            GramCertificate {
                basis: basis.clone(),
                q: congruence(&qb, &inv),
                scales: d,
                residual,
                sigma,
            },
        ))
    };

    let mut best = attempt(1.0);
    for _ in 0..2 {
        match &best {
            Some((sigma, _)) if *sigma > 0.0 && !(1e-2..=1e2).contains(sigma) => {
                match attempt(*sigma) {
                    Some(refined) => best = Some(refined),
                    None => break,
                }
            }
            _ => break,
        }
    }
    if let Some(found) = best {
        return Ok(found);
    }
    warn!("direct sigma SDP failed, bisecting");
    bisect_sigma(model)
}

fn bisect_sigma(model: &SosModel) -> Result<(f64, GramCertificate)> {
    let check = |s: f64| is_sos_convex(&model.with_sigma(s));
    if let SosCheck::Certified(c) = check(0.0) {
        return Ok((0.0, c));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut cert = None;
    let mut last = None;
    for _ in 0..60 {
        match check(hi) {
            SosCheck::Certified(c) => {
                cert = Some(c);
                break;
            }
            other => {
                last = Some(other);
                lo = hi;
                hi *= 2.0;
            }
        }
    }
    let mut cert = cert.ok_or_else(|| {
        Error::Certification(format!(
            "no SoS-convex sigma found up to {lo:e}; last outcome {last:?}"
        ))
    })?;
    for _ in 0..80 {
        if hi - lo <= 1e-10 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match check(mid) {
            SosCheck::Certified(c) => {
                hi = mid;
                cert = c;
            }
            _ => lo = mid,
        }
    }
    Ok((hi, cert))
}

/// Decides SoS-convexity of the model at its own σ.
///
/// Solves `min t  s.t.  zᵀQz − t·zᵀz = ĥ / ‖ĥ‖_∞*`, `Q ⪰ 0`, with `t` free
/// (shifted by the lower bound `−n` that the `s = 0` coefficients imply).
/// The model is certified when `t* ≤ FEASIBILITY_TOL`; then
/// `Q − min(t*, 0)·I` is the Gram matrix.
pub fn is_sos_convex(model: &SosModel) -> SosCheck {
    let h = hessian_form(model);
    let basis = gram_basis(model.n(), model.p_prime());
    let d = balancing_scales(&h);
    let hb = h.scale_variables(&d);
    let nu = hb.inf_star_norm();
    if nu == 0.0 {
        return SosCheck::Certified(GramCertificate {
            q: DMatrix::zeros(basis.len(), basis.len()),
            basis,
            scales: d,
            residual: 0.0,
            sigma: model.sigma(),
        });
    }
    let mut zz = Polynomial::zero(2 * model.n());
    for e in &basis {
        zz.add_term(e.iter().map(|k| 2 * k).collect(), -1.0);
    }
    let shift = model.n() as f64;
    let target = &hb.scale(1.0 / nu) + &zz.scale(shift);
    let sol = solve_scaled(&target, &zz, &basis);
    let t = sol.x[1][(0, 0)] - shift;
    // The returned Q is checked directly, so a stalled solve near the
    // feasibility boundary still yields a usable certificate.
    if t <= FEASIBILITY_TOL && sol.status != SdpStatus::Infeasible {
        let mut qb = sym_part(&sol.x[0]);
        for i in 0..qb.nrows() {
            qb[(i, i)] -= t.min(0.0);
        }
        qb *= nu;
        let residual = gram_residual(&basis, &qb, &hb);
        if residual <= 10.0 * FEASIBILITY_TOL * nu
            && linalg::lambda_min(&qb) >= -1e-9 * (1.0 + linalg::spectral_norm(&qb))
        {
            let inv: Vec<f64> = basis_scales(&basis, &d).iter().map(|v| 1.0 / v).collect();
            return SosCheck::Certified(GramCertificate {
                q: congruence(&qb, &inv),
                basis,
                scales: d,
                residual,
                sigma: model.sigma(),
            });
        }
    }
    if sol.is_optimal() && t > FEASIBILITY_TOL {
        return SosCheck::Rejected { margin: t };
    }
    // Weak duality: a dual-feasible point bounds t* from below.
    if sol.dual_residual <= 1e-8 && sol.dual_objective - shift > FEASIBILITY_TOL {
        return SosCheck::Rejected {
            margin: sol.dual_objective - shift,
        };
    }
    SosCheck::Indeterminate(sol.status)
}

/// Independent checks of a certificate against a model (at the model's σ).
#[derive(Clone, Debug, PartialEq)]
pub struct CertificateReport {
    pub residual: f64,
    /// `‖ĥ‖_∞*` of the balanced Hessian form.
    pub target_norm: f64,
    pub gram_lambda_min: f64,
    pub gram_norm: f64,
    pub samples: usize,
    /// Sampled points with `λ_min(∇²m(s)) < −1e-8·(1 + ‖∇²m(s)‖)`.
    pub hessian_violations: usize,
    /// Smallest `λ_min(∇²m(s)) / (1 + ‖∇²m(s)‖)` seen.
    pub worst_ratio: f64,
}

impl CertificateReport {
    pub fn passes(&self) -> bool {
        self.residual <= 1e-7 * (1.0 + self.target_norm)
            && self.gram_lambda_min >= -1e-9 * (1.0 + self.gram_norm)
            && self.hessian_violations == 0
    }
}

pub fn verify_certificate(cert: &GramCertificate, model: &SosModel) -> CertificateReport {
    let hb = hessian_form(model).scale_variables(&cert.scales);
    let qb = congruence(&cert.q, &basis_scales(&cert.basis, &cert.scales));
    let residual = gram_residual(&cert.basis, &qb, &hb);
    let (gram_lambda_min, gram_norm) = if qb.is_empty() {
        (0.0, 0.0)
    } else {
        (linalg::lambda_min(&qb), linalg::spectral_norm(&qb))
    };
    let (hessian_violations, worst_ratio) = sample_hessians(model, SAMPLES);
    CertificateReport {
        residual,
        target_norm: hb.inf_star_norm(),
        gram_lambda_min,
        gram_norm,
        samples: SAMPLES,
        hessian_violations,
        worst_ratio,
    }
}

/// Checks `λ_min(∇²m(s))` at `count` random points spread over several scales.
pub fn sample_hessians(model: &SosModel, count: usize) -> (usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..count {
        let radius = 10f64.powf(rng.random_range(-1.5..1.5));
        let s: Vec<f64> = (0..model.n())
            .map(|_| radius * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let hess = model.hessian(&s);
        let ratio = linalg::lambda_min(&hess) / (1.0 + linalg::spectral_norm(&hess));
        if ratio < -1e-8 {
            violations += 1;
        }
        worst = worst.min(ratio);
    }
    (violations, worst)
}

/// Writes `ĥ` and the Gram basis in readable form.
pub fn write_dump<W: Write>(model: &SosModel, mut w: W) -> io::Result<()> {
    writeln!(w, "case: {}", model.case_tag())?;
    writeln!(w, "sigma: {:e}", model.sigma())?;
    writeln!(w, "h_hat(s, y) = {}", hessian_form(model))?;
    let basis = gram_basis(model.n(), model.p_prime());
    writeln!(w, "basis ({} monomials):", basis.len())?;
    for e in &basis {
        writeln!(w, "  {}", Polynomial::monomial(e.clone(), 1.0))?;
    }
    Ok(())
}
