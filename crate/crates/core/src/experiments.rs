//! Scaling scans of the minimal regularization weight and the strongly convex
//! rate experiment, with their CSV writers.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::driver::{run, ArpConfig, Objective, RunStatus};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::problems::ProblemSpec;
use crate::sos::{min_sigma_sos, CaseTag, SosModel};
use crate::tensor_poly::{linalg, SymmetricTensor};

/// Seed used when neither a flag nor `SOSARP_SEED` provides one.
pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScanKind {
    /// Vary the largest absolute order-3 entry at fixed δ.
    TensorScale { delta: f64 },
    /// Vary δ with the tensors fixed (largest absolute order-3 entry 1).
    Delta,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanConfig {
    pub kind: ScanKind,
    pub n: usize,
    pub p: usize,
    pub seeds: usize,
    pub base_seed: u64,
    /// Tensor scales or δ values.
    pub values: Vec<f64>,
    pub execution: Execution,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(3..=4).contains(&self.p) {
            return bad(format!("scans support p = 3 or 4, got {}", self.p));
        }
        if self.seeds == 0 {
            return bad("at least one seed is required".into());
        }
        if self.values.is_empty() {
            return bad("the value list is empty".into());
        }
        if let Some(v) = self.values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return bad(format!("scan values must be positive, got {v}"));
        }
        match self.kind {
            ScanKind::TensorScale { delta } if !(delta > 0.0 && delta <= 1.0) => {
                bad(format!("delta = {delta} must lie in (0, 1]"))
            }
            ScanKind::Delta if self.values.iter().any(|&d| d > 1.0) => bad("delta values must lie in (0, 1]".into()),
            _ => Ok(()),
        }
    }
}

/// Draws `(g, H, T₃[, T₄])` with standard normal entries, shifts `H` so that
/// `λ_min = δ`, and scales `T₃` to the given largest absolute entry.
pub fn random_model(n: usize, p: usize, delta: f64, tensor_scale: f64, seed: u64) -> Result<SosModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let h = (&a + a.transpose()) * 0.5;
    let h_bar = &h + DMatrix::identity(n, n) * (delta - linalg::lambda_min(&h));
    let t3 = SymmetricTensor::random_normal(3, n, &mut rng);
    let t3 = t3.scaled(tensor_scale / t3.max_abs_entry());
    let mut higher = vec![t3];
    if p >= 4 {
        higher.push(SymmetricTensor::random_normal(4, n, &mut rng));
    }
    SosModel::new(p, 0.0, g, h_bar, higher, delta, 0.0, CaseTag::StronglyConvex)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanCell {
    pub x: f64,
    pub seed: u64,
    /// `Err` carries the failure message; such cells are excluded from fits.
    pub sigma_bar: std::result::Result<f64, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanSummary {
    pub x: f64,
    /// Geometric mean of the positive σ̄ values at this `x`.
    pub geometric_mean: Option<f64>,
    pub used: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub cells: Vec<ScanCell>,
    pub summaries: Vec<ScanSummary>,
    /// Least-squares slope of `log σ̄` against `log x`; needs two summaries.
    pub slope: Option<f64>,
    pub failures: usize,
}

pub fn run_scan(cfg: &ScanConfig) -> Result<ScanResult> {
    cfg.validate()?;
    let jobs: Vec<(f64, u64)> = cfg
        .values
        .iter()
        .flat_map(|&x| (0..cfg.seeds as u64).map(move |s| (x, s)))
        .collect();
    let cells = par::map(&jobs, cfg.execution, |&(x, s)| {
        let seed = cfg.base_seed.wrapping_add(s);
        let (delta, scale) = match cfg.kind {
            ScanKind::TensorScale { delta } => (delta, x),
            ScanKind::Delta => (x, 1.0),
        };
        let sigma_bar = random_model(cfg.n, cfg.p, delta, scale, seed)
            .and_then(|m| min_sigma_sos(&m))
            .map_err(|e| e.to_string())
            .and_then(|(sb, _)| {
                if sb > 0.0 {
                    Ok(sb)
                } else {
                    Err(format!("nonpositive sigma_bar {sb:e}"))
                }
            });
        ScanCell { x, seed, sigma_bar }
    });
    let summaries: Vec<ScanSummary> = cfg
        .values
        .iter()
        .map(|&x| {
            let logs: Vec<f64> = cells
                .iter()
                .filter(|c| c.x == x)
                .filter_map(|c| c.sigma_bar.as_ref().ok().map(|v| v.ln()))
                .collect();
            let geometric_mean = (!logs.is_empty()).then(|| (logs.iter().sum::<f64>() / logs.len() as f64).exp());
            ScanSummary {
                x,
                geometric_mean,
                used: logs.len(),
            }
        })
        .collect();
    let points: Vec<(f64, f64)> = summaries
        .iter()
        .filter_map(|s| s.geometric_mean.map(|g| (s.x.ln(), g.ln())))
        .collect();
    let failures = cells.iter().filter(|c| c.sigma_bar.is_err()).count();
    Ok(ScanResult {
        slope: fit_slope(&points),
        cells,
        summaries,
        failures,
    })
}

/// Ordinary least-squares slope; `None` with fewer than two distinct abscissae.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `k` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..k)
                .map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp())
                .collect()
        }
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:e}")
}

/// Columns `row,x,seed,sigma_bar,slope,failures`; `row` is one of `cell`,
/// `failed`, `summary`, `footer`.
pub fn write_scan_csv<W: Write>(result: &ScanResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["row", "x", "seed", "sigma_bar", "slope", "failures"])?;
    for c in &result.cells {
        match &c.sigma_bar {
            Ok(v) => out.write_record(["cell", &fmt_num(c.x), &c.seed.to_string(), &fmt_num(*v), "", ""])?,
            Err(_) => out.write_record(["failed", &fmt_num(c.x), &c.seed.to_string(), "", "", ""])?,
        }
    }
    for s in &result.summaries {
        let gm = s.geometric_mean.map(fmt_num).unwrap_or_default();
        out.write_record(["summary", &fmt_num(s.x), "", &gm, "", ""])?;
    }
    let slope = result.slope.map(fmt_num).unwrap_or_default();
    out.write_record(["footer", "", "", "", &slope, &result.failures.to_string()])?;
    out.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateRow {
    pub epsilon: f64,
    pub status: RunStatus,
    pub successful: usize,
    pub total: usize,
    /// `f` after each iteration.
    pub f_trajectory: Vec<f64>,
}

/// Runs the driver on a strongly convex problem for every ε in `epsilons`.
pub fn convex_rate(
    problem: &ProblemSpec,
    base: &ArpConfig,
    epsilons: &[f64],
    execution: Execution,
) -> Result<Vec<RateRow>> {
    if !problem.is_strongly_convex() {
        return Err(Error::NotStronglyConvex(problem.name.clone()));
    }
    if epsilons.is_empty() {
        return Err(Error::InvalidConfig("the epsilon list is empty".into()));
    }
    for &e in epsilons {
        ArpConfig { epsilon: e, ..base.clone() }.validate()?;
    }
    par::map(epsilons, execution, |&epsilon| {
        let cfg = ArpConfig { epsilon, ..base.clone() };
        let res = run(problem as &dyn Objective, &cfg)?;
        Ok(RateRow {
            epsilon,
            status: res.status,
            successful: res.successful,
            total: res.records.len(),
            f_trajectory: res.records.iter().map(|r| r.f_after).collect(),
        })
    })
    .into_iter()
    .collect()
}

/// Checks `N(ε/10) ≤ 2·N(ε) + 5` and monotone counts over rows whose ε
/// values step down by exactly a factor of ten.
pub fn sublinear_growth_holds(rows: &[RateRow]) -> bool {
    let mut sorted: Vec<&RateRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    sorted.windows(2).all(|w| {
        let (coarse, fine) = (w[0], w[1]);
        let tenth = ((coarse.epsilon / fine.epsilon) - 10.0).abs() < 1e-9 * 10.0;
        fine.successful >= coarse.successful && (!tenth || fine.successful <= 2 * coarse.successful + 5)
    })
}

/// Columns `epsilon,status,successful_iterations,total_iterations`.
pub fn write_rate_csv<W: Write>(rows: &[RateRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["epsilon", "status", "successful_iterations", "total_iterations"])?;
    for r in rows {
        out.write_record([
            fmt_num(r.epsilon),
            r.status.to_string(),
            r.successful.to_string(),
            r.total.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Columns `epsilon,iter,f,f_gap`, where `f_gap` is measured against the
/// smallest final value over all rows.
pub fn write_trajectory_csv<W: Write>(rows: &[RateRow], w: W) -> Result<()> {
    let f_low = rows
        .iter()
        .filter_map(|r| r.f_trajectory.last().copied())
        .fold(f64::INFINITY, f64::min);
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["epsilon", "iter", "f", "f_gap"])?;
    for r in rows {
        for (k, f) in r.f_trajectory.iter().enumerate() {
            out.write_record([fmt_num(r.epsilon), k.to_string(), fmt_num(*f), fmt_num(f - f_low)])?;
        }
    }
    out.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [1.0f64, 10.0, 100.0].iter().map(|x| (x.ln(), (3.0 * x * x).ln())).collect();
        assert!((fit_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fit_slope(&pts[..1]), None);
    }

    #[test]
    fn log_space_endpoints() {
        let v = log_space(1e-3, 1.0, 7);
        assert_eq!(v.len(), 7);
        assert!((v[0] - 1e-3).abs() < 1e-15);
        assert!((v[6] - 1.0).abs() < 1e-12);
        assert!((v[3] - 10f64.powf(-1.5)).abs() < 1e-12);
    }

    #[test]
    fn random_model_is_case_one() {
        let m = random_model(2, 3, 0.1, 5.0, 1).unwrap();
        assert!((linalg::lambda_min(m.h_bar()) - 0.1).abs() < 1e-12);
        assert!((m.higher()[0].max_abs_entry() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn single_value_has_no_slope() {
        let cfg = ScanConfig {
            kind: ScanKind::TensorScale { delta: 1.0 },
            n: 2,
            p: 3,
            seeds: 2,
            base_seed: 1,
            values: vec![10.0],
            execution: Execution::Sequential,
        };
        let r = run_scan(&cfg).unwrap();
        assert_eq!(r.cells.len(), 2);
        assert_eq!(r.slope, None);
        let mut buf = Vec::new();
        write_scan_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().last().unwrap().starts_with("footer,,,,,0"));
    }

    #[test]
    fn validation() {
        let ok = ScanConfig {
            kind: ScanKind::Delta,
            n: 2,
            p: 3,
            seeds: 1,
            base_seed: 0,
            values: vec![0.1],
            execution: Execution::Sequential,
        };
        assert!(ok.validate().is_ok());
        assert!(ScanConfig { values: vec![], ..ok.clone() }.validate().is_err());
        assert!(ScanConfig { seeds: 0, ..ok.clone() }.validate().is_err());
        assert!(ScanConfig { values: vec![2.0], ..ok.clone() }.validate().is_err());
        assert!(ScanConfig { p: 5, ..ok }.validate().is_err());
    }
}
