use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sosarp::driver::{build_model, classify_case, run, ArpConfig, IterationRecord, Objective, RunStatus};
use sosarp::experiments::{
    convex_rate, log_space, run_scan, sublinear_growth_holds, write_rate_csv, write_scan_csv, write_trajectory_csv,
    ScanConfig, ScanKind, DEFAULT_SEED,
};
use sosarp::par::Execution;
use sosarp::problems::{bundled_problem, check_derivatives, load_point, load_problem, ProblemSpec};
use sosarp::sos::{min_sigma_sos, verify_certificate, write_dump};
use sosarp::tensor_poly::linalg::lambda_min;
use sosarp::Error;

#[derive(Parser)]
#[command(name = "sosarp", version, about = "Adaptive regularization with SoS-convex Taylor models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the optimizer and write one CSV row per iteration.
    Minimize(MinimizeArgs),
    /// Scan sigma_bar against the largest order-3 tensor entry.
    ScanTensor(ScanTensorArgs),
    /// Scan sigma_bar against delta.
    ScanDelta(ScanDeltaArgs),
    /// Compute the smallest certified sigma for the model at a point.
    Certify(CertifyArgs),
    /// Iteration counts on a strongly convex problem over a list of tolerances.
    ConvexRate(ConvexRateArgs),
    /// Compare derivative tensors with finite differences.
    CheckDerivs(CheckDerivsArgs),
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1)"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not positive"))
    }
}

#[derive(Args)]
struct ModelArgs {
    /// Taylor order.
    #[arg(long, default_value_t = 3)]
    p: usize,
    /// Gradient tolerance.
    #[arg(long, default_value_t = 1e-5, value_parser = open_unit)]
    eps: f64,
    /// Exponent in delta = eps^a.
    #[arg(long, conflicts_with = "delta")]
    a: Option<f64>,
    /// Fixed delta, instead of eps^a.
    #[arg(long, value_parser = open_unit)]
    delta: Option<f64>,
}

impl ModelArgs {
    fn config(&self) -> ArpConfig {
        let base = ArpConfig::default();
        ArpConfig {
            p: self.p,
            epsilon: self.eps,
            a: self.a.unwrap_or(base.a),
            delta: self.delta,
            ..base
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    #[arg(long)]
    sigma_min: Option<f64>,
    #[arg(long)]
    sigma0: Option<f64>,
    /// Subproblem accuracy factor.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> ArpConfig {
        let mut c = self.model.config();
        c.eta = self.eta.unwrap_or(c.eta);
        c.gamma1 = self.gamma1.unwrap_or(c.gamma1);
        c.gamma2 = self.gamma2.unwrap_or(c.gamma2);
        c.sigma_min = self.sigma_min.unwrap_or(c.sigma_min);
        c.sigma0 = self.sigma0;
        c.theta = self.theta.unwrap_or(c.theta);
        c.max_iter = self.max_iter.unwrap_or(c.max_iter);
        c
    }
}

#[derive(Args)]
struct MinimizeArgs {
    /// Problem file, or the name of a bundled problem.
    #[arg(long)]
    problem: String,
    /// Starting point file.
    #[arg(long)]
    point: Option<PathBuf>,
    /// Iteration CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    p: usize,
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    /// Base seed for the model generator.
    #[arg(long, env = "SOSARP_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run cells one at a time.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct ScanTensorArgs {
    #[command(flatten)]
    scan: ScanArgs,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    delta: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0, 100.0, 1000.0], value_parser = positive)]
    scales: Vec<f64>,
}

#[derive(Args)]
struct ScanDeltaArgs {
    #[command(flatten)]
    scan: ScanArgs,
    /// Explicit delta list; overrides the log-spaced range.
    #[arg(long, value_delimiter = ',', value_parser = positive)]
    deltas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-3, value_parser = positive)]
    delta_min: f64,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    delta_max: f64,
    #[arg(long, default_value_t = 7)]
    count: usize,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    problem: String,
    /// Expansion point; the origin when omitted.
    #[arg(long)]
    point: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Write the Hessian form and Gram basis here.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct ConvexRateArgs {
    #[arg(long, default_value = "sc_quartic")]
    problem: String,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-1, 1e-2, 1e-3, 1e-4], value_parser = open_unit)]
    eps_list: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    p: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-iteration f and f_gap CSV.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct CheckDerivsArgs {
    #[arg(long)]
    problem: String,
    /// Evaluation point; the problem's start when omitted.
    #[arg(long)]
    point: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    p: usize,
}

/// Exit 1 for anything caught before computing, 3 for failures after.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::Parse { .. }
            | Error::DimensionMismatch { .. }
            | Error::UnknownBuiltin(_)
            | Error::NotStronglyConvex(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn find_problem(arg: &str) -> Result<ProblemSpec, Failure> {
    let path = Path::new(arg);
    if path.exists() {
        return Ok(load_problem(path)?);
    }
    bundled_problem(arg.trim_end_matches(".prob"))
        .ok_or_else(|| Failure::Usage(format!("{arg}: no such file or bundled problem")))
}

fn point_or(path: &Option<PathBuf>, n: usize, default: impl FnOnce() -> Vec<f64>) -> Result<Vec<f64>, Failure> {
    Ok(match path {
        Some(p) => load_point(p, n)?,
        None => default(),
    })
}

/// Writes the buffer to `path`, or to standard output.
fn emit(path: &Option<PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    let res = match path {
        Some(p) => fs::write(p, bytes).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            let mut out = BufWriter::new(io::stdout().lock());
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| e.to_string())
        }
    };
    res.map_err(Failure::Runtime)
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn iteration_csv(records: &[IterationRecord]) -> Result<Vec<u8>, Failure> {
    let num = |v: f64| format!("{v:e}");
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::Runtime(e.to_string());
    w.write_record([
        "iter",
        "case",
        "lambda_min",
        "sigma_bar",
        "sigma_r",
        "sigma",
        "step_norm",
        "rho",
        "f",
        "grad_norm",
        "success",
    ])
    .map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.k.to_string(),
            r.case_tag.to_string(),
            num(r.lambda_min),
            num(r.sigma_bar),
            num(r.sigma_r),
            num(r.sigma),
            num(r.step_norm),
            num(r.rho),
            num(r.f_after),
            num(r.grad_norm),
            r.success.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))
}

fn minimize(args: &MinimizeArgs) -> Outcome {
    let prob = find_problem(&args.problem)?;
    let mut cfg = args.run.config();
    cfg.x0 = args.point.as_ref().map(|p| load_point(p, prob.n)).transpose()?;
    cfg.validate()?;
    let res = run(&prob, &cfg)?;
    emit(&args.out, &iteration_csv(&res.records)?)?;
    eprintln!(
        "status={} iters={} f={:e} grad_norm={:e}",
        res.status,
        res.records.len(),
        res.f,
        res.grad_norm
    );
    Ok(match res.status {
        RunStatus::Converged => ExitCode::SUCCESS,
        RunStatus::MaxIterations => ExitCode::from(2),
        RunStatus::SubsolverFailure => ExitCode::from(3),
    })
}

fn scan(args: &ScanArgs, kind: ScanKind, values: Vec<f64>) -> Outcome {
    let cfg = ScanConfig {
        kind,
        n: args.n,
        p: args.p,
        seeds: args.seeds,
        base_seed: args.seed,
        values,
        execution: execution(args.sequential),
    };
    cfg.validate()?;
    let res = run_scan(&cfg)?;
    let mut buf = Vec::new();
    write_scan_csv(&res, &mut buf)?;
    emit(&args.out, &buf)?;
    match res.slope {
        Some(s) => eprintln!("slope={s:.4} failures={}", res.failures),
        None => eprintln!("slope= failures={}", res.failures),
    }
    Ok(ExitCode::SUCCESS)
}

fn certify(args: &CertifyArgs) -> Outcome {
    let prob = find_problem(&args.problem)?;
    let cfg = args.model.config();
    cfg.validate()?;
    let x = point_or(&args.point, prob.n, || vec![0.0; prob.n])?;
    let bundle = prob.derivatives(&x, cfg.p)?;
    let delta = cfg.delta();
    let case = classify_case(lambda_min(&bundle.hessian()), delta);
    let model = build_model(&bundle, case, delta, 0.0)?;
    let (sigma_bar, cert) = min_sigma_sos(&model)?;
    let report = verify_certificate(&cert, &model.with_sigma(sigma_bar));
    if let Some(path) = &args.dump {
        let mut buf = Vec::new();
        write_dump(&model.with_sigma(sigma_bar), &mut buf).map_err(|e| Failure::Runtime(e.to_string()))?;
        emit(&Some(path.clone()), &buf)?;
    }
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "case={case}")
        .and_then(|_| writeln!(out, "sigma_bar={sigma_bar:.6}"))
        .and_then(|_| writeln!(out, "residual={:e}", report.residual))
        .and_then(|_| writeln!(out, "gram_lambda_min={:e}", report.gram_lambda_min))
        .and_then(|_| out.flush())
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok(if report.passes() {
        ExitCode::SUCCESS
    } else {
        eprintln!("certificate failed verification");
        ExitCode::from(3)
    })
}

fn rate(args: &ConvexRateArgs) -> Outcome {
    let prob = find_problem(&args.problem)?;
    let base = ArpConfig {
        p: args.p,
        ..ArpConfig::default()
    };
    let rows = convex_rate(&prob, &base, &args.eps_list, execution(args.sequential))?;
    let mut buf = Vec::new();
    write_rate_csv(&rows, &mut buf)?;
    emit(&args.out, &buf)?;
    if let Some(path) = &args.trajectory {
        let mut buf = Vec::new();
        write_trajectory_csv(&rows, &mut buf)?;
        emit(&Some(path.clone()), &buf)?;
    }
    let all_converged = rows.iter().all(|r| r.status == RunStatus::Converged);
    eprintln!(
        "converged={all_converged} sublinear_growth={}",
        sublinear_growth_holds(&rows)
    );
    Ok(if all_converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn check_derivs(args: &CheckDerivsArgs) -> Outcome {
    let prob = find_problem(&args.problem)?;
    let x = point_or(&args.point, prob.n, || prob.default_start())?;
    let report = check_derivatives(&prob, &x, args.p)?;
    let mut out = BufWriter::new(io::stdout().lock());
    let mut write = || -> io::Result<()> {
        writeln!(out, "order,step,max_rel_error,threshold,passed")?;
        for o in &report.orders {
            writeln!(out, "{},{:e},{:e},{:e},{}", o.order, o.step, o.max_rel_error, o.threshold, o.passed)?;
        }
        out.flush()
    };
    write().map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match &cli.command {
        Command::Minimize(a) => minimize(a),
        Command::ScanTensor(a) => scan(&a.scan, ScanKind::TensorScale { delta: a.delta }, a.scales.clone()),
        Command::ScanDelta(a) => {
            let values = a
                .deltas
                .clone()
                .unwrap_or_else(|| log_space(a.delta_min, a.delta_max, a.count));
            scan(&a.scan, ScanKind::Delta, values)
        }
        Command::Certify(a) => certify(a),
        Command::ConvexRate(a) => rate(a),
        Command::CheckDerivs(a) => check_derivs(a),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
