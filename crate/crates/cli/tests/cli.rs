use std::path::Path;
use std::process::{Command, Output};

fn sosarp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sosarp"))
        .args(args)
        .env_remove("SOSARP_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing in {line}"))
        .parse()
        .unwrap()
}

#[test]
fn minimize_quad2_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("iters.csv");
    let o = sosarp(&[
        "minimize",
        "--problem",
        "quad2.prob",
        "--p",
        "3",
        "--eps",
        "1e-6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let status = stderr(&o);
    assert!(status.starts_with("status=converged"), "{status}");
    assert!(field(&status, "grad_norm") <= 1e-6);
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iter,case,lambda_min,sigma_bar,sigma_r,sigma,step_norm,rho,f,grad_norm,success"
    );
    let rows = lines.count();
    assert_eq!(rows as f64, field(&status, "iters"));
}

#[test]
fn minimize_reads_problem_files_and_points() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("q.prob");
    std::fs::write(
        &prob,
        "name = \"q\"\nn = 2\nkind = \"explicit_polynomial\"\ndegree = 2\n\n\
         [[terms]]\nexponents = [2, 0]\ncoefficient = 1.0\n\n\
         [[terms]]\nexponents = [0, 2]\ncoefficient = 3.0\n",
    )
    .unwrap();
    let point = dir.path().join("x0");
    std::fs::write(&point, "4 -2\n").unwrap();
    let o = sosarp(&[
        "minimize",
        "--problem",
        prob.to_str().unwrap(),
        "--point",
        point.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().count() >= 2);
}

#[test]
fn iteration_cap_exits_with_two() {
    let o = sosarp(&["minimize", "--problem", "rosenbrock", "--max-iter", "2", "--eps", "1e-8"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("status=max_iterations iters=2"));
}

#[test]
fn bad_flags_are_usage_errors() {
    for args in [
        &["minimize", "--problem", "quad2", "--eps", "2"][..],
        &["minimize", "--problem", "quad2", "--a", "0.5", "--delta", "0.1"],
        &["minimize", "--problem", "quad2", "--a", "0.9"],
        &["minimize", "--problem", "quad2", "--eta", "1.5"],
        &["minimize", "--problem", "no_such_problem"],
        &["scan-tensor", "--scales", "1,-3"],
        &["scan-delta", "--deltas", "0.5,2"],
        &["scan-tensor", "--p", "5"],
        &["bogus"],
    ] {
        let o = sosarp(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn validation_failure_leaves_no_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let o = sosarp(&["scan-tensor", "--seeds", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!Path::new(&out).exists());
}

#[test]
fn certify_univariate_discriminant() {
    let o = sosarp(&["certify", "--problem", "univariate_cubic"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o).lines().find(|l| l.starts_with("sigma_bar=")).unwrap().to_string();
    assert!((field(&line, "sigma_bar") - 3.0).abs() <= 1e-5, "{line}");
}

#[test]
fn certify_convex_quadratic_needs_no_regularization() {
    let o = sosarp(&["certify", "--problem", "quad2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("sigma_bar=0.000000"), "{}", stdout(&o));
}

#[test]
fn certify_rejects_corrupted_files() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("broken.prob");
    std::fs::write(&prob, "name = \"b\"\nn = two\n").unwrap();
    let o = sosarp(&["certify", "--problem", prob.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("broken.prob"), "{}", stderr(&o));
}

#[test]
fn certify_writes_a_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("dump.txt");
    let o = sosarp(&["certify", "--problem", "nonconvex_quartic", "--dump", dump.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dump).unwrap();
    assert!(text.contains("basis"));
}

#[test]
fn single_scale_scan_has_empty_slope() {
    let o = sosarp(&["scan-tensor", "--scales", "10", "--seeds", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "row,x,seed,sigma_bar,slope,failures");
    assert_eq!(rows.iter().filter(|r| r.starts_with("cell,")).count(), 3);
    assert_eq!(rows.iter().filter(|r| r.starts_with("summary,")).count(), 1);
    let footer = rows.iter().find(|r| r.starts_with("footer,")).unwrap();
    assert_eq!(footer.split(',').nth(4), Some(""));
}

#[test]
fn scans_are_deterministic_and_honour_the_seed_variable() {
    let args = ["scan-delta", "--deltas", "0.1,1", "--seeds", "2"];
    let a = sosarp(&args);
    let b = sosarp(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let c = Command::new(env!("CARGO_BIN_EXE_sosarp"))
        .args(args)
        .env("SOSARP_SEED", "7")
        .output()
        .unwrap();
    assert_ne!(a.stdout, c.stdout);
    assert!(stdout(&c).contains(",7,"));
    let d = sosarp(&[&args[..], &["--sequential"]].concat());
    assert_eq!(a.stdout, d.stdout);
}

#[test]
fn tensor_scan_slope_is_quadratic() {
    let o = sosarp(&["scan-tensor"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let slope = field(&stderr(&o), "slope");
    assert!((1.6..=2.4).contains(&slope), "{slope}");
}

#[test]
fn convex_rate_rows_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv");
    let o = sosarp(&["convex-rate", "--eps-list", "1e-2,1e-3", "--trajectory", traj.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("epsilon,status,successful_iterations,total_iterations"));
    assert_eq!(text.lines().count(), 3);
    assert!(stderr(&o).contains("sublinear_growth=true"));
    let traj = std::fs::read_to_string(traj).unwrap();
    assert_eq!(traj.lines().next(), Some("epsilon,iter,f,f_gap"));

    let one = sosarp(&["convex-rate", "--eps-list", "1e-3"]);
    assert_eq!(stdout(&one).lines().count(), 2);
}

#[test]
fn convex_rate_refuses_nonconvex_problems() {
    let o = sosarp(&["convex-rate", "--problem", "nonconvex_quartic"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not registered as strongly convex"));
}

#[test]
fn check_derivs_reports_every_order() {
    let o = sosarp(&["check-derivs", "--problem", "exponentials", "--p", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}
