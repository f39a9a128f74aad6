use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ri_cli::{from_json, parse_instance, to_json, RunReport};
use ri_core::RawInstance;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ri(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ri")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Runs a command with `--report` in a temp dir and returns the parsed report.
fn report_of(dir: &Path, name: &str, args: &[&str]) -> (i32, RunReport, String) {
    let path = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--report", s(&path)]);
    let out = ri(&full);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("no report: {}", stderr(&out)));
    (code(&out), from_json(&text).unwrap(), text)
}

fn gen(dir: &Path, name: &str, seed: u64, n: usize, m: usize) -> PathBuf {
    let path = dir.join(name);
    let out = ri(&[
        "gen",
        "--seed",
        &seed.to_string(),
        "--n",
        &n.to_string(),
        "--m",
        &m.to_string(),
        "--umax",
        "3",
        "--out",
        s(&path),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    path
}

#[test]
fn symmetric_fixture_file_matches_hard_coded_instance() {
    let (inst, echo) = parse_instance(&fixture("sym2x2.json")).unwrap();
    let built = RawInstance::unlabeled(
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![0.5, 0.5],
        vec![0.5, 0.5],
        0.5,
        1.0,
    )
    .validate()
    .unwrap();
    assert_eq!(inst, built);
    assert_eq!(echo.sha256.len(), 64);
}

#[test]
fn solve_symmetric_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let (exit, report, _) = report_of(dir.path(), "r.json", &["solve", "--instance", s(&fixture("sym2x2.json"))]);
    assert_eq!(exit, 0);
    let sol = report.solution.unwrap();
    assert!((sol.u_star - 0.6201145).abs() < 1e-7);
    assert!((sol.ccp[0][0] - 0.7310586).abs() < 1e-7);
    assert!(report.diagnostics.unwrap().passes.all);
    assert!(report.bridge.unwrap().duality_gap.abs() < 1e-8);
    assert_eq!(report.settings.outer_tol, 1e-10);
    assert_eq!(report.settings.max_iter, 100_000);
}

#[test]
fn solve_prints_table_from_report() {
    let out = ri(&["solve", "--instance", s(&fixture("sym2x2.json"))]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0.6201145070"));
    assert!(text.contains("P(.|t1)"));
    assert!(text.contains("status                exit 0"));
}

#[test]
fn zero_utility_returns_prior() {
    let dir = tempfile::tempdir().unwrap();
    let (exit, report, _) = report_of(dir.path(), "r.json", &["solve", "--instance", s(&fixture("flat.json"))]);
    assert_eq!(exit, 0);
    let sol = report.solution.unwrap();
    assert_eq!(sol.nu_star, vec![0.2, 0.3, 0.5]);
    assert!(sol.u_star.abs() < 1e-15);
    assert_eq!(report.instance.unwrap().characteristics, vec!["low", "mid", "high"]);
}

#[test]
fn point_mass_instance() {
    let dir = tempfile::tempdir().unwrap();
    let (exit, report, _) = report_of(dir.path(), "r.json", &["solve", "--instance", s(&fixture("point.json"))]);
    assert_eq!(exit, 0);
    let sol = report.solution.unwrap();
    assert_eq!(sol.nu_star, vec![1.0]);
    assert_eq!(sol.coupling, vec![vec![1.0]]);
    assert!((sol.u_star - 2.5).abs() < 1e-15);
}

#[test]
fn reports_are_deterministic_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "g.json", 7, 3, 3);
    let (_, a, text_a) = report_of(dir.path(), "a.json", &["solve", "--instance", s(&inst)]);
    let (_, b, text_b) = report_of(dir.path(), "b.json", &["solve", "--instance", s(&inst)]);
    assert_eq!(text_a, text_b);
    assert_eq!(a, b);
    assert_eq!(to_json(&a), text_a);
}

#[test]
fn timings_are_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let sym = fixture("sym2x2.json");
    let (_, plain, _) = report_of(dir.path(), "a.json", &["solve", "--instance", s(&sym)]);
    let (_, timed, _) = report_of(dir.path(), "b.json", &["solve", "--instance", s(&sym), "--timings"]);
    assert!(plain.timings.is_none());
    assert!(timed.timings.unwrap().total_seconds >= 0.0);
}

#[test]
fn input_errors_exit_two() {
    let cases = [
        ("alpha_zero.json", "not unique"),
        ("missing_mu.json", "mu"),
        ("ragged.json", "utility"),
        ("does_not_exist.json", "does_not_exist.json"),
    ];
    for (name, needle) in cases {
        let out = ri(&["solve", "--instance", s(&fixture(name))]);
        assert_eq!(code(&out), 2, "{name}");
        assert!(stderr(&out).contains(needle), "{name}: {}", stderr(&out));
    }
    let out = ri(&["solve"]);
    assert_eq!(code(&out), 2);
    let out = ri(&["solve", "--instance", s(&fixture("sym2x2.json")), "--outer-tol", "0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn iteration_cap_exits_three_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "g.json", 1, 3, 3);
    let (exit, report, _) = report_of(dir.path(), "r.json", &["solve", "--instance", s(&inst), "--max-iter", "2"]);
    assert_eq!(exit, 3);
    assert!(!report.status.converged);
    assert_eq!(report.solution.unwrap().outer_iterations, 2);

    let nu = dir.path().join("nu.json");
    std::fs::write(&nu, "[0.6, 0.3, 0.1]").unwrap();
    let (exit, report, _) = report_of(
        dir.path(),
        "b.json",
        &["bridge", "--instance", s(&inst), "--nu", s(&nu), "--max-iter", "2"],
    );
    assert_eq!(exit, 3);
    assert!(!report.bridge.unwrap().converged);
}

#[test]
fn bridge_at_prior_on_flat_instance_takes_one_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let nu = dir.path().join("nu.json");
    std::fs::write(&nu, r#"{"nu": [0.2, 0.3, 0.5]}"#).unwrap();
    let (exit, report, _) = report_of(
        dir.path(),
        "r.json",
        &["bridge", "--instance", s(&fixture("flat.json")), "--nu", s(&nu)],
    );
    assert_eq!(exit, 0);
    let b = report.bridge.unwrap();
    assert_eq!(b.iterations, 1);
    assert!(b.value_v.abs() < 1e-15);
}

#[test]
fn bridge_at_solved_marginal_reproduces_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "g.json", 3, 4, 3);
    let (_, solved, _) = report_of(dir.path(), "s.json", &["solve", "--instance", s(&inst)]);
    let solve_report = dir.path().join("s.json");
    let (exit, bridged, _) = report_of(
        dir.path(),
        "b.json",
        &["bridge", "--instance", s(&inst), "--nu", s(&solve_report)],
    );
    assert_eq!(exit, 0);
    let u = solved.solution.unwrap().u_star;
    assert!((bridged.bridge.unwrap().value_v - u).abs() < 1e-8);
}

#[test]
fn bridge_rejects_wrong_length_marginal() {
    let dir = tempfile::tempdir().unwrap();
    let nu = dir.path().join("nu.json");
    std::fs::write(&nu, "[0.5, 0.5]").unwrap();
    let out = ri(&["bridge", "--instance", s(&fixture("flat.json")), "--nu", s(&nu)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn entry_recovers_alpha_and_rejects_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let base = gen(dir.path(), "base.json", 5, 3, 3);
    let mut raw: RawInstance = serde_json::from_str(&std::fs::read_to_string(&base).unwrap()).unwrap();
    raw.alpha = 0.7;
    std::fs::write(&base, to_json(&raw)).unwrap();
    raw.phi = vec![0.2, 0.2, 0.6];
    let entrant = dir.path().join("entrant.json");
    std::fs::write(&entrant, to_json(&raw)).unwrap();

    let (exit, report, _) = report_of(
        dir.path(),
        "r.json",
        &["entry", "--base", s(&base), "--entrant", s(&entrant)],
    );
    assert_eq!(exit, 0);
    let e = report.entry.unwrap();
    assert!(e.passed);
    assert!((e.alpha_hat.unwrap() - 0.7).abs() < 1e-4);
    assert_eq!(e.pairs.len(), 6);

    let (exit, report, _) = report_of(
        dir.path(),
        "same.json",
        &["entry", "--instance", s(&base), "--entrant", s(&base)],
    );
    assert_eq!(exit, 0);
    assert!(report.entry.unwrap().alpha_hat.is_none());

    raw.mu = vec![0.5, 0.25, 0.25];
    let other = dir.path().join("other.json");
    std::fs::write(&other, to_json(&raw)).unwrap();
    let out = ri(&["entry", "--base", s(&base), "--entrant", s(&other)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("state prior"));
}

#[test]
fn oracle_agrees_and_guards_size() {
    let dir = tempfile::tempdir().unwrap();
    let (exit, report, _) = report_of(dir.path(), "r.json", &["oracle", "--instance", s(&fixture("sym2x2.json"))]);
    assert_eq!(exit, 0);
    let o = report.oracle.unwrap();
    assert!((o.u_oracle - 0.6201145).abs() < 1e-6);
    assert!(o.difference >= -1e-5);

    let (_, report, _) = report_of(dir.path(), "f.json", &["oracle", "--instance", s(&fixture("flat.json"))]);
    assert!(report.oracle.unwrap().u_oracle.abs() < 1e-9);

    let big = gen(dir.path(), "big.json", 2, 4, 4);
    let out = ri(&["oracle", "--instance", s(&big)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("too large"));
}

#[test]
fn diagnose_solution_and_supplied_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let sym = fixture("sym2x2.json");
    let (exit, report, _) = report_of(dir.path(), "r.json", &["diagnose", "--instance", s(&sym)]);
    assert_eq!(exit, 0);
    assert!(report.diagnostics.unwrap().passes.all);

    let prod = dir.path().join("prod.json");
    std::fs::write(&prod, "[[0.25, 0.25], [0.25, 0.25]]").unwrap();
    let (exit, report, _) = report_of(
        dir.path(),
        "p.json",
        &["diagnose", "--instance", s(&sym), "--coupling", s(&prod)],
    );
    assert_eq!(exit, 3);
    let d = report.diagnostics.unwrap();
    assert!((d.gibbs_deviation - 0.5).abs() < 1e-12);
    assert!((d.mnl_residual - 0.2310586).abs() < 1e-7);
    assert!(!d.passes.all);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "[[0.5, 0.3], [0.1, 0.1]]").unwrap();
    let out = ri(&["diagnose", "--instance", s(&sym), "--coupling", s(&bad)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn gen_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let a = std::fs::read(gen(dir.path(), "a.json", 1, 3, 2)).unwrap();
    let b = std::fs::read(gen(dir.path(), "b.json", 1, 3, 2)).unwrap();
    let c = std::fs::read(gen(dir.path(), "c.json", 2, 3, 2)).unwrap();
    assert_eq!(a, b);
    let ra: RawInstance = serde_json::from_slice(&a).unwrap();
    let rc: RawInstance = serde_json::from_slice(&c).unwrap();
    assert_ne!(ra.utility, rc.utility);
    assert!(ra.validate().is_ok());
    assert!(parse_instance(&dir.path().join("a.json")).is_ok());

    let out = ri(&["gen", "--n", "0", "--m", "2"]);
    assert_eq!(code(&out), 2);
    let out = ri(&["gen", "--n", "2", "--m", "2"]);
    assert_eq!(code(&out), 0);
    let printed: RawInstance = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed.characteristics.len(), 2);
}
