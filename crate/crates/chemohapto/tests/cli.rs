use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chemohapto::io::read_series;
use chemohapto::Report;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chemohapto"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(dir: &Path) -> Report {
    Report::from_json(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn homogeneous_run_has_constant_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        s(&configs().join("homogeneous.toml")),
        "--out",
        s(tmp.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cols = read_series(&std::fs::read_to_string(tmp.path().join("series.csv")).unwrap()).unwrap();
    for (name, v) in &cols {
        if name == "t" || name == "dt" {
            continue;
        }
        let spread = v.iter().fold(0.0f64, |m, x| m.max((x - v[0]).abs()));
        assert!(spread <= 1e-12 * (1.0 + v[0].abs()), "{name} varies by {spread}");
    }
    for f in ["u.bin", "v.bin", "w.bin", "u.svg", "report.json"] {
        assert!(tmp.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn out_of_range_gamma_names_field_and_range() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("homogeneous.toml"))
        .unwrap()
        .replace(
            r#"kinetics = { kind = "zero" }"#,
            r#"kinetics = { kind = "sub_log_pow", a = 1.0, b = 1.0, gamma = 1.5 }"#,
        );
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = run(&["run", s(&cfg), "--out", s(tmp.path())]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("model.kinetics.gamma"), "{err}");
    assert!(err.contains("(0, 1)"), "{err}");
    assert!(!tmp.path().join("series.csv").exists());
}

#[test]
fn syntax_errors_report_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("broken.toml");
    std::fs::write(&cfg, "[model]\nchi = 1.0\nxi = = 2\n").unwrap();
    let out = run(&["check", s(&cfg)]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn bundled_logistic_example_is_bounded() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        s(&configs().join("logistic-tau1.toml")),
        "--out",
        s(tmp.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path());
    let run = r.run.unwrap();
    assert_eq!(run.classification.as_deref(), Some("bounded_plateau"));
    assert_eq!(run.status, "ok");
}

#[test]
fn check_reports_every_intermediate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "check",
        s(&configs().join("iterlog-random.toml")),
        "--out",
        s(tmp.path()),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    for key in ["mu_1", "mu_3", "M1", "C_GN", "lhs", "rhs", "case"] {
        assert!(stdout.contains(key), "{key} missing from\n{stdout}");
    }
    let t = report(tmp.path()).threshold.unwrap();
    assert_eq!(t.mu_r_estimates.len(), 3);
    assert_eq!(t.condition_case.as_str(), "tau0_damping");
    assert!((t.mu_r_estimates[1].value.value() - 1.0).abs() < 0.05);
}

#[test]
fn verify_operators_passes() {
    let out = run(&["verify", "operators"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(!stdout.contains("FAIL"));
    assert_eq!(stdout.matches("pass").count(), 15);
}

#[test]
fn unknown_suite_is_rejected() {
    assert!(!run(&["verify", "nope"]).status.success());
}

fn write_small_blowup(dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(configs().join("blowup.toml"))
        .unwrap()
        .replace("nx = 128", "nx = 64")
        .replace("t_end = 1.0", "t_end = 0.4");
    let cfg = dir.join("blowup.toml");
    std::fs::write(&cfg, text).unwrap();
    cfg
}

#[test]
fn one_point_sweep_matches_run_and_check() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_small_blowup(tmp.path());
    let sweep_dir = tmp.path().join("sweep");
    let out = run(&[
        "sweep",
        s(&cfg),
        "--axis",
        "mass_scale=5:5:1",
        "--out",
        s(&sweep_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = tmp.path().join("run");
    assert!(run(&["run", s(&cfg), "--out", s(&run_dir)]).status.success());

    let a = std::fs::read(sweep_dir.join("point-00000/series.csv")).unwrap();
    let b = std::fs::read(run_dir.join("series.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(report(&sweep_dir.join("point-00000")), report(&run_dir));
    let csv = std::fs::read_to_string(sweep_dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(sweep_dir.join("summary.txt").exists());
}

#[test]
fn mass_sweep_crosses_into_divergence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_small_blowup(tmp.path());
    let dir = tmp.path().join("sweep");
    let out = run(&[
        "sweep",
        s(&cfg),
        "--axis",
        "mass_scale=2:100:3:log",
        "--out",
        s(&dir),
        "--threads",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let classes: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap())
        .collect();
    assert_eq!(classes.first(), Some(&"bounded_plateau"), "{csv}");
    assert_eq!(classes.last(), Some(&"diverged"), "{csv}");
}

#[test]
fn iterlog_k_sweep_at_large_mass_is_bounded() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("iterlog-random.toml"))
        .unwrap()
        .replace("t_end = 0.5", "t_end = 1.0")
        .replace("mean = 2.0", "mean = 20.0");
    let cfg = tmp.path().join("k.toml");
    std::fs::write(&cfg, text).unwrap();
    let dir = tmp.path().join("sweep");
    let out = run(&["sweep", s(&cfg), "--axis", "k=1:2:2", "--out", s(&dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[2], "tau0_damping", "{line}");
        assert_eq!(cells[4], "bounded_plateau", "{line}");
    }
}

#[test]
fn sweep_records_point_failures_and_continues() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sweep");
    // chi must be >= 0; the negative point fails validation, the other runs
    let out = run(&[
        "sweep",
        s(&configs().join("homogeneous.toml")),
        "--axis",
        "chi=-1:1:2",
        "--out",
        s(&dir),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows[0].contains("model.chi"), "{csv}");
    assert!(rows[1].contains("bounded_plateau"), "{csv}");
}
