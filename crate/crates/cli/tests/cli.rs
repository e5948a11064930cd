use std::path::PathBuf;
use std::process::{Command, Output};

fn ellreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ellreg"))
        .args(args)
        .env_remove("ELLREG_THREADS")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ellreg-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn constants_succeed_and_are_deterministic() {
    let a = ellreg(&["constants"]);
    let b = ellreg(&["constants"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["r0"].as_f64().unwrap(), 2.25e-6);
    assert!(v["chain_checks"].as_array().unwrap().iter().all(|c| c["satisfied"] == true));
}

#[test]
fn invalid_parameters_exit_two() {
    let o = ellreg(&["constants", "--alpha-bar", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha_bar"));
    assert_eq!(ellreg(&["constants", "--eps", "2"]).status.code(), Some(2));
    assert_eq!(ellreg(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn config_errors_name_the_line() {
    let dir = scratch("cfg");
    let path = dir.join("bad.cfg");
    std::fs::write(&path, "[grid]\nn = 33\n\n[solve]\ntol = soon\n").unwrap();
    let o = ellreg(&["--config", path.to_str().unwrap(), "solve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.cfg:5:"));
}

#[test]
fn dumped_config_reloads_identically() {
    let dir = scratch("dump");
    let first = ellreg(&["--dump-config", "--grid-n", "65", "--eps", "0.05", "--perturbation", "sine", "solve", "--tol", "1e-9"]);
    assert_eq!(first.status.code(), Some(0));
    let path = dir.join("run.cfg");
    std::fs::write(&path, &first.stdout).unwrap();
    let second = ellreg(&["--dump-config", "--config", path.to_str().unwrap(), "constants"]);
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn solve_writes_grid_and_summary() {
    let dir = scratch("solve");
    let out = dir.join("u.txt");
    let summary = dir.join("s.json");
    let o = ellreg(&[
        "--grid-n",
        "33",
        "solve",
        "--out",
        out.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("grid disk 33 1"));
    assert_eq!(std::fs::read(&summary).unwrap(), o.stdout);
}

#[test]
fn solver_failure_exits_three_and_writes_nothing() {
    let dir = scratch("fail");
    let out = dir.join("u.txt");
    let o = ellreg(&["--grid-n", "33", "solve", "--max-sweeps", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn analyze_writes_reports() {
    let dir = scratch("analyze");
    let o = ellreg(&["--grid-n", "129", "analyze", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.join("decay.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("k,radius,sup_dev,a,b1,b2,c11,c12,c22"));
    let cert: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["satisfied"], true);
    assert_eq!(std::fs::read(dir.join("analyze.json")).unwrap(), o.stdout);
}

#[test]
fn analyze_strict_flags_truncation() {
    let lax = ellreg(&["--grid-n", "33", "analyze", "--kmax", "6"]);
    assert_eq!(lax.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&lax.stderr).contains("truncated"));
    let strict = ellreg(&["--grid-n", "33", "analyze", "--kmax", "6", "--strict"]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn analyze_reads_solved_grid() {
    let dir = scratch("input");
    let u = dir.join("u.txt");
    assert_eq!(ellreg(&["--grid-n", "65", "solve", "--out", u.to_str().unwrap()]).status.code(), Some(0));
    let from_file = ellreg(&["--grid-n", "65", "analyze", "--input", u.to_str().unwrap()]);
    let in_process = ellreg(&["--grid-n", "65", "analyze"]);
    assert_eq!(from_file.status.code(), Some(0));
    let a: serde_json::Value = serde_json::from_slice(&from_file.stdout).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&in_process.stdout).unwrap();
    assert_eq!(a["certificate"], b["certificate"]);
}

#[test]
fn cordes_exit_codes() {
    let dir = scratch("cordes");
    let ok = ellreg(&["--grid-n", "33", "--w0", "1,0,10", "cordes", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("cordes.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,keps,kepsprime,cordesdelta"));
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert!((v["min_keps"].as_f64().unwrap() - 40.0 / 121.0).abs() < 1e-12);
    let perturbed = ellreg(&["--grid-n", "33", "--eps", "0.3", "--perturbation", "sine", "cordes"]);
    assert_eq!(perturbed.status.code(), Some(0));
}

#[test]
fn thread_count_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_ellreg"))
        .arg("constants")
        .env("ELLREG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let one = Command::new(env!("CARGO_BIN_EXE_ellreg"))
        .args(["selftest", "--criterion", "5"])
        .env("ELLREG_THREADS", "1")
        .output()
        .unwrap();
    let many = ellreg(&["selftest", "--criterion", "5"]);
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn selftest_rejects_unknown_criterion() {
    assert_eq!(ellreg(&["selftest", "--criterion", "9"]).status.code(), Some(2));
}
