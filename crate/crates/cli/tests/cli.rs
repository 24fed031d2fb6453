use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bloch(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_bloch"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn run_in(dir: &Path, cmd: &str, config: &str, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec![cmd, "--out", out];
    args.extend_from_slice(extra);
    bloch(&args, config)
}

fn data_rows(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().skip(2).map(str::to_owned).collect()
}

const PACKET: &str = r#"
[potential]
alpha = 1.0
[grid]
count = 401
[solver]
M = 12
[amplitude]
bands = [
  { j = 0, kind = "bump", z0 = 0.25, w = 0.2 },
  { j = 1, kind = "bump", z0 = 0.25, w = 0.2, phase = 0.5 },
]
[times]
count = 6
beats = 1.0
[oracle]
check_times = 2
"#;

#[test]
fn unknown_key_exits_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "bands", "[solver]\nM = 10\ntolerence = 1\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tolerence"));
}

#[test]
fn small_truncation_exits_with_precondition_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[potential]\nharmonics = [{ n = 3, re = 0.1 }]\n[solver]\nM = 2\nconverge = false\n";
    let o = run_in(dir.path(), "bands", cfg, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("truncation-too-small"));
}

#[test]
fn bands_file_has_one_row_per_point_and_band_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[potential]\nalpha = 0.5\n[solver]\nM = 8\nJ_max = 2\nconverge = false\n";
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    for p in [&first, &second] {
        let o = run_in(dir.path(), "bands", cfg, &["--bands-out", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(data_rows(&first).len(), 2001 * 3);
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn default_cosine_config_writes_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "bands", "[potential]\nalpha = 1.0\n[solver]\nJ_max = 1\n", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_rows(&dir.path().join("bands.csv")).len(), 2001 * 2);
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["summary"]["convergence"]["pass"], true);
}

fn lambda_columns(path: &Path) -> Vec<(f64, f64, f64)> {
    data_rows(path)
        .iter()
        .map(|r| {
            let v: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
            (v[0], v[1], v[2])
        })
        .collect()
}

#[test]
fn lambda_sweep_writes_every_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[solver]\nM = 20\n[sweep]\nalpha = [0.01, 0.1, 1.0, 10.0]\n";
    let o = run_in(dir.path(), "lambda", cfg, &["--self-check"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = lambda_columns(&dir.path().join("lambda.csv"));
    assert_eq!(rows.len(), 4 * 2001);
    assert!(rows.iter().all(|r| (0.0..1.0).contains(&r.2)));
    // For the weakest potential the Θ term makes Λ(−z) < Λ(z) near zero.
    let weak: Vec<_> = rows.iter().filter(|r| r.0 == 0.01).collect();
    let c = weak.len() / 2;
    assert_eq!(weak[c].1, 0.0);
    for d in 1..=50 {
        assert_eq!(weak[c - d].1, -weak[c + d].1);
        assert!(weak[c - d].2 < weak[c + d].2);
    }
}

#[test]
fn supp_rows_match_weak_and_strong_limits() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "supp-sweep", "[sweep]\nalpha = [0.1, 10.0]\n", &["--self-check"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<Vec<f64>> = data_rows(&dir.path().join("supp.csv"))
        .iter()
        .map(|r| r.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert!((rows[0][1] - 0.99).abs() <= 1e-3);
    assert!(rows[1][1] > 0.5 && (rows[1][1] - rows[1][2]).abs() <= 0.01);
}

#[test]
fn single_band_ppos_has_no_interference() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[potential]\nalpha = 1.0\n[grid]\ncount = 401\n[solver]\nM = 12\n\
               [amplitude]\nbands = [{ j = 0, kind = \"bump\", z0 = -0.1, w = 0.3 }]\n\
               [times]\ncount = 9\nstart = 0.0\nstop = 40.0\n";
    let o = run_in(dir.path(), "ppos", cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for r in data_rows(&dir.path().join("ppos.csv")) {
        let v: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((0.0..=1.0).contains(&v[1]));
        assert!(v[3].abs() <= 1e-12);
    }
}

#[test]
fn two_band_interference_averages_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PACKET.replace("count = 6\nbeats = 1.0", "count = 4001\nbeats = 100.0");
    let o = run_in(dir.path(), "ppos", &cfg, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p: Vec<f64> = data_rows(&dir.path().join("ppos.csv"))
        .iter()
        .map(|r| r.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    assert!(mean.abs() <= 1e-3, "{mean}");
    assert!(p.iter().any(|&x| x < 0.0));
}

#[test]
fn metadata_line_is_stable_and_format_independent() {
    let dir = tempfile::tempdir().unwrap();
    let toml = "[potential]\nalpha = 1.0\n[grid]\ncount = 101\n[solver]\nM = 10\n";
    let json = r#"{"potential": {"alpha": 1.0}, "grid": {"count": 101}, "solver": {"M": 10}}"#;
    let a = run_in(dir.path(), "convergence", toml, &[]);
    let first = std::fs::read_to_string(dir.path().join("convergence.json")).unwrap();
    let b = run_in(dir.path(), "convergence", json, &[]);
    let second = std::fs::read_to_string(dir.path().join("convergence.json")).unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(first, second);
    let meta: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert_eq!(meta["command"], "convergence");
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn ppos_self_check_runs_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "ppos", PACKET, &["--self-check"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let oracle = summary["summary"]["oracle"].as_array().unwrap();
    assert_eq!(oracle.len(), 2);
    for r in oracle {
        assert!(r["abs_diff"].as_f64().unwrap() <= 1e-4);
    }
    assert_eq!(data_rows(&dir.path().join("ppos.csv")).len(), 6);
}

#[test]
fn oracle_window_too_small_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PACKET.replace("check_times = 2", "half_window = 8.0");
    let o = run_in(dir.path(), "oracle-check", &cfg, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("window-deficit"));
}

#[test]
fn supp_sweep_without_sweep_block_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), "supp-sweep", "[solver]\nM = 10\n", &[]);
    assert_eq!(o.status.code(), Some(2));
}
