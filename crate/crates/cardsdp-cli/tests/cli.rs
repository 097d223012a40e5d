//! Command-line behavior: exit codes, flag contracts, file side effects.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cardsdp"))
}

fn gen_instance(dir: &Path, name: &str, n: usize, seed: u64) -> std::path::PathBuf {
    let path = dir.join(name);
    let out = bin()
        .args([
            "gen",
            "--n",
            &n.to_string(),
            "--seed",
            &seed.to_string(),
            "--out",
        ])
        .arg(&path)
        .output()
        .expect("run gen");
    assert!(
        out.status.success(),
        "gen failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    path
}

#[test]
fn solve_reports_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_instance(dir.path(), "a.json", 6, 11);
    let out = bin().arg("solve").arg(&inst).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.contains("lb (dual objective)"),
        "missing lb line: {text}"
    );
    assert!(text.contains("aleph = 3"), "default cap not echoed: {text}");
}

#[test]
fn solve_aleph_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_instance(dir.path(), "a.json", 6, 11);
    let out = bin()
        .arg("solve")
        .arg(&inst)
        .args(["--aleph", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("aleph = 5"), "override not applied: {text}");
}

#[test]
fn solve_missing_file_exits_two() {
    let out = bin()
        .args(["solve", "/nonexistent/missing.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cannot read"), "unhelpful message: {err}");
}

#[test]
fn solve_invalid_instance_exits_two_naming_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"n": 2, "aleph": 1, "rho": 0.0, "mu": [0.1, 0.1], "u": [1.0, 1.0],
           "Q": [[1.0, 1.0], [2.0, 1.0]]}"#,
    )
    .unwrap();
    let out = bin().arg("solve").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not symmetric"), "invariant not named: {err}");
}

#[test]
fn solve_exports_sdpa_then_solves() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_instance(dir.path(), "a.json", 5, 4);
    let export = dir.path().join("a.dat-s");
    let out = bin()
        .arg("solve")
        .arg(&inst)
        .arg("--export-sdpa")
        .arg(&export)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&export).unwrap();
    assert!(text.contains("= mDIM"));
    // n = 5: m = 24 constraints, blocks 11 and -13
    assert!(
        text.contains("24 = mDIM"),
        "unexpected header: {}",
        &text[..80]
    );
    assert!(text.contains("11 -13 = bLOCKsTRUCT"));
}

#[test]
fn solve_json_emits_parseable_report() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_instance(dir.path(), "a.json", 6, 2);
    let out = bin()
        .arg("solve")
        .arg(&inst)
        .arg("--json")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid JSON");
    assert!(v["lb_sdp"].is_number());
    assert_eq!(v["sdp_status"], "Optimal");
}

#[test]
fn log_env_var_enables_iteration_log() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_instance(dir.path(), "a.json", 5, 1);
    let out = bin()
        .arg("solve")
        .arg(&inst)
        .env("CARDSDP_LOG", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("ipm iter"),
        "no iteration log on stderr: {err}"
    );

    let quiet = bin()
        .arg("solve")
        .arg(&inst)
        .env("CARDSDP_LOG", "0")
        .output()
        .unwrap();
    let err = String::from_utf8_lossy(&quiet.stderr);
    assert!(!err.contains("ipm iter"), "log not suppressed: {err}");
}

#[test]
fn bad_tolerance_flags_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_instance(dir.path(), "a.json", 5, 1);
    let out = bin()
        .arg("solve")
        .arg(&inst)
        .args(["--gap-tol", "-1.0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_is_deterministic_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_instance(dir.path(), "a.json", 12, 99);
    let b = gen_instance(dir.path(), "b.json", 12, 99);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let out = bin()
        .args(["gen", "--n", "0", "--out"])
        .arg(dir.path().join("zero.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_rho_quantile_keeps_instance_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    let out = bin()
        .args([
            "gen",
            "--n",
            "50",
            "--seed",
            "8",
            "--rho-quantile",
            "0.3",
            "--aleph",
            "1",
            "--out",
        ])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let exact = bin()
        .arg("exact")
        .arg(&path)
        .args(["--method", "enum", "--json"])
        .output()
        .unwrap();
    assert_eq!(exact.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&exact.stdout).unwrap();
    assert_eq!(v["status"], "Proven", "generated instance infeasible: {v}");
}

#[test]
fn exact_enum_guard_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.json");
    let out = bin()
        .args(["gen", "--n", "60", "--seed", "1", "--aleph", "25", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let exact = bin()
        .arg("exact")
        .arg(&path)
        .args(["--method", "enum"])
        .output()
        .unwrap();
    assert_eq!(exact.status.code(), Some(2));
    let err = String::from_utf8_lossy(&exact.stderr);
    assert!(err.contains("too large"), "guard message missing: {err}");
}

#[test]
fn bench_writes_row_and_aggregate_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir(&data).unwrap();
    for seed in 1..=3u64 {
        gen_instance(&data, &format!("i{seed}.json"), 6, seed);
    }
    let outdir = dir.path().join("out");
    let out = bin()
        .arg("bench")
        .arg(&data)
        .args(["--alephs", "2,3", "--time-limit", "30", "--out"])
        .arg(&outdir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let rows = std::fs::read_to_string(outdir.join("bench_rows.csv")).unwrap();
    let lines: Vec<&str> = rows.lines().collect();
    assert_eq!(
        lines[0],
        "instance,n,aleph,ub,gap_exact,lb_sdp,gap_sdp,sdp_time,rank"
    );
    assert_eq!(lines.len(), 1 + 6, "3 instances x 2 caps");
    // deterministic ordering: by name, then cap
    assert!(lines[1].starts_with("i1,6,2,"));
    assert!(lines[2].starts_with("i1,6,3,"));
    assert!(lines[3].starts_with("i2,6,2,"));

    // round-trip: every numeric cell reparses and reformats identically
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        for cell in &cells[3..8] {
            if !cell.is_empty() {
                let v: f64 = cell.parse().expect("parseable float");
                assert_eq!(format!("{v:.5e}"), **cell, "formatting not stable");
            }
        }
    }

    let agg = std::fs::read_to_string(outdir.join("bench_aggregate.csv")).unwrap();
    let agg_lines: Vec<&str> = agg.lines().collect();
    assert_eq!(agg_lines.len(), 1 + 2, "2 (aleph, n) groups");
    assert!(agg_lines[1].starts_with("2,6,"));
    assert!(agg_lines[2].starts_with("3,6,"));
}
