use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn couplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_couplab")).args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

/// Every file in `dir`, sorted by name, with its bytes.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn battery_on_the_small_config_passes() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("small.json");
    let o = couplab(&["battery", "--config", cfg.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("backbone") && stdout.contains("total"));
    let names: Vec<String> = snapshot(out.path()).into_iter().map(|f| f.0).collect();
    assert!(names.iter().any(|n| n.starts_with("battery-") && n.ends_with("-s7.report.json")));
    assert!(names.iter().any(|n| n.ends_with(".report.csv")));
}

#[test]
fn missing_or_invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(couplab(&["battery", "--config", "/does/not/exist.json"]).status.code(), Some(2));
    assert_eq!(couplab(&["battery"]).status.code(), Some(2));
    let bad = write_config(dir.path(), r#"{"name": "x", "battery": {"models": [], "functions": []}}"#);
    assert_eq!(couplab(&["battery", "--config", &bad]).status.code(), Some(2));
    // a Monte Carlo section without a seed
    let unseeded = write_config(
        dir.path(),
        r#"{"name": "x", "tail": {"model": {"kind": "iid", "n": 3, "marginal": [0.5, 0.5]},
            "function": {"kind": "magnetization"}, "samples": 2000}}"#,
    );
    assert_eq!(couplab(&["tail", "--config", &unseeded]).status.code(), Some(2));
    // the section for the subcommand is absent
    let cfg = configs().join("small.json");
    assert_eq!(couplab(&["creme", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn oversized_enumeration_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"name": "big", "battery": {"models": [{"kind": "ising", "cols": 6, "rows": 6, "beta": 0.2, "boundary": "plus"}],
            "functions": [{"kind": "magnetization"}]}}"#,
    );
    let out = dir.path().join("out");
    let o = couplab(&["battery", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let cfg = configs().join("small.json");
    let cfg = cfg.to_str().unwrap();
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let run = |dir: &Path, seed: &str, threads: &str| {
        let o = couplab(&[
            "tail", "--config", cfg, "--seed", seed, "--samples", "3000", "--threads", threads, "--out", dir.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        // the last line names the output directory
        let text = String::from_utf8(o.stdout).unwrap();
        text.lines().filter(|l| !l.starts_with("artifacts:")).collect::<Vec<_>>().join("\n")
    };
    let out_a = run(a.path(), "7", "1");
    let out_b = run(b.path(), "7", "3");
    assert_eq!(out_a, out_b);
    assert_eq!(snapshot(a.path()), snapshot(b.path()));
    run(c.path(), "8", "1");
    let (sa, sc) = (snapshot(a.path()), snapshot(c.path()));
    assert!(sc.iter().all(|f| f.0.contains("-s8.")));
    assert_ne!(sa.iter().find(|f| f.0.ends_with("samples.csv")).unwrap().1, sc.iter().find(|f| f.0.ends_with("samples.csv")).unwrap().1);
}

#[test]
fn report_runs_every_section() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("small.json");
    let o = couplab(&["report", "--config", cfg.to_str().unwrap(), "--samples", "2000", "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    for bound in ["backbone", "exponential", "duality-gap", "operator-norm"] {
        assert!(stdout.contains(bound), "{bound} missing from\n{stdout}");
    }
}
