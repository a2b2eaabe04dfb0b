//! End-to-end checks of the experiment driver binary: the determinism
//! contract (same manifest and seed give byte-identical CSV no matter the
//! thread count), plus exit-code wiring for the documented failure modes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn kcsm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kcsm"))
}

fn write_manifest(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

/// Runs `kcsm <kind> --manifest <path> --out <out> <extra...>`.
fn run(kind: &str, manifest: &Path, out: &Path, extra: &[&str]) -> Output {
    kcsm()
        .arg(kind)
        .arg("--manifest")
        .arg(manifest)
        .arg("--out")
        .arg(out)
        .args(extra)
        .env_remove("KCSM_THREADS")
        .output()
        .expect("binary runs")
}

fn assert_exit(output: &Output, want: i32, context: &str) {
    let got = output.status.code().unwrap_or(-1);
    assert_eq!(
        got,
        want,
        "{context}: expected exit {want}, got {got}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr),
    );
}

#[test]
fn acceptance_15_byte_identical_csv_across_thread_counts() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    // one manifest per experiment family that produces rows, covering the
    // deterministic solvers and every Monte Carlo path
    let manifests: Vec<(&str, PathBuf)> = vec![
        (
            "gap",
            write_manifest(
                dir.path(),
                "gap.json",
                r#"{"schema": 1, "kind": "gap",
                    "model": {"model": "east", "d": 1},
                    "bc": {"mode": "frozen-halo", "fill": "empty"},
                    "grid": {"q": [0.2, 0.5], "l": [2, 4, 6]}, "seed": 7}"#,
            ),
        ),
        (
            "bootstrap",
            write_manifest(
                dir.path(),
                "bootstrap.json",
                r#"{"schema": 1, "kind": "bootstrap",
                    "model": {"model": "fa", "d": 1, "j": 1},
                    "grid": {"q": [0.2, 0.4], "l": [4, 8], "n_samples": 4000},
                    "seed": 21}"#,
            ),
        ),
        (
            "persistence",
            write_manifest(
                dir.path(),
                "persistence.json",
                r#"{"schema": 1, "kind": "persistence",
                    "model": {"model": "fa", "d": 1, "j": 1},
                    "bc": {"mode": "frozen-halo", "fill": "empty"},
                    "grid": {"q": [0.4], "l": [10], "t_max": 8.0,
                             "n_samples": 3000},
                    "seed": 33}"#,
            ),
        ),
        (
            "kmc",
            write_manifest(
                dir.path(),
                "kmc.json",
                r#"{"schema": 1, "kind": "kmc",
                    "model": {"model": "fa", "d": 1, "j": 1},
                    "bc": {"mode": "frozen-halo", "fill": "empty"},
                    "grid": {"q": [0.4], "l": [10], "t_max": 12.0,
                             "n_samples": 3000},
                    "seed": 43}"#,
            ),
        ),
        (
            "perc",
            write_manifest(
                dir.path(),
                "perc.json",
                r#"{"schema": 1, "kind": "perc",
                    "grid": {"p": [0.5, 0.8], "l": [16], "n_samples": 4000},
                    "seed": 55}"#,
            ),
        ),
        (
            "bound",
            write_manifest(
                dir.path(),
                "bound.json",
                r#"{"schema": 1, "kind": "bound",
                    "model": {"model": "east", "d": 1},
                    "grid": {"q": [0.2, 0.3, 0.5]}, "seed": 0}"#,
            ),
        ),
        (
            "blockcheck",
            write_manifest(
                dir.path(),
                "blockcheck.json",
                r#"{"schema": 1, "kind": "blockcheck",
                    "grid": {"q": [0.25, 0.5, 0.75, 0.9375]},
                    "block": {"n1": 3, "n2": 2, "predicate": "all-empty"},
                    "seed": 0}"#,
            ),
        ),
    ];

    for (kind, manifest) in &manifests {
        let mut csvs: Vec<Vec<u8>> = Vec::new();
        // three reruns: two --threads values plus the env-var fallback
        for (label, threads, env) in
            [("t1", Some("1"), None), ("t3", Some("3"), None), ("env2", None, Some("2"))]
        {
            let out = dir.path().join(format!("{kind}-{label}"));
            let mut cmd = kcsm();
            cmd.arg(kind)
                .arg("--manifest")
                .arg(manifest)
                .arg("--out")
                .arg(&out)
                .env_remove("KCSM_THREADS");
            if let Some(t) = threads {
                cmd.arg("--threads").arg(t);
            }
            if let Some(e) = env {
                cmd.env("KCSM_THREADS", e);
            }
            let output = cmd.output().expect("binary runs");
            assert_exit(&output, 0, &format!("{kind} run {label}"));
            csvs.push(fs::read(out.join("results.csv")).unwrap());
        }
        assert!(
            csvs.windows(2).all(|w| w[0] == w[1]),
            "{kind}: CSV bytes differ between reruns"
        );
        assert!(csvs[0].len() > 0 && csvs[0].ends_with(b"\n"));
    }

    println!(
        "[15] determinism across thread counts: PASS ({:.1}s) {} kinds x 3 runs, all byte-identical",
        t0.elapsed().as_secs_f64(),
        manifests.len()
    );
}

#[test]
fn minimal_gap_manifest_yields_one_positive_row() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(
        dir.path(),
        "gap.json",
        r#"{"schema": 1, "kind": "gap",
            "model": {"model": "east", "d": 1},
            "grid": {"q": [0.5], "l": [4]}, "seed": 1}"#,
    );
    let out = dir.path().join("out");
    let output = run("gap", &manifest, &out, &[]);
    assert_exit(&output, 0, "minimal gap run");

    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "header plus exactly one row:\n{csv}");
    assert_eq!(
        lines[0],
        "model,d,sides,bc,q,states,components,gap,residual,seed"
    );
    let gap: f64 = lines[1].split(',').nth(7).unwrap().parse().unwrap();
    assert!(gap > 0.0, "gap must be positive, got {gap}");

    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"manifest_hash\""));
    assert!(summary.contains("\"version\""));
}

#[test]
fn out_of_range_density_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(
        dir.path(),
        "bad.json",
        r#"{"schema": 1, "kind": "gap",
            "model": {"model": "east", "d": 1},
            "grid": {"q": [1.5], "l": [4]}, "seed": 1}"#,
    );
    let output = run("gap", &manifest, &dir.path().join("out"), &[]);
    assert_exit(&output, 2, "q=1.5");
    assert!(String::from_utf8_lossy(&output.stderr).contains("outside (0,1)"));
}

#[test]
fn unknown_manifest_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(
        dir.path(),
        "bad.json",
        r#"{"schema": 1, "kind": "gap",
            "model": {"model": "east", "d": 1},
            "grid": {"q": [0.5], "l": [4]}, "sneed": 1}"#,
    );
    let output = run("gap", &manifest, &dir.path().join("out"), &[]);
    assert_exit(&output, 2, "unknown key");
}

#[test]
fn subcommand_must_match_manifest_kind() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(
        dir.path(),
        "gap.json",
        r#"{"schema": 1, "kind": "gap",
            "model": {"model": "east", "d": 1},
            "grid": {"q": [0.5], "l": [4]}, "seed": 1}"#,
    );
    let output = run("bootstrap", &manifest, &dir.path().join("out"), &[]);
    assert_exit(&output, 2, "kind mismatch");
}

#[test]
fn strict_flag_turns_nonergodic_into_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    // the oriented rule against an all-occupied halo cannot free the far
    // corner, so the 2x2 chain is reducible
    let manifest = write_manifest(
        dir.path(),
        "ne.json",
        r#"{"schema": 1, "kind": "gap",
            "model": {"model": "ne", "d": 2},
            "grid": {"q": [0.3], "l": [2]}, "seed": 1}"#,
    );
    let relaxed = run("gap", &manifest, &dir.path().join("a"), &[]);
    assert_exit(&relaxed, 0, "non-ergodic without --strict");
    let summary = fs::read_to_string(dir.path().join("a/summary.json")).unwrap();
    assert!(summary.contains("non-ergodic"), "warning recorded: {summary}");

    let strict = run("gap", &manifest, &dir.path().join("b"), &["--strict"]);
    assert_exit(&strict, 4, "non-ergodic with --strict");
}

#[test]
fn residual_tolerance_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(
        dir.path(),
        "tight.json",
        r#"{"schema": 1, "kind": "gap",
            "model": {"model": "east", "d": 1},
            "grid": {"q": [0.5], "l": [4]},
            "tolerances": {"residual": 1e-30}, "seed": 1}"#,
    );
    let output = run("gap", &manifest, &dir.path().join("out"), &[]);
    assert_exit(&output, 3, "unmeetable residual tolerance");
}

#[test]
fn seed_flag_overrides_manifest_and_changes_hash() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(
        dir.path(),
        "boot.json",
        r#"{"schema": 1, "kind": "bootstrap",
            "model": {"model": "fa", "d": 1, "j": 1},
            "grid": {"q": [0.3], "l": [6], "n_samples": 500}, "seed": 5}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    assert_exit(&run("bootstrap", &manifest, &a, &[]), 0, "base run");
    assert_exit(
        &run("bootstrap", &manifest, &b, &["--seed", "5"]),
        0,
        "explicit same seed",
    );
    assert_exit(
        &run("bootstrap", &manifest, &c, &["--seed", "6"]),
        0,
        "different seed",
    );
    let read = |d: &Path| fs::read(d.join("results.csv")).unwrap();
    assert_eq!(read(&a), read(&b), "same seed, same bytes");
    assert_ne!(read(&a), read(&c), "different seed must change the samples");

    let hash = |d: &Path| {
        let s = fs::read_to_string(d.join("summary.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        v["manifest_hash"].as_str().unwrap().to_string()
    };
    assert_eq!(hash(&a), hash(&b));
    assert_ne!(hash(&a), hash(&c), "the effective seed is part of the identity");
}

#[test]
fn compare_subcommand_wiring() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(
        dir.path(),
        "gap.json",
        r#"{"schema": 1, "kind": "gap",
            "model": {"model": "east", "d": 1},
            "grid": {"q": [0.5], "l": [4, 5]}, "seed": 9}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_exit(&run("gap", &manifest, &a, &[]), 0, "result run");
    assert_exit(&run("gap", &manifest, &b, &[]), 0, "baseline run");

    // identical files pass
    let ok = kcsm().arg("compare").arg(&a).arg(&b).output().unwrap();
    assert_exit(&ok, 0, "identical compare");
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS"));

    // a doctored deterministic value fails exactly, passes under a tolerance
    let csv_path = b.join("results.csv");
    let text = fs::read_to_string(&csv_path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[1].split(',').map(String::from).collect();
    let gap: f64 = fields[7].parse().unwrap();
    fields[7] = format!("{}", gap + 1e-13);
    lines[1] = fields.join(",");
    fs::write(&csv_path, lines.join("\n") + "\n").unwrap();

    let strict = kcsm().arg("compare").arg(&a).arg(&b).output().unwrap();
    assert_exit(&strict, 1, "12th-digit drift under exact compare");
    assert!(String::from_utf8_lossy(&strict.stdout).contains("`gap`"));

    let loose = kcsm()
        .arg("compare")
        .arg(&a)
        .arg(&b)
        .args(["--tol", "1e-10"])
        .output()
        .unwrap();
    assert_exit(&loose, 0, "12th-digit drift under tol 1e-10");

    // different experiment: hash precondition trips
    let other = write_manifest(
        dir.path(),
        "gap2.json",
        r#"{"schema": 1, "kind": "gap",
            "model": {"model": "east", "d": 1},
            "grid": {"q": [0.5], "l": [4, 5]}, "seed": 10}"#,
    );
    let c = dir.path().join("c");
    assert_exit(&run("gap", &other, &c, &[]), 0, "other run");
    let mismatch = kcsm().arg("compare").arg(&a).arg(&c).output().unwrap();
    assert_exit(&mismatch, 2, "hash mismatch without override");
}
