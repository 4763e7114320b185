use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graver-mcmc"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| fs::write(dir.path().join(name), text).unwrap();
    write("k4.txt", "1 2\n1 3\n1 4\n2 3\n2 4\n3 4\n");
    write("k5.txt", "1 2\n1 3\n1 4\n1 5\n2 3\n2 4\n2 5\n3 4\n3 5\n4 5\n");
    write("star.txt", "# a tree\n1 2\n1 3\n1 4\n1 5\n");
    write("matching.txt", "1 2\n3 4\n");
    write("ones.txt", "1,1,1,1\n");
    write("twos.txt", "2,2,2,2,2\n");
    dir
}

fn stdout_lines(out: &Output) -> Vec<String> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn sample_move_on_k4_gives_four_cycles() {
    let dir = workspace();
    let out = run(
        dir.path(),
        &["sample-move", "k4.txt", "--square-free", "--count", "10", "--seed", "4"],
    );
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    assert_eq!(lines.len(), 10);
    for (k, line) in lines.iter().enumerate() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["slot"], k);
        assert_eq!(v["status"], "ok");
        let entries = v["edges"].as_array().unwrap();
        assert_eq!(entries.len(), 4);
        let mut balance = [0i64; 5];
        for entry in entries {
            let (i, j, z) = (
                entry[0].as_u64().unwrap(),
                entry[1].as_u64().unwrap(),
                entry[2].as_i64().unwrap(),
            );
            assert_eq!(z.abs(), 1);
            balance[i as usize] += z;
            balance[j as usize] += z;
        }
        assert_eq!(balance, [0; 5]);
    }
}

#[test]
fn sample_move_on_a_tree_exhausts_every_slot() {
    let dir = workspace();
    let out = run(dir.path(), &["sample-move", "star.txt", "--count", "3"]);
    assert_eq!(out.status.code(), Some(4));
    let lines = stdout_lines(&out);
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().all(|l| l.contains("\"exhausted\"")));
    assert!(String::from_utf8_lossy(&out.stderr).contains("3 of 3 move slots exhausted"));
}

#[test]
fn sample_move_is_reproducible() {
    let dir = workspace();
    let args = ["sample-move", "k5.txt", "--count", "50", "--seed", "21"];
    let a = run(dir.path(), &args);
    let b = run(dir.path(), &args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
    let other = run(dir.path(), &["sample-move", "k5.txt", "--count", "50", "--seed", "22"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn enumerate_counts_match_known_fibers() {
    let dir = workspace();
    let out = run(dir.path(), &["enumerate", "k4.txt", "ones.txt"]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    assert_eq!(lines, vec!["1-4:1 2-3:1", "1-3:1 2-4:1", "1-2:1 3-4:1", "# count 3"]);

    let out = run(
        dir.path(),
        &["enumerate", "k5.txt", "twos.txt", "--caps", "one", "--count-only"],
    );
    assert_eq!(stdout_lines(&out), vec!["# count 12"]);

    let out = run(
        dir.path(),
        &["enumerate", "k4.txt", "ones.txt", "--caps", "unbounded", "--count-only"],
    );
    assert_eq!(stdout_lines(&out), vec!["# count 3"]);
}

#[test]
fn enumerate_guard_trips() {
    let dir = workspace();
    let out = run(dir.path(), &["enumerate", "k5.txt", "twos.txt", "--max-nodes", "10"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("instance too large"));
}

#[test]
fn enumerate_with_capacity_file() {
    let dir = workspace();
    fs::write(dir.path().join("caps.txt"), "1 2 2\n3 4 2\n").unwrap();
    fs::write(dir.path().join("d.txt"), "2,2,2,2\n").unwrap();
    let out = run(dir.path(), &["enumerate", "k4.txt", "d.txt", "--caps", "caps.txt"]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    assert!(lines.contains(&"1-2:2 3-4:2".to_string()));
    assert!(lines.contains(&"1-3:1 1-4:1 2-3:1 2-4:1".to_string()));
}

#[test]
fn test_beta_smoke_run() {
    let dir = workspace();
    let out = run(
        dir.path(),
        &[
            "test-beta",
            "matching.txt",
            "--steps",
            "3000",
            "--burn-in",
            "500",
            "--seed",
            "1",
            "--out-dir",
            "out",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema_version"], 1);
    for stat in ["chi2", "clustering", "triangles"] {
        let p = report["p_values"][stat].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
    assert_eq!(report["chain"]["samples"], 2500);
    assert_eq!(report["degrees"], "1,1,1,1");
    // every state of the perfect-matching fiber has chi-square 6 under p = 1/2
    assert!((report["observed"]["chi2"].as_f64().unwrap() - 6.0).abs() < 1e-6);

    let out_dir = dir.path().join("out");
    for name in [
        "report.json",
        "manifest.json",
        "chi2_histogram.csv",
        "clustering_histogram.csv",
        "triangles_histogram.csv",
    ] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let csv = fs::read_to_string(out_dir.join("triangles_histogram.csv")).unwrap();
    assert!(csv.starts_with("bin_lower,bin_upper,count\n"));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "test-beta");
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn test_beta_histograms_sum_to_samples() {
    let dir = workspace();
    fs::write(dir.path().join("c5.txt"), "1 2\n2 3\n3 4\n4 5\n5 1\n").unwrap();
    let out = run(
        dir.path(),
        &[
            "test-beta",
            "c5.txt",
            "--steps",
            "5000",
            "--burn-in",
            "1000",
            "--stats",
            "chi2",
            "--bins",
            "7",
            "--out-dir",
            "o",
            "--samples-csv",
        ],
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("o/chi2_histogram.csv")).unwrap();
    let total: u64 = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 4000);
    let samples = fs::read_to_string(dir.path().join("o/samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 4001);
    assert!(!dir.path().join("o/triangles_histogram.csv").exists());
}

#[test]
fn test_beta_rejects_burn_in_not_below_steps() {
    let dir = workspace();
    let out = run(
        dir.path(),
        &["test-beta", "matching.txt", "--steps", "100", "--burn-in", "100"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("burn-in"));
}

#[test]
fn test_beta_reports_boundary_vertices() {
    let dir = workspace();
    // vertex 5 is isolated in the observed graph on K5
    fs::write(dir.path().join("g.txt"), "1 2\n2 3\n3 4\n4 1\n").unwrap();
    let out = run(
        dir.path(),
        &[
            "test-beta",
            "g.txt",
            "--vertices",
            "5",
            "--steps",
            "10",
            "--burn-in",
            "1",
        ],
    );
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("vertices 5"));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = workspace();
    fs::write(dir.path().join("loop.txt"), "1 2\n2 2\n").unwrap();
    assert_eq!(run(dir.path(), &["sample-move", "missing.txt"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["sample-move", "loop.txt"]).status.code(), Some(2));
    let dropped = run(dir.path(), &["sample-move", "loop.txt", "--drop-loops"]);
    assert_eq!(dropped.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&dropped.stderr).contains("dropped loop at vertex 2"));
    assert_eq!(
        run(dir.path(), &["enumerate", "k5.txt", "ones.txt"]).status.code(),
        Some(2)
    );
}

#[test]
fn fit_outputs_documented_fields() {
    let dir = workspace();
    fs::write(dir.path().join("d.txt"), "2,2,2,2\n").unwrap();
    let out = run(dir.path(), &["fit", "--degrees", "d.txt"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["converged"], true);
    assert!(v["iterations"].as_u64().unwrap() > 0);
    assert!(v["residual"].as_f64().unwrap() <= 1e-10);
    for a in v["alpha"].as_array().unwrap() {
        assert!((a.as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-8);
    }

    let out = run(dir.path(), &["fit", "--graph", "k4.txt"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn manifest_goes_to_requested_path() {
    let dir = workspace();
    let out = run(
        dir.path(),
        &["enumerate", "k4.txt", "ones.txt", "--manifest", "run.json"],
    );
    assert!(out.status.success());
    assert!(out.stderr.is_empty());
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "enumerate");
    assert_eq!(m["flags"]["caps"], "one");
    assert_eq!(m["inputs"].as_array().unwrap().len(), 2);
    assert!(m["seed"].is_null());
}
