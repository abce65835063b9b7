use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nodefill(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nodefill"))
        .args(args)
        .current_dir(cwd)
        .env_remove("NODEFILL_OUT_DIR")
        .output()
        .expect("run nodefill")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "status {:?}, stderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

/// Node rows without the header line, which is the same for equal seeds
/// anyway but carries nothing of interest here.
fn payload(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().skip(1).collect::<Vec<_>>().join("\n")
}

#[test]
fn generate_unit_square_pnp() {
    let dir = tempfile::tempdir().unwrap();
    let out = nodefill(
        &[
            "generate",
            "--alg",
            "pnp",
            "--domain",
            "box 0 0 1 1",
            "--h",
            "0.025",
            "--seed",
            "42",
            "-o",
            "out.csv",
        ],
        dir.path(),
    );
    let report = json(&out);
    let n = report["N"].as_u64().unwrap() as f64;
    assert!((n - 1472.0).abs() < 0.05 * 1472.0, "N = {n}");
    assert!(report["min_spacing"].as_f64().unwrap() >= 0.025 * (1.0 - 1e-10));
    assert_eq!(report["seed"], 42);
    let text = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert!(text.starts_with("# {"));
    assert_eq!(text.lines().count(), 2 + n as usize);
}

#[test]
fn same_seed_same_payload() {
    let dir = tempfile::tempdir().unwrap();
    for alg in ["pnp", "pnp-grid", "ff", "skf"] {
        for name in ["a.csv", "b.csv"] {
            let out = nodefill(
                &[
                    "generate", "--alg", alg, "--h", "0.05", "--seed", "7", "-o", name,
                ],
                dir.path(),
            );
            json(&out);
        }
        assert_eq!(
            payload(&dir.path().join("a.csv")),
            payload(&dir.path().join("b.csv")),
            "{alg}"
        );
    }
}

#[test]
fn missing_seed_is_drawn_and_printed() {
    let dir = tempfile::tempdir().unwrap();
    let out = nodefill(&["generate", "--h", "0.1", "-o", "n.csv"], dir.path());
    let report = json(&out);
    let stderr = String::from_utf8_lossy(&out.stderr);
    let seed = report["seed"].as_u64().unwrap();
    assert!(stderr.contains(&format!("seed: {seed}")), "{stderr}");
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("nested");
    let out = Command::new(env!("CARGO_BIN_EXE_nodefill"))
        .args(["generate", "--alg", "ff", "--h", "0.1", "--seed", "1"])
        .current_dir(dir.path())
        .env("NODEFILL_OUT_DIR", &target)
        .output()
        .unwrap();
    json(&out);
    assert!(target.join("nodes_ff.csv").exists());
}

#[test]
fn ff_in_3d_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = nodefill(
        &[
            "generate", "--alg", "ff", "--dim", "3", "--h", "0.1", "--seed", "1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FF supports 2-D only"));
}

#[test]
fn skf_with_variable_spacing_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = nodefill(
        &[
            "generate",
            "--alg",
            "skf",
            "--h",
            "0.02*(1+x)",
            "--seed",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("constant spacing"));
}

#[test]
fn bad_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        nodefill(&["generate", "--bogus"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        nodefill(&["generate", "--h", "-1", "--seed", "1"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        nodefill(
            &["generate", "--domain", "blob 1", "--h", "0.1"],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn nonpositive_spacing_inside_domain_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = nodefill(&["generate", "--h", "0.1-x", "--seed", "1"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn analyze_reports_statistics_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    json(&nodefill(
        &["generate", "--h", "0.025", "--seed", "3", "-o", "out.csv"],
        dir.path(),
    ));
    let report = json(&nodefill(
        &["analyze", "out.csv", "--c", "3", "--margin", "2h"],
        dir.path(),
    ));
    for key in ["mean", "std", "spread"] {
        assert!(report[key].is_f64(), "{key}");
    }
    assert!((report["margin"].as_f64().unwrap() - 0.05).abs() < 1e-15);
    assert_eq!(report["empty_disk"]["passed"], true);
    assert!(report["holes"]["max"].as_f64().unwrap() > 0.025);
    let hist = std::fs::read_to_string(dir.path().join("out_hist.csv")).unwrap();
    let total: usize = hist
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(
        total,
        3 * report["interior_count"].as_u64().unwrap() as usize
    );
}

#[test]
fn analyze_variable_spacing_checks_empty_disk() {
    let dir = tempfile::tempdir().unwrap();
    json(&nodefill(
        &[
            "generate",
            "--h",
            "0.015*(1+x+y)",
            "--seed",
            "3",
            "-o",
            "v.csv",
        ],
        dir.path(),
    ));
    let report = json(&nodefill(&["analyze", "v.csv"], dir.path()));
    assert_eq!(report["empty_disk"]["passed"], true);
}

#[test]
fn bench_writes_one_row_per_algorithm_and_spacing() {
    let dir = tempfile::tempdir().unwrap();
    let out = nodefill(
        &[
            "bench",
            "--alg",
            "pnp,pnp-grid,ff,skf",
            "--target-n",
            "2e3,4e3",
            "--repeats",
            "3",
            "--seed",
            "1",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alg,variant,h,N,t_median,t1,t2,t3");
    assert_eq!(lines.len(), 1 + 4 * 2);
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), 8);
    }
}

#[test]
fn bench_shrinking_domain() {
    let dir = tempfile::tempdir().unwrap();
    let out = nodefill(
        &[
            "bench", "--alg", "pnp", "--shrink", "0.1,0.4", "--h", "0.05", "--seed", "1", "-o",
            "s.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(text.starts_with("alpha,alg,"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn solve_poisson_reports_small_error() {
    let dir = tempfile::tempdir().unwrap();
    let report = json(&nodefill(
        &[
            "solve-poisson",
            "--alg",
            "pnp",
            "--h",
            "0.05",
            "--dim",
            "2",
            "--seed",
            "1",
        ],
        dir.path(),
    ));
    assert!(report["N"].as_u64().unwrap() > 300);
    let l1 = report["L1"].as_f64().unwrap();
    assert!(l1 < 1e-2, "L1 = {l1}");
    assert!(report["runtime"].is_f64());
}

#[test]
fn spectrum_writes_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let report = json(&nodefill(
        &["spectrum", "--h", "0.06", "--seed", "1", "-o", "eig.csv"],
        dir.path(),
    ));
    assert!(report["max_re"].as_f64().unwrap() < 0.0);
    let text = std::fs::read_to_string(dir.path().join("eig.csv")).unwrap();
    assert_eq!(
        text.lines().count(),
        1 + report["interior"].as_u64().unwrap() as usize
    );
}
