use std::path::Path;
use std::process::{Command, Output};

use irnn_core::harness::image::{bundled_test_image, synthetic_test_image};
use irnn_core::harness::io::{read_csv_matrix, write_completion_problem, write_tensor};
use irnn_core::harness::{generate_synthetic, relative_error, SyntheticSpec};
use irnn_core::problems::Tensor3;

fn irnn(args: &[&str], dir: &Path) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_irnn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("run irnn");
    if !out.status.success() {
        panic!("irnn {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_writes_reports_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "synth", "--ranks", "1:2", "--size", "30x30", "--trials", "2", "--penalties", "lp,nuclear", "--seed", "5",
        "--out", "a.json,a.csv",
    ];
    irnn(&args, dir.path());
    let report = read_json(&dir.path().join("a.json"));
    assert_eq!(report["rows"].as_array().unwrap().len(), 4);
    assert_eq!(report["metadata"]["seed"], 5);
    assert!(dir.path().join("a.timing.json").exists());
    let csv = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    let mut again = args;
    again[args.len() - 1] = "b.json";
    irnn(&again, dir.path());
    assert_eq!(
        std::fs::read(dir.path().join("a.json")).unwrap(),
        std::fs::read(dir.path().join("b.json")).unwrap()
    );
}

#[test]
fn synth_rejects_bad_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_irnn"))
        .args(["synth", "--ranks", "9:3"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn complete_recovers_low_rank_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate_synthetic(&SyntheticSpec {
        m: 40,
        n: 30,
        rank: 2,
        seed: 11,
        ..SyntheticSpec::default()
    })
    .unwrap();
    write_completion_problem(&dir.path().join("obs.mtx"), &inst.problem().unwrap()).unwrap();
    irnn(
        &["complete", "--observed", "obs.mtx", "--penalty", "mcp", "--out", "x.csv", "--trace", "t.json"],
        dir.path(),
    );
    let x = read_csv_matrix(&dir.path().join("x.csv")).unwrap();
    assert!(relative_error(&x, &inst.truth).unwrap() < 1e-3);
    assert!(read_json(&dir.path().join("t.json")).as_array().is_some_and(|a| !a.is_empty()));
}

#[test]
fn image_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_test_image(32, 24).save(dir.path().join("in.png")).unwrap();
    let out = irnn(
        &["image", "--input", "in.png", "--corrupt", "random:0.3", "--penalties", "lp,nuclear", "--out-dir", "res"],
        dir.path(),
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("corrupted"));
    let res = dir.path().join("res");
    for f in ["corrupted.png", "recovered_lp.png", "recovered_nuclear.png", "report.json", "timing.json"] {
        assert!(res.join(f).exists(), "missing {f}");
    }
    let report = read_json(&res.join("report.json"));
    assert_eq!(report["width"], 32);
    assert_eq!(report["results"].as_array().unwrap().len(), 2);
    assert_ne!(bundled_test_image().dimensions(), (32, 24));
}

#[test]
fn tlrr_writes_factors() {
    let dir = tempfile::tempdir().unwrap();
    let t = Tensor3::from_fn([4, 3, 5], |i, j, k| ((i + 2 * j + 3 * k) % 7) as f64 - 3.0);
    write_tensor(&dir.path().join("t.txt"), &t).unwrap();
    irnn(
        &["tlrr", "--tensor", "t.txt", "--penalty", "scad", "--lambdas", "0.5,0.5,0.5", "--max-iter", "50", "--out-dir", "out"],
        dir.path(),
    );
    let out = dir.path().join("out");
    for (f, d) in [("P1.csv", 4), ("P2.csv", 3), ("P3.csv", 5)] {
        let p = read_csv_matrix(&out.join(f)).unwrap();
        assert_eq!(p.shape(), (d, d));
    }
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["iterations"], 50);
    assert!(out.join("trace.csv").exists());
}
