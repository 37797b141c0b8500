//! CLI acceptance: byte-identical reruns, exit codes, config ingestion.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sicasy"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sicasy-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn read_csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".csv"))
        .map(|e| {
            (
                e.file_name().to_string_lossy().to_string(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_11_reruns_are_byte_identical() {
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "pv-curve",
            "--n",
            "40",
            "--alpha",
            "0.32",
            "--epsilon",
            "0.1",
        ],
        vec!["moments", "--n", "60", "--alpha", "0.38", "--xi", "0.1"],
        vec![
            "sumrate",
            "--xi",
            "0",
            "--alpha-min",
            "0.2",
            "--alpha-max",
            "0.6",
            "--alpha-steps",
            "9",
        ],
        vec![
            "simulate",
            "--n",
            "32",
            "--alpha",
            "0.32",
            "--model",
            "gamma:2",
            "--replications",
            "2000",
            "--seed",
            "42",
        ],
    ];
    for case in cases {
        let d1 = tmp_dir(&format!("a-{}", case[0]));
        let d2 = tmp_dir(&format!("b-{}", case[0]));
        for dir in [&d1, &d2] {
            let status = bin()
                .args(&case)
                .arg("--out")
                .arg(dir)
                .status()
                .expect("spawn CLI");
            assert!(status.success(), "{case:?} failed in {dir:?}");
        }
        let a = read_csvs(&d1);
        let b = read_csvs(&d2);
        assert!(!a.is_empty(), "{case:?} produced no CSV artifacts");
        assert_eq!(a.len(), b.len());
        for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(b.iter()) {
            assert_eq!(name_a, name_b);
            assert_eq!(
                bytes_a, bytes_b,
                "{}: bytes differ between identical reruns of {case:?}",
                name_a
            );
        }
        let _ = fs::remove_dir_all(&d1);
        let _ = fs::remove_dir_all(&d2);
    }
    println!("criterion 11 (byte-identical CSV artifacts on rerun): PASS");
}

#[test]
fn pv_curve_degenerate_single_row() {
    let dir = tmp_dir("single");
    let status = bin()
        .args(["pv-curve", "--n", "1", "--alpha", "0.32", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(dir.join("pv_curve.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3, "schema + header + one row: {text}");
    assert_eq!(lines[1], "x,p_v");
    let cells: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(cells[0].parse::<f64>().unwrap(), 1.0);
    assert!((cells[1].parse::<f64>().unwrap() - 0.9).abs() < 1e-7);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn manifest_lists_every_artifact() {
    let dir = tmp_dir("manifest");
    let status = bin()
        .args(["moments", "--n", "25", "--alpha", "0.32", "--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("run_manifest.json")).unwrap()).unwrap();
    let artifacts = manifest["artifacts"].as_object().unwrap();
    for entry in fs::read_dir(&dir).unwrap() {
        let name = entry.unwrap().file_name().to_string_lossy().to_string();
        if name == "run_manifest.json" {
            continue;
        }
        assert!(
            artifacts.contains_key(&name),
            "artifact {name} missing from manifest"
        );
    }
    assert_eq!(manifest["command"], "moments");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn exit_codes() {
    // 2: invalid arguments
    let out = bin()
        .args(["pv-curve", "--alpha", "0.32"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "missing --n/--out should be 2");
    let out = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let dir = tmp_dir("badmodel");
    let out = bin()
        .args([
            "simulate", "--n", "4", "--alpha", "0.32", "--model", "rice:3", "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "unknown model is an argument error"
    );
    let out = bin()
        .args([
            "general",
            "--model",
            "nakagami:2",
            "--alpha-min",
            "0.2",
            "--alpha-max",
            "0.4",
            "--alpha-steps",
            "3",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "invalid model spec should be 2");
    let out = bin()
        .args([
            "simulate", "--n", "4", "--alpha", "0.3", "--gamma", "0.5", "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "--alpha with --gamma should be 2"
    );
    // empty alpha range
    let out = bin()
        .args([
            "sumrate",
            "--xi",
            "0",
            "--alpha-min",
            "0.5",
            "--alpha-max",
            "0.2",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "empty alpha range should be 2");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn general_gamma_one_overlays_rayleigh() {
    let d_gamma = tmp_dir("gen-gamma");
    let d_ray = tmp_dir("gen-ray");
    let range = [
        "--alpha-min",
        "0.25",
        "--alpha-max",
        "0.45",
        "--alpha-steps",
        "5",
    ];
    let status = bin()
        .args(["general", "--etas", "1"])
        .args(range)
        .arg("--out")
        .arg(&d_gamma)
        .status()
        .unwrap();
    assert!(status.success());
    let status = bin()
        .args(["general", "--model", "rayleigh"])
        .args(range)
        .arg("--out")
        .arg(&d_ray)
        .status()
        .unwrap();
    assert!(status.success());
    let read_u = |dir: &Path| -> Vec<f64> {
        fs::read_to_string(dir.join("general.csv"))
            .unwrap()
            .lines()
            .skip(2)
            .map(|l| l.split(',').nth(4).unwrap().parse::<f64>().unwrap())
            .collect()
    };
    let a = read_u(&d_gamma);
    let b = read_u(&d_ray);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-6, "{x} vs {y}");
    }
    let _ = fs::remove_dir_all(&d_gamma);
    let _ = fs::remove_dir_all(&d_ray);
}

#[test]
fn simulate_reads_json_config() {
    let dir = tmp_dir("config");
    let config_path = dir.join("plan.json");
    fs::write(
        &config_path,
        r#"{"n": 16, "alpha": 0.32, "xi": 0.0, "epsilon": 0.1,
            "model": "rayleigh", "replications": 5000, "seed": 7, "mode": "sic"}"#,
    )
    .unwrap();
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let status = bin()
            .arg("simulate")
            .arg("--config")
            .arg(&config_path)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(
        fs::read(out_a.join("histogram.csv")).unwrap(),
        fs::read(out_b.join("histogram.csv")).unwrap()
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["n"], 16);
    assert_eq!(report["replications"], 5000);
    // histogram sums to replications
    let hist = report["decoded_count_histogram"].as_array().unwrap();
    let total: u64 = hist.iter().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(total, 5000);
    let _ = fs::remove_dir_all(&dir);
}
