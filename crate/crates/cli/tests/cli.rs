use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn wefpe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wefpe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_grid(path: &Path) -> (usize, usize, Vec<f64>) {
    let b = fs::read(path).unwrap();
    assert_eq!(&b[..6], b"WEFPE1");
    assert_eq!(u16::from_le_bytes([b[6], b[7]]), 1);
    let rows = u32::from_le_bytes(b[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(b[12..16].try_into().unwrap()) as usize;
    assert_eq!(b.len(), 16 + 8 * rows * cols);
    let data = b[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    (rows, cols, data)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn gen_writes_expected_size_deterministically() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.wef");
    let b = dir.path().join("b.wef");
    let args = |p: &Path| {
        vec![
            "gen", "--height", "14", "--width", "14", "--dim", "192", "--seed", "42", "-o",
        ]
        .into_iter()
        .map(str::to_string)
        .chain([path_str(p).to_string()])
        .collect::<Vec<_>>()
    };
    let out_a = Command::new(env!("CARGO_BIN_EXE_wefpe"))
        .args(args(&a))
        .output()
        .unwrap();
    let out_b = Command::new(env!("CARGO_BIN_EXE_wefpe"))
        .args(args(&b))
        .output()
        .unwrap();
    assert!(out_a.status.success());
    assert_eq!(fs::metadata(&a).unwrap().len(), 302_608);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let (ja, jb) = (json_of(&out_a), json_of(&out_b));
    assert_eq!(ja["rows"], 197);
    assert_eq!(ja["cols"], 192);
    assert_eq!(ja["sha256"], jb["sha256"]);
    assert_eq!(ja["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn gen_larger_grid() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("g.wef");
    let out = wefpe(&["gen", "--height", "24", "--width", "24", "-o", path_str(&p)]);
    assert!(out.status.success());
    let (rows, cols, data) = read_grid(&p);
    assert_eq!((rows, cols), (577, 192));
    assert!(data.iter().all(|x| x.is_finite()));
}

#[test]
fn gen_io_failure_exits_3() {
    let out = wefpe(&["gen", "-o", "/nonexistent-dir/sub/g.wef"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"encoding": {"unknown_key": 1}}"#).unwrap();
    let out = wefpe(&[
        "-c",
        path_str(&cfg),
        "gen",
        "-o",
        path_str(&dir.path().join("g.wef")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    fs::write(&cfg, r#"{"encoding": {"model_dim": 2}}"#).unwrap();
    let out = wefpe(&[
        "-c",
        path_str(&cfg),
        "gen",
        "-o",
        path_str(&dir.path().join("g.wef")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(wefpe(&["gen"]).status.code(), Some(2));
    let missing = wefpe(&["-c", "/nonexistent-dir/c.json", "config"]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"encoding": {"height": 5, "width": 4, "model_dim": 16}}"#,
    )
    .unwrap();
    let p = dir.path().join("g.wef");
    let out = wefpe(&[
        "-c",
        path_str(&cfg),
        "gen",
        "--height",
        "6",
        "-o",
        path_str(&p),
    ]);
    assert!(out.status.success());
    let (rows, cols, _) = read_grid(&p);
    assert_eq!((rows, cols), (6 * 4 + 1, 16));
}

#[test]
fn config_command_prints_defaults() {
    let out = wefpe(&["config"]);
    assert!(out.status.success());
    let j = json_of(&out);
    assert_eq!(j["encoding"]["height"], 14);
    assert_eq!(j["decay"]["bins"], 80);
}

#[test]
fn verify_defaults_pass() {
    let out = wefpe(&["verify"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let j = json_of(&out);
    assert!(j["max_diffeq_residual"].as_f64().unwrap() < 1e-2);
    assert_eq!(j["passed"], true);
    assert_eq!(j["samples_used"], 200);
}

#[test]
fn verify_rejects_zero_samples() {
    let out = wefpe(&["verify", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn verify_coarse_truncation_has_larger_residuals() {
    let coarse = wefpe(&["verify", "--truncation", "2"]);
    let fine = json_of(&wefpe(&["verify"]));
    let c = json_of(&coarse);
    assert!(matches!(coarse.status.code(), Some(0) | Some(1)));
    for key in ["max_diffeq_residual", "max_periodicity_residual"] {
        assert!(
            c[key].as_f64().unwrap() > fine[key].as_f64().unwrap(),
            "{key}"
        );
    }
}

#[test]
fn verify_reference_lattice_fails_with_g2_one() {
    let out = wefpe(&["verify", "--periods", "reference", "--samples", "50"]);
    assert_eq!(out.status.code(), Some(1));
    let failures = json_of(&out)["failures"].clone();
    assert!(failures.as_array().unwrap().iter().any(|f| f == "diffeq"));
}

#[test]
fn decay_default_and_csv() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("d.csv");
    let out = wefpe(&["decay", "--csv", path_str(&csv)]);
    assert!(out.status.success());
    let j = json_of(&out);
    assert!(j["pearson_rho"].as_f64().unwrap() <= -0.90);
    assert_eq!(j["n_pairs"], 19110);
    let rows = csv_rows(&csv);
    assert_eq!(
        rows[0],
        [
            "bin_center",
            "mean_similarity",
            "mapped_similarity",
            "count"
        ]
    );
    let total: usize = rows[1..]
        .iter()
        .map(|r| r[3].parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 19110);
    assert!(rows.len() - 1 <= 80);
}

#[test]
fn decay_single_bin_writes_one_row() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("d.csv");
    let out = wefpe(&["decay", "--bins", "1", "--csv", path_str(&csv)]);
    // one bin leaves the correlation undefined
    assert_eq!(out.status.code(), Some(1));
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][3], "19110");
}

#[test]
fn bench_orderings() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("b.csv");
    let out = wefpe(&["bench", "--k-list", "100,624", "-o", path_str(&csv)]);
    assert!(out.status.success());
    let rows = csv_rows(&csv);
    assert_eq!(
        rows[0],
        ["k", "ordering", "mean_abs_error", "max_abs_error", "bound"]
    );
    let find = |k: &str, o: &str| {
        rows.iter()
            .find(|r| r[0] == k && r[1] == o)
            .unwrap()
            .clone()
    };
    let mean = |r: &Vec<String>| r[2].parse::<f64>().unwrap();
    assert!(mean(&find("100", "modulus_sorted")) <= mean(&find("100", "lexicographic")));
    let (s, l) = (find("624", "modulus_sorted"), find("624", "lexicographic"));
    assert!((mean(&s) - mean(&l)).abs() < 1e-12);
    for r in &rows[1..] {
        if !r[4].is_empty() {
            assert!(r[3].parse::<f64>().unwrap() <= r[4].parse::<f64>().unwrap());
        } else {
            assert_ne!(r[0], "624");
        }
    }
}

#[test]
fn bench_rejects_out_of_range_k() {
    assert_eq!(wefpe(&["bench", "--k-list", "625"]).status.code(), Some(2));
}

#[test]
fn similarity_and_pca_csvs() {
    let dir = TempDir::new().unwrap();
    let sim = dir.path().join("s.csv");
    let pca = dir.path().join("p.csv");
    assert!(wefpe(&["similarity", "-o", path_str(&sim)])
        .status
        .success());
    let rows = csv_rows(&sim);
    assert_eq!(rows.len(), 196);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.len(), 196);
        assert_eq!(r[i].parse::<f64>().unwrap(), 1.0);
    }
    assert!(wefpe(&["pca", "-o", path_str(&pca)]).status.success());
    let first = fs::read(&pca).unwrap();
    let rows = csv_rows(&pca);
    assert_eq!(rows[0], ["i", "j", "pc1", "pc2"]);
    assert_eq!(rows.len() - 1, 196);
    assert!(wefpe(&["pca", "-o", path_str(&pca)]).status.success());
    assert_eq!(fs::read(&pca).unwrap(), first);
}

#[test]
fn hybrid_endpoints_and_class_row() {
    let dir = TempDir::new().unwrap();
    let wef = dir.path().join("w.wef");
    let learned = dir.path().join("l.wef");
    let out = dir.path().join("h.wef");
    let small = ["--height", "3", "--width", "4", "--dim", "8"];
    let mut args = vec!["gen"];
    args.extend(small);
    args.extend(["--seed", "1", "-o", path_str(&wef)]);
    assert!(wefpe(&args).status.success());
    let mut args = vec!["gen"];
    args.extend(small);
    args.extend(["--seed", "2", "--beta-pos", "3", "-o", path_str(&learned)]);
    assert!(wefpe(&args).status.success());
    let (_, cols, w) = read_grid(&wef);
    let (_, _, l) = read_grid(&learned);

    let run = |lambda: &str| {
        let o = wefpe(&[
            "hybrid",
            "--wef",
            path_str(&wef),
            "--learned",
            path_str(&learned),
            "--lambda-raw",
            lambda,
            "-o",
            path_str(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        read_grid(&out).2
    };
    let mid = run("0");
    for k in cols..w.len() {
        assert_eq!(mid[k], (w[k] + l[k]) / 2.0);
    }
    let sat = run("20");
    let gate = (-20.0f64).exp();
    for k in cols..w.len() {
        assert!((sat[k] - w[k]).abs() <= gate * (w[k] - l[k]).abs() + 1e-15);
    }
    let low = run("-20");
    for k in cols..w.len() {
        assert!((low[k] - l[k]).abs() <= gate * (w[k] - l[k]).abs() + 1e-15);
    }
    for grid in [&mid, &sat, &low] {
        let bits = |s: &[f64]| s.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&grid[..cols]), bits(&l[..cols]));
    }
}

#[test]
fn hybrid_shape_mismatch_exits_2() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.wef");
    let b = dir.path().join("b.wef");
    assert!(wefpe(&[
        "gen",
        "--height",
        "2",
        "--width",
        "2",
        "--dim",
        "8",
        "-o",
        path_str(&a)
    ])
    .status
    .success());
    assert!(wefpe(&[
        "gen",
        "--height",
        "2",
        "--width",
        "3",
        "--dim",
        "8",
        "-o",
        path_str(&b)
    ])
    .status
    .success());
    let out = wefpe(&[
        "hybrid",
        "--wef",
        path_str(&a),
        "--learned",
        path_str(&b),
        "-o",
        path_str(&dir.path().join("h.wef")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hybrid_rejects_corrupt_file() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.wef");
    fs::write(&a, b"not a grid").unwrap();
    let out = wefpe(&[
        "hybrid",
        "--wef",
        path_str(&a),
        "--learned",
        path_str(&a),
        "-o",
        path_str(&dir.path().join("h.wef")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}
