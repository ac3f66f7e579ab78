use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spectral_descent::grid::GridDomain;
use spectral_descent::oracle::{generalized_eigh, random_pair, RandomProblemSpec};

const BIN: &str = env!("CARGO_BIN_EXE_spectral-descent");

fn cli(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("SPECTRAL_DESCENT_THREADS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_matrix(path: &Path, rows: &[Vec<f64>]) {
    let text: String = rows
        .iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
            cells.join(",") + "\n"
        })
        .collect();
    fs::write(path, text).unwrap();
}

fn diag_file(dir: &Path, name: &str, d: &[f64]) -> PathBuf {
    let rows: Vec<Vec<f64>> = (0..d.len())
        .map(|i| (0..d.len()).map(|j| if i == j { d[i] } else { 0.0 }).collect())
        .collect();
    let p = dir.join(name);
    write_matrix(&p, &rows);
    p
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gd_on_diagonal_finds_smallest() {
    let dir = tempfile::tempdir().unwrap();
    let d: Vec<f64> = (1..=12).map(f64::from).collect();
    let a = diag_file(dir.path(), "diag12.csv", &d);
    let out = dir.path().join("out");
    let o = cli(&["solve", "--matrix", p(&a), "--method", "gd", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = csv_rows(&out.join("eigenpairs.csv"));
    assert_eq!(header, ["index", "lambda", "residual", "norm_law_gap"]);
    let lambda: f64 = rows[0][1].parse().unwrap();
    assert!((lambda - 1.0).abs() < 1e-8, "{lambda}");
    let (header, trace) = csv_rows(&out.join("trace_1.csv"));
    assert_eq!(header, ["k", "f", "grad_norm", "norm_b", "lambda"]);
    assert!(!trace.is_empty());
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("status = complete"));
    assert!(manifest.contains("[inputs]"));
}

#[test]
fn gd_b_deflation_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = random_pair(&RandomProblemSpec::spd_pair(8, 77)).unwrap();
    let rows = |m: &spectral_descent::linalg::Matrix| -> Vec<Vec<f64>> {
        (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
    };
    let ap = dir.path().join("a.csv");
    let bp = dir.path().join("b.csv");
    write_matrix(&ap, &rows(a.matrix()));
    write_matrix(&bp, &rows(b.sym().matrix()));
    let out = dir.path().join("out");
    let o = cli(&[
        "solve", "--matrix", p(&ap), "--b", p(&bp), "--method", "gd-b", "--count", "3", "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ev = generalized_eigh(&a, &b).unwrap().eigenvalues;
    let (_, rows) = csv_rows(&out.join("eigenpairs.csv"));
    assert_eq!(rows.len(), 3);
    for (j, r) in rows.iter().enumerate() {
        let lambda: f64 = r[1].parse().unwrap();
        assert!((lambda - ev[j]).abs() < 1e-7, "{j}: {lambda} vs {}", ev[j]);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = diag_file(dir.path(), "a.csv", &[4.0, 1.5, 3.0, 2.0, 6.0]);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = cli(&["solve", "--matrix", p(&a), "--seed", "5", "--out", p(&out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (
            fs::read(out.join("eigenpairs.csv")).unwrap(),
            fs::read(out.join("vectors.csv")).unwrap(),
        )
    };
    assert_eq!(run("one"), run("two"));
}

#[test]
fn mask_file_matches_builtin_domain() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("l.mask");
    fs::write(&mask, GridDomain::l_shape(21).unwrap().to_ascii()).unwrap();
    let run = |domain: String, name: &str| {
        let out = dir.path().join(name);
        let o = cli(&[
            "laplacian", "--domain", &domain, "--grid", "21", "--count", "2", "--out", p(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    };
    let builtin = run("l-shape".into(), "builtin");
    let file = run(format!("file:{}", p(&mask)), "file");
    for name in ["eigenvalues.csv", "eigenfunction_01.csv", "eigenfunction_02.pgm"] {
        assert_eq!(
            fs::read(builtin.join(name)).unwrap(),
            fs::read(file.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn oracle_prints_sorted_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let a = diag_file(dir.path(), "d.csv", &[3.0, 1.0, 2.0]);
    let o = cli(&["oracle", "eigh", p(&a)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let vals: Vec<f64> = String::from_utf8(o.stdout)
        .unwrap()
        .split_whitespace()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(vals.len(), 3);
    for (v, e) in vals.iter().zip([1.0, 2.0, 3.0]) {
        assert!((v - e).abs() < 1e-12);
    }
}

#[test]
fn malformed_matrix_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("bad.csv");
    fs::write(&a, "1,0,0\n0,1\n0,0,1\n").unwrap();
    let o = cli(&["solve", "--matrix", p(&a), "--out", p(&dir.path().join("o"))]);
    assert_eq!(code(&o), 66);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    fs::write(&a, "1,2\n0,1\n").unwrap();
    let o = cli(&["solve", "--matrix", p(&a), "--out", p(&dir.path().join("o"))]);
    assert_eq!(code(&o), 66, "asymmetric input");

    let o = cli(&["solve", "--matrix", p(&dir.path().join("missing.csv"))]);
    assert_eq!(code(&o), 66);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&cli(&["solve"])), 64);
    assert_eq!(code(&cli(&["laplacian", "--grid", "many"])), 64);
    assert_eq!(code(&cli(&["frobnicate"])), 64);
    let dir = tempfile::tempdir().unwrap();
    let a = diag_file(dir.path(), "a.csv", &[1.0, 2.0, 3.0]);
    let o = cli(&["solve", "--matrix", p(&a), "--method", "newton", "--count", "2"]);
    assert_eq!(code(&o), 64);
    let o = cli(&["laplacian", "--domain", "hexagon", "--grid", "11"]);
    assert_eq!(code(&o), 64);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = diag_file(dir.path(), "a.csv", &[2.0, 1.0, 3.0]);
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# settings\nseed = 3\nmax-iter = 50000\n").unwrap();
    let out = dir.path().join("out");
    let o = cli(&["--config", p(&cfg), "solve", "--matrix", p(&a), "--seed", "9", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed = 9"), "{manifest}");
    assert!(manifest.contains("max_iter = 50000"), "{manifest}");

    fs::write(&cfg, "sed = 3\n").unwrap();
    let o = cli(&["--config", p(&cfg), "solve", "--matrix", p(&a), "--out", p(&out)]);
    assert_eq!(code(&o), 64, "unknown config key");
}

#[test]
fn thread_flag_beats_environment() {
    let dir = tempfile::tempdir().unwrap();
    let a = diag_file(dir.path(), "a.csv", &[2.0, 1.0]);
    let out = dir.path().join("out");
    let run = |extra: &[&str]| {
        let mut args = extra.to_vec();
        args.extend(["solve", "--matrix", p(&a), "--out", p(&out)]);
        Command::new(BIN)
            .args(&args)
            .env("SPECTRAL_DESCENT_THREADS", "lots")
            .output()
            .unwrap()
    };
    assert_eq!(code(&run(&[])), 64);
    assert_eq!(code(&run(&["--threads", "1"])), 0);
}

#[test]
fn iteration_cap_gives_partial_status() {
    let dir = tempfile::tempdir().unwrap();
    let d: Vec<f64> = (1..=12).map(f64::from).collect();
    let a = diag_file(dir.path(), "a.csv", &d);
    let out = dir.path().join("out");
    let o = cli(&["solve", "--matrix", p(&a), "--max-iter", "3", "--out", p(&out)]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("status = partial"));
    assert!(out.join("eigenpairs.csv").exists());
}

#[test]
fn compare_writes_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = cli(&[
        "compare", "--mode", "matrix", "--pairs", "2", "--trials", "20", "--n", "6", "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = csv_rows(&out.join("summary.csv"));
    assert_eq!(header, ["rule", "hits", "max_lambda", "mean_lambda", "failures"]);
    let rules: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(rules, ["norm_based", "rayleigh"]);
    let (header, rows) = csv_rows(&out.join("pairs.csv"));
    assert_eq!(&header[..2], ["pair", "lambda_min"]);
    assert_eq!(rows.len(), 4);
    let (_, rows) = csv_rows(&out.join("trials.csv"));
    assert_eq!(rows.len(), 2 * 20 * 2);
}

#[test]
fn bench_writes_timing_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = cli(&["bench", "--grid", "21", "--count", "3", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = csv_rows(&out.join("timing.csv"));
    assert_eq!(header.len(), 4);
    assert_eq!(rows.len(), 3);
    let (header, rows) = csv_rows(&out.join("eigenvalues.csv"));
    assert_eq!(header[0], "index");
    for r in &rows {
        let flow: f64 = r[2].parse().unwrap();
        let newton: f64 = r[3].parse().unwrap();
        assert!((flow - newton).abs() < 1e-6 * flow, "{r:?}");
    }
}
