use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn sparsedict(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsedict"))
        .args(args)
        .current_dir(dir)
        .env_remove("SPARSEDICT_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_training(dir: &Path) {
    let mut text = String::new();
    for r in 0..6 {
        let row: Vec<String> = (0..20).map(|c| format!("{}", ((r * 20 + c) as f64 * 0.7).sin())).collect();
        text += &row.join(",");
        text.push('\n');
    }
    std::fs::write(dir.join("y.csv"), text).unwrap();
}

fn write_image(dir: &Path) {
    let (h, w) = (24usize, 24usize);
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            bytes.push((60 + 5 * x + 2 * y) as u8);
        }
    }
    std::fs::write(dir.join("img.pgm"), bytes).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn strip_wall_time(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("wall_time_ms");
            map.values_mut().for_each(strip_wall_time);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_wall_time),
        _ => {}
    }
}

#[test]
fn learn_writes_outputs_and_converges() {
    let dir = TempDir::new().unwrap();
    write_training(dir.path());
    let o = sparsedict(&["learn", "--input", "y.csv", "--case", "1", "--beta", "4", "--out", "run"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = std::fs::read_to_string(dir.path().join("run/A.csv")).unwrap();
    assert_eq!(a.lines().count(), 6);
    assert_eq!(a.lines().next().unwrap().split(',').count(), 6);
    let x = std::fs::read_to_string(dir.path().join("run/X.csv")).unwrap();
    assert_eq!(x.lines().next().unwrap().split(',').count(), 20);
    let trace = read_json(&dir.path().join("run/trace.json"));
    assert_eq!(trace["trace"]["stop_reason"], "converged");
}

#[test]
fn every_case_runs() {
    let dir = TempDir::new().unwrap();
    write_training(dir.path());
    for args in [
        vec!["--case", "2", "--betas", "1,1,1,1"],
        vec!["--case", "3", "--beta", "2"],
        vec!["--case", "4", "--theta", "2"],
    ] {
        let mut full = vec!["learn", "--input", "y.csv", "--atoms", "4", "--out", "o"];
        full.extend(args);
        let o = sparsedict(&full, dir.path());
        assert!(matches!(o.status.code(), Some(0 | 2)), "{full:?}: {}", stderr(&o));
    }
}

#[test]
fn iteration_cap_exits_two() {
    let dir = TempDir::new().unwrap();
    write_training(dir.path());
    let o = sparsedict(
        &["learn", "--input", "y.csv", "--case", "4", "--theta", "2", "--max-iters", "2", "--out", "o"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn ragged_csv_names_line() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "1,2,3\n4,5,6\n7,8\n").unwrap();
    let o = sparsedict(&["learn", "--input", "bad.csv", "--case", "1", "--beta", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    write_training(dir.path());
    for args in [
        vec!["learn", "--input", "y.csv", "--case", "5", "--beta", "1"],
        vec!["learn", "--input", "y.csv", "--case", "1"],
        vec!["learn", "--input", "y.csv", "--case", "1", "--beta", "-1"],
        vec!["frobnicate"],
    ] {
        let o = sparsedict(&args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
    let help = sparsedict(&["--help"], dir.path());
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = TempDir::new().unwrap();
    write_training(dir.path());
    let o = Command::new(env!("CARGO_BIN_EXE_sparsedict"))
        .args(["learn", "--input", "y.csv", "--case", "1", "--beta", "4"])
        .current_dir(dir.path())
        .env("SPARSEDICT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("SPARSEDICT_THREADS"));
}

#[test]
fn constrained_fit_meets_budget() {
    let dir = TempDir::new().unwrap();
    write_training(dir.path());
    let o = sparsedict(
        &["constrained-fit", "--input", "y.csv", "--beta", "4", "--alpha", "5", "--out", "cf"],
        dir.path(),
    );
    assert!(matches!(o.status.code(), Some(0 | 2)), "{}", stderr(&o));
    let a = read_matrix(&dir.path().join("cf/A.csv"));
    let x = read_matrix(&dir.path().join("cf/X.csv"));
    let y = read_matrix(&dir.path().join("y.csv"));
    let r = &y - &a.dot(&x);
    let fit = 0.5 * r.iter().map(|v| v * v).sum::<f64>();
    assert!(fit <= 5.0 * (1.0 + 1e-8), "fit {fit}");
    assert!(a.iter().map(|v| v * v).sum::<f64>() <= 4.0 * (1.0 + 1e-8));
}

fn read_matrix(path: &Path) -> ndarray::Array2<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().map(|l| l.split(',').map(|f| f.parse().unwrap()).collect()).collect();
    let w = rows[0].len();
    ndarray::Array2::from_shape_vec((rows.len(), w), rows.into_iter().flatten().collect()).unwrap()
}

#[test]
fn hardness_small_graphs_pass() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("tri.txt"), "3\n1 2\n2 3\n1 3\n").unwrap();
    std::fs::write(dir.path().join("k2.txt"), "# single edge\n2\n1 2\n").unwrap();
    for g in ["tri.txt", "k2.txt"] {
        let o = sparsedict(&["hardness", g], dir.path());
        assert_eq!(o.status.code(), Some(0), "{g}: {}", stderr(&o));
        let report: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(report["claim1"]["passed"], true);
    }
}

#[test]
fn hardness_rejects_large_and_malformed_graphs() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("big.txt"), "15\n1 2\n").unwrap();
    std::fs::write(dir.path().join("loop.txt"), "3\n1 1\n").unwrap();
    let o = sparsedict(&["hardness", "big.txt"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("15"), "{}", stderr(&o));
    let o = sparsedict(&["hardness", "loop.txt"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn denoise_writes_images_and_report() {
    let dir = TempDir::new().unwrap();
    write_image(dir.path());
    let o = sparsedict(
        &["denoise", "img.pgm", "--sigma", "20", "--atoms", "64", "--iters", "2", "--trials", "2", "--out", "d"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["denoised.pgm", "noisy.pgm", "report.json"] {
        assert!(dir.path().join("d").join(f).exists(), "{f}");
    }
    let report = read_json(&dir.path().join("d/report.json"));
    assert_eq!(report["trials"], 2);
    assert_eq!(report["runs"].as_array().unwrap().len(), 2);
    assert!(report["mean_psnr_denoised"].as_f64().unwrap() > report["mean_psnr_noisy"].as_f64().unwrap());
}

#[test]
fn denoise_rejects_nonpositive_sigma() {
    let dir = TempDir::new().unwrap();
    write_image(dir.path());
    for s in ["0", "-3"] {
        let o = sparsedict(&["denoise", "img.pgm", "--sigma", s], dir.path());
        assert_eq!(o.status.code(), Some(1), "sigma {s}");
    }
}

#[test]
fn denoise_is_deterministic_apart_from_timing() {
    let dir = TempDir::new().unwrap();
    write_image(dir.path());
    let run = |out: &str, threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_sparsedict"))
            .args(["denoise", "img.pgm", "--sigma", "30", "--learner", "ksvd", "--atoms", "64"])
            .args(["--iters", "2", "--trials", "2", "--seed", "9", "--out", out])
            .current_dir(dir.path())
            .env("SPARSEDICT_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let mut v = read_json(&dir.path().join(out).join("report.json"));
        strip_wall_time(&mut v);
        (v, std::fs::read(dir.path().join(out).join("denoised.pgm")).unwrap())
    };
    let (r1, i1) = run("a", "1");
    let (r2, i2) = run("b", "3");
    assert_eq!(r1, r2);
    assert_eq!(i1, i2);
}

#[test]
fn learn_is_deterministic() {
    let dir = TempDir::new().unwrap();
    write_training(dir.path());
    for out in ["a", "b"] {
        let o = sparsedict(
            &["learn", "--input", "y.csv", "--case", "3", "--beta", "3", "--seed", "4", "--out", out],
            dir.path(),
        );
        assert!(matches!(o.status.code(), Some(0 | 2)));
    }
    for f in ["A.csv", "X.csv", "trace.json"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn bench_single_sigma_gives_one_row() {
    let dir = TempDir::new().unwrap();
    write_image(dir.path());
    let o = sparsedict(
        &["bench", "img.pgm", "--sigmas", "25", "--atoms", "64", "--iters", "1", "--out", "b"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("b/bench.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "sigma,noisy_psnr,dct,ksvd,alg2");
    let fields: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields.len(), 5);
    assert_eq!(fields[0], 25.0);
    assert!(fields.iter().all(|v| v.is_finite()));
}
