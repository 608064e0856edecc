//! End-to-end tests of the sdr-causal binary: every subcommand, the exit
//! code contract, and byte-level reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sdr-causal"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "command {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_code(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).to_string(),
    )
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate_pair(dir: &Path, name: &str, cause: &str, m: u32, n: u32, seed: u64) -> PathBuf {
    let out = dir.join(name);
    run_ok(&[
        "simulate",
        "--cause",
        cause,
        "--m",
        &m.to_string(),
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        path_str(&out),
    ]);
    out
}

#[test]
fn simulate_then_infer_recovers_direction() {
    let dir = tempfile::tempdir().unwrap();
    let pair = simulate_pair(dir.path(), "pair.csv", "white", 64, 65536, 7);
    let report = dir.path().join("report.json");
    let out = run_ok(&[
        "infer",
        path_str(&pair),
        "--out",
        path_str(&report),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("decision: X -> Y"), "stdout: {stdout}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["decision"], "x_to_y");
    assert!(json["rho_forward"].as_f64().unwrap() > json["rho_backward"].as_f64().unwrap());
    // Round-trip: the report JSON parses back into the library type.
    let _: sdr_causal::SdrReport = serde_json::from_value(json).unwrap();
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let truth_a = dir.path().join("truth_a.json");
    let truth_b = dir.path().join("truth_b.json");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, truth) in [(&a, &truth_a), (&b, &truth_b)] {
        run_ok(&[
            "simulate",
            "--cause",
            "ar1:0.8",
            "--m",
            "16",
            "--n",
            "4096",
            "--seed",
            "55",
            "--out",
            path_str(out),
            "--truth",
            path_str(truth),
        ]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(&truth_a).unwrap(), fs::read(&truth_b).unwrap());
}

#[test]
fn single_tap_truth_has_unit_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let pair = dir.path().join("pair.csv");
    let truth = dir.path().join("truth.json");
    run_ok(&[
        "simulate",
        "--cause",
        "ar1:0.9",
        "--m",
        "1",
        "--n",
        "2048",
        "--seed",
        "3",
        "--out",
        path_str(&pair),
        "--truth",
        path_str(&truth),
    ]);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&truth).unwrap()).unwrap();
    let rho_f = json["rho_forward_analytic"].as_f64().unwrap();
    let rho_b = json["rho_backward_analytic"].as_f64().unwrap();
    assert!((rho_f - 1.0).abs() < 1e-12, "rho_f {rho_f}");
    assert!((rho_b - 1.0).abs() < 1e-12, "rho_b {rho_b}");
}

#[test]
fn white_cause_truth_is_one_for_any_filter_length() {
    let dir = tempfile::tempdir().unwrap();
    for m in ["8", "64"] {
        let pair = dir.path().join(format!("pair{m}.csv"));
        let truth = dir.path().join(format!("truth{m}.json"));
        run_ok(&[
            "simulate",
            "--cause",
            "white",
            "--m",
            m,
            "--n",
            "2048",
            "--seed",
            "9",
            "--out",
            path_str(&pair),
            "--truth",
            path_str(&truth),
        ]);
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&truth).unwrap()).unwrap();
        let rho_f = json["rho_forward_analytic"].as_f64().unwrap();
        assert!((rho_f - 1.0).abs() < 1e-12, "m={m}: rho_f {rho_f}");
    }
}

#[test]
fn infer_identical_columns_is_a_tie() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("same.csv");
    let mut text = String::from("x,y\n");
    let mut state = 1234u64;
    for _ in 0..4096 {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
        let v = (state >> 33) as f64 / (1u64 << 31) as f64 - 0.5;
        text.push_str(&format!("{v},{v}\n"));
    }
    fs::write(&path, text).unwrap();
    let out = run_ok(&["infer", path_str(&path)]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("decision: tie"), "stdout: {stdout}");
}

#[test]
fn infer_rejects_non_numeric_cell_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "x,y\n1.0,2.0\n3.0,oops\n4.0,5.0\n").unwrap();
    let (code, stderr) = run_code(&["infer", path_str(&path)]);
    assert_eq!(code, 1, "stderr: {stderr}");
    assert!(stderr.contains("line 3"), "stderr: {stderr}");
    assert!(stderr.contains("oops"), "stderr: {stderr}");
}

#[test]
fn infer_constant_series_is_degenerate_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("const.csv");
    let mut text = String::from("x,y\n");
    for _ in 0..4096 {
        text.push_str("1.0,1.0\n");
    }
    fs::write(&path, text).unwrap();
    let (code, stderr) = run_code(&["infer", path_str(&path)]);
    assert_eq!(code, 2, "stderr: {stderr}");
}

#[test]
fn experiment_minimal_concentration_config() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("exp.conf");
    fs::write(
        &conf,
        "# minimal concentration run\nexperiment = concentration\nm_values = 4\ntrials = 10\n\
         cause = white\nbase_seed = 42\n",
    )
    .unwrap();
    let out_dir = dir.path().join("results");
    let out = run_ok(&[
        "experiment",
        "--config",
        path_str(&conf),
        "--out-dir",
        path_str(&out_dir),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("concentration m=4"), "stdout: {stdout}");

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    let med = summary["summary"][0]["median_abs_dev"].as_f64().unwrap();
    assert!(med < 1e-12, "white cause should give exact ratios, got {med}");

    let rows = fs::read_to_string(out_dir.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 11, "header + 10 rows");
    assert!(rows.starts_with("experiment,m,d,trial,seed,"));
}

#[test]
fn experiment_rerun_writes_identical_rows() {
    let dir = tempfile::tempdir().unwrap();
    let args_for = |out: &Path| {
        vec![
            "experiment".to_string(),
            "--experiment".into(),
            "identifiability".into(),
            "--m-values".into(),
            "4,8".into(),
            "--trials".into(),
            "12".into(),
            "--cause".into(),
            "ar1:0.9".into(),
            "--base-seed".into(),
            "77".into(),
            "--out-dir".into(),
            out.to_str().unwrap().into(),
        ]
    };
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let args = args_for(out);
        let argrefs: Vec<&str> = args.iter().map(String::as_str).collect();
        run_ok(&argrefs);
    }
    assert_eq!(
        fs::read(out_a.join("rows.csv")).unwrap(),
        fs::read(out_b.join("rows.csv")).unwrap()
    );
}

#[test]
fn experiment_rejects_unknown_config_key() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "experiment = concentration\nbase_seed = 1\nbogus_key = 3\n").unwrap();
    let (code, stderr) = run_code(&[
        "experiment",
        "--config",
        path_str(&conf),
        "--out-dir",
        path_str(&dir.path().join("x")),
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("bogus_key"), "stderr: {stderr}");
}

#[test]
fn experiment_rejects_zero_m_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let (code, stderr) = run_code(&[
        "experiment",
        "--experiment",
        "concentration",
        "--m-values",
        "0",
        "--trials",
        "5",
        "--cause",
        "white",
        "--base-seed",
        "1",
        "--out-dir",
        path_str(&out_dir),
    ]);
    assert_eq!(code, 1, "stderr: {stderr}");
    assert!(!out_dir.exists(), "no output directory should be created");
}

#[test]
fn experiment_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stderr) = run_code(&[
        "experiment",
        "--experiment",
        "concentration",
        "--cause",
        "white",
        "--out-dir",
        path_str(&dir.path().join("x")),
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("base_seed"), "stderr: {stderr}");
}

#[test]
fn identifiability_smoke_config_is_fast() {
    let started = std::time::Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    run_ok(&[
        "experiment",
        "--experiment",
        "identifiability",
        "--m-values",
        "4,16,64",
        "--trials",
        "50",
        "--cause",
        "ar1:0.9",
        "--base-seed",
        "5",
        "--out-dir",
        path_str(&out_dir),
    ]);
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() < 60,
        "smoke config took {:.1}s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn psd_of_constant_series_is_near_zero() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("const.csv");
    let mut text = String::from("x\n");
    for _ in 0..4096 {
        text.push_str("2.5\n");
    }
    fs::write(&input, text).unwrap();
    let out = dir.path().join("spec.csv");
    run_ok(&["psd", path_str(&input), "--out", path_str(&out)]);
    let csv = fs::read_to_string(&out).unwrap();
    let max = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(0.0f64, f64::max);
    assert!(max < 1e-12, "spectrum max {max}");
}

#[test]
fn whiten_fit_then_apply_flattens_the_fitting_set() {
    let dir = tempfile::tempdir().unwrap();
    // A small power-law family with different exponents.
    let mut inputs = Vec::new();
    for (i, cause) in ["powerlaw:0.8:0.004", "powerlaw:1.0:0.004", "powerlaw:1.2:0.004"]
        .iter()
        .enumerate()
    {
        inputs.push(simulate_pair(
            dir.path(),
            &format!("p{i}.csv"),
            cause,
            4,
            32768,
            40 + i as u64,
        ));
    }
    let whitener = dir.path().join("whitener.json");
    let mut args = vec!["whiten", "fit"];
    let input_strs: Vec<&str> = inputs.iter().map(|p| p.to_str().unwrap()).collect();
    args.extend(&input_strs);
    args.extend(["--out", path_str(&whitener)]);
    run_ok(&args);

    // Whiten the PSD of every fitting series; the average must be flat.
    let m = 1024usize;
    let mut avg = vec![0.0f64; m];
    for (i, input) in inputs.iter().enumerate() {
        let spec = dir.path().join(format!("spec{i}.csv"));
        run_ok(&["psd", path_str(input), "--out", path_str(&spec)]);
        let white = dir.path().join(format!("white{i}.csv"));
        run_ok(&[
            "whiten",
            "apply",
            "--whitener",
            path_str(&whitener),
            "--spectrum",
            path_str(&spec),
            "--out",
            path_str(&white),
        ]);
        for (k, line) in fs::read_to_string(&white).unwrap().lines().skip(1).enumerate() {
            avg[k] += line.split(',').nth(1).unwrap().parse::<f64>().unwrap();
        }
    }
    let max = avg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = avg.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(
        max / min < 1.5,
        "whitened average not flat: max/min = {}",
        max / min
    );
}

#[test]
fn whiten_apply_rejects_grid_mismatch_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate_pair(dir.path(), "p.csv", "powerlaw:1.0", 4, 16384, 3);
    let whitener = dir.path().join("w.json");
    run_ok(&[
        "whiten",
        "fit",
        path_str(&input),
        "--out",
        path_str(&whitener),
    ]);
    // Spectrum on a different grid (segment length 512 instead of 1024).
    let spec = dir.path().join("spec512.csv");
    run_ok(&[
        "psd",
        path_str(&input),
        "--segment-length",
        "512",
        "--out",
        path_str(&spec),
    ]);
    let (code, stderr) = run_code(&[
        "whiten",
        "apply",
        "--whitener",
        path_str(&whitener),
        "--spectrum",
        path_str(&spec),
        "--out",
        path_str(&dir.path().join("out.csv")),
    ]);
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("grids differ"), "stderr: {stderr}");
}

#[test]
fn decimate_halves_the_sample_count() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate_pair(dir.path(), "p.csv", "white", 4, 16384, 11);
    let out = dir.path().join("dec.csv");
    run_ok(&[
        "decimate",
        path_str(&input),
        "--factor",
        "2",
        "--out",
        path_str(&out),
    ]);
    let lines = fs::read_to_string(&out).unwrap().lines().count();
    // n = 16384, 5% trimmed at each end, halved; header adds one line.
    let expected = (16384 - 2 * 819) / 2 + 1;
    assert_eq!(lines, expected);
}

#[test]
fn decimate_factor_one_passes_through() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate_pair(dir.path(), "p.csv", "white", 4, 4096, 13);
    let out = dir.path().join("same.csv");
    run_ok(&[
        "decimate",
        path_str(&input),
        "--factor",
        "1",
        "--out",
        path_str(&out),
    ]);
    let input_col: Vec<String> = fs::read_to_string(&input)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    let output_col: Vec<String> = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .skip(1)
        .map(str::to_string)
        .collect();
    assert_eq!(input_col, output_col);
}

#[test]
fn infer_accepts_two_single_column_files() {
    let dir = tempfile::tempdir().unwrap();
    let pair = simulate_pair(dir.path(), "pair.csv", "white", 32, 32768, 17);
    // Split the pair into two single-column files.
    let text = fs::read_to_string(&pair).unwrap();
    let mut x_csv = String::from("x\n");
    let mut y_csv = String::from("y\n");
    for line in text.lines().skip(1) {
        let mut cells = line.split(',');
        x_csv.push_str(cells.next().unwrap());
        x_csv.push('\n');
        y_csv.push_str(cells.next().unwrap());
        y_csv.push('\n');
    }
    let x_path = dir.path().join("x.csv");
    let y_path = dir.path().join("y.csv");
    fs::write(&x_path, x_csv).unwrap();
    fs::write(&y_path, y_csv).unwrap();
    let two = run_ok(&["infer", path_str(&x_path), path_str(&y_path)]);
    let one = run_ok(&["infer", path_str(&pair)]);
    assert_eq!(two.stdout, one.stdout);
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = dir.path().join(format!("t{threads}"));
        let out = bin()
            .env("SDR_CAUSAL_THREADS", threads)
            .args([
                "experiment",
                "--experiment",
                "concentration",
                "--m-values",
                "4,16",
                "--trials",
                "20",
                "--cause",
                "ar1:0.9",
                "--base-seed",
                "31",
                "--out-dir",
                path_str(&out_dir),
            ])
            .output()
            .expect("binary runs");
        assert!(out.status.success());
        outputs.push(fs::read(out_dir.join("rows.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn whitened_inference_still_finds_the_direction() {
    let dir = tempfile::tempdir().unwrap();
    let pair = simulate_pair(dir.path(), "pair.csv", "powerlaw:1.0:0.01", 64, 65536, 21);
    let out = run_ok(&["infer", path_str(&pair), "--whiten", "fit"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("decision:"), "stdout: {stdout}");
}
