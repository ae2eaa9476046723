use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ionsim_cli::config::ExperimentConfig;
use ionsim_cli::dataset::CsvDataset;
use proptest::prelude::*;
use tempfile::TempDir;

fn ionsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ionsim")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_dataset(path: &Path) -> CsvDataset {
    CsvDataset::parse(&fs::read_to_string(path).unwrap()).unwrap()
}

/// `parameter -> (value, stderr)` from a fit table.
fn fit_table(path: &Path) -> Vec<(String, f64, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

const PURCELL: &str = "kind = purcell\nseed = 1\n\n[cavity]\nwavelength = 1532\nquality_factor = 5e4\nmode_volume = 0.09\n\n[ion]\nintensity_ratio = 0.45\n";

#[test]
fn purcell_run_is_one_row_and_repeatable() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "purcell.cfg", PURCELL);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(code(&ionsim(&["run", s(&cfg), s(&a)])), 0);
    assert_eq!(code(&ionsim(&["run", s(&cfg), s(&b)])), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let ds = read_dataset(&a);
    assert_eq!(ds.rows.len(), 1);
    let fp = ds.rows[0][ds.column_index("purcell_factor").unwrap()];
    assert!((fp - 209.2).abs() < 0.5, "{fp}");
    assert!(ds.meta_value("seed").is_some() && ds.meta_value("config_hash").is_some());
}

#[test]
fn hbt_without_dark_rate_names_the_key() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "hbt.cfg", "kind = hbt\n[detector]\nefficiency = 0.1\n");
    let out = ionsim(&["run", s(&cfg), s(&dir.path().join("o.csv"))]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("detector.dark_rate"), "{}", stderr(&out));
}

#[test]
fn syntax_error_reports_position() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.cfg", "kind = purcell\n[cavity\n");
    let out = ionsim(&["run", s(&cfg), s(&dir.path().join("o.csv"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("2:8"), "{}", stderr(&out));

    let out = ionsim(&["run", s(&cfg), s(&dir.path().join("o.csv")), "nodots"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_config_file_is_io_error() {
    let dir = TempDir::new().unwrap();
    let out = ionsim(&["run", s(&dir.path().join("none.cfg")), s(&dir.path().join("o.csv"))]);
    assert_eq!(code(&out), 1);
}

#[test]
fn last_override_wins() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "p.cfg", PURCELL);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    ionsim(&["run", s(&cfg), s(&a), "ion.intensity_ratio=0.9", "ion.intensity_ratio=0.45"]);
    ionsim(&["run", s(&cfg), s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn resource_guard_exit_code() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "d.cfg", "kind = pl-decay\n[pulses]\ncount = 3e9\n");
    assert_eq!(code(&ionsim(&["run", s(&cfg), s(&dir.path().join("o.csv"))])), 4);
}

#[test]
fn decay_fit_round_trip() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "decay.cfg",
        "kind = pl-decay\nseed = 33\n[ion]\nbare_lifetime = 133.8e-6\npurcell_factor = 0\n\
         [pulses]\nperiod = 600e-6\ncount = 1000000\nwindow = 500e-6\nblanking = 0\n",
    );
    let data = dir.path().join("decay.csv");
    assert_eq!(code(&ionsim(&["run", s(&cfg), s(&data)])), 0);
    let fit = dir.path().join("fit.csv");
    let out = ionsim(&["fit", s(&data), "exponential_decay", s(&fit)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = fit_table(&fit);
    let (_, tau, err) = table.iter().find(|p| p.0 == "lifetime").unwrap();
    assert!((tau - 133.8e-6).abs() < 3.0 * err, "{tau} ± {err}");

    let curve = read_dataset(&dir.path().join("fit_curve.csv"));
    assert_eq!(curve.columns[2], "fit");
    assert_eq!(curve.rows.len(), 100);
}

#[test]
fn stark_shift_fit_recovers_slope() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "stark.cfg", "kind = stark-scan\nseed = 2\n[ion]\ndetuning = 500e6\n");
    let data = dir.path().join("shift.csv");
    assert_eq!(code(&ionsim(&["run", s(&cfg), s(&data)])), 0);
    let fit = dir.path().join("slope.csv");
    assert_eq!(code(&ionsim(&["fit", s(&data), "linear_model", s(&fit)])), 0);
    let table = fit_table(&fit);
    let slope = table.iter().find(|p| p.0 == "slope").unwrap().1;
    assert!((slope / 182.9 - 1.0).abs() < 0.02, "{slope}");
}

#[test]
fn fit_input_errors() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.csv", "");
    let out = ionsim(&["fit", s(&empty), "linear_model", s(&dir.path().join("o.csv"))]);
    assert_eq!(code(&out), 2);

    let data = write(&dir, "d.csv", "x,y\n1,2\n2,4\n3,6\n");
    let out = ionsim(&["fit", s(&data), "cubic", s(&dir.path().join("o.csv"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("exponential_decay"), "{}", stderr(&out));
}

#[test]
fn non_convergence_still_writes_result() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "flat.csv", "x,y\n1,2\n1,3\n1,4\n1,5\n");
    let fit = dir.path().join("o.csv");
    let out = ionsim(&["fit", s(&data), "linear_model", s(&fit)]);
    assert_eq!(code(&out), 5, "{}", stderr(&out));
    let text = fs::read_to_string(&fit).unwrap();
    assert!(text.contains("# converged = false"), "{text}");
    assert!(dir.path().join("o_curve.csv").exists());
}

#[test]
fn reproduce_rejects_unknown_figure() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&ionsim(&["reproduce", "fig9", s(dir.path())])), 2);
}

#[test]
fn fig2c_marks_band_edges() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&ionsim(&["reproduce", "fig2c", s(dir.path())])), 0);
    let ds = read_dataset(&dir.path().join("fig2c_ion_count.csv"));
    for col in ["n100_negative (Hz)", "n1_negative (Hz)", "n100_positive (Hz)", "n1_positive (Hz)"] {
        assert!(ds.columns.iter().any(|c| c == col), "{col}");
    }
    let flags = ds.column(2);
    assert!(flags.iter().any(|&f| f == 1.0) && flags.iter().any(|&f| f == 0.0));
}

#[test]
fn fig5_and_figs3_headlines() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&ionsim(&["reproduce", "fig5", s(dir.path())])), 0);
    let fig5 = read_dataset(&dir.path().join("fig5_summary.csv"));
    let col = |name: &str| fig5.rows[0][fig5.column_index(name).unwrap()];
    let (hi, hi_err) = (col("high_field_zero_power_width"), col("high_field_zero_power_width_sigma"));
    let (zero, zero_err) = (col("zero_field_zero_power_width"), col("zero_field_zero_power_width_sigma"));
    assert!((hi - 122e3).abs() < 3.0 * hi_err, "{hi} ± {hi_err}");
    assert!((zero - 3.02e6).abs() < 3.0 * zero_err, "{zero} ± {zero_err}");

    assert_eq!(code(&ionsim(&["reproduce", "figS3", s(dir.path())])), 0);
    let s3 = read_dataset(&dir.path().join("figS3_summary.csv"));
    let t_m = s3.rows[0][s3.column_index("memory_time").unwrap()];
    assert!((t_m - 89.7e-6).abs() < 1e-6, "{t_m}");
}

#[test]
fn replay_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "echo.cfg", "kind = echo\nseed = 12\n");
    let data = dir.path().join("echo.csv");
    assert_eq!(code(&ionsim(&["run", s(&cfg), s(&data), "noise.level=0.1"])), 0);
    let out = ionsim(&["replay", s(&data)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    assert_eq!(code(&ionsim(&["reproduce", "figS3", s(dir.path())])), 0);
    let out = ionsim(&["replay", s(&dir.path().join("figS3_summary.csv"))]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let tampered = fs::read_to_string(&data).unwrap().replace("seed = 12", "seed = 13");
    let bad = write(&dir, "bad.csv", &tampered);
    assert_eq!(code(&ionsim(&["replay", s(&bad)])), 3);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "hbt.cfg", "kind = hbt\nseed = 3\n[pulses]\ncount = 200000\n[detector]\ndark_rate = 50\n");
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let path = dir.path().join(format!("t{threads}.csv"));
        let out = Command::new(env!("CARGO_BIN_EXE_ionsim"))
            .env("IONSIM_THREADS", threads)
            .args(["run", s(&cfg), s(&path)])
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        outputs.push(fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn keys_listing_documents_units() {
    let out = ionsim(&["keys"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("detector.dark_rate") && text.contains("[Hz]"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(seed in any::<u64>(), rate in 0.0f64..1e6, q in 1.0f64..1e9, bins in 1u64..10_000) {
        let text = format!(
            "kind = hbt\nseed = {seed}\n[detector]\ndark_rate = {rate:e}\n[cavity]\nquality_factor = {q}\n[hbt]\nmax_separation = {bins}\n"
        );
        let cfg = ExperimentConfig::parse(&text, &[]).unwrap();
        let again = ExperimentConfig::parse(&cfg.canonical(), &[]).unwrap();
        prop_assert_eq!(&cfg, &again);
        prop_assert_eq!(cfg.canonical(), again.canonical());
    }
}
