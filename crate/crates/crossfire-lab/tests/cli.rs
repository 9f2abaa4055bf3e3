//! End-to-end tests of the command-line binary: pipeline flows, exit codes,
//! reproducibility, and the summary-recomputation oracle.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crossfire_lab::detect::{windows, Arch};
use crossfire_lab::eval::MetricsReport;
use crossfire_lab::fmt::{dataset, tables};
use crossfire_lab::sim::Label;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crossfire-lab"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("crossfire-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary spawns");
    assert!(
        out.status.success(),
        "command failed: {}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_scenario(dir: &Path) -> PathBuf {
    let path = dir.join("scenario.cfg");
    std::fs::write(
        &path,
        "[scenario]\n\
         duration_s = 240\n\
         sample_interval_s = 0.5\n\
         n_vehicles = 5\n\
         n_bots = 2\n\
         bot_groups = 2\n\
         attack_window = 60 180\n\
         seed = 12\n",
    )
    .unwrap();
    path
}

#[test]
fn simulate_writes_header_plus_one_row_per_interval() {
    let dir = tmp_dir("simulate");
    let cfg = write_scenario(&dir);
    let out_csv = dir.join("data.csv");
    run_ok(bin()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_csv));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 480);
    assert!(dir.join("data.csv.meta").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn same_seed_override_twice_writes_identical_files() {
    let dir = tmp_dir("repro");
    let cfg = write_scenario(&dir);
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for out in [&a, &b] {
        run_ok(bin()
            .arg("simulate")
            .arg("--config")
            .arg(&cfg)
            .arg("--override")
            .arg("seed=7")
            .arg("--out")
            .arg(out));
    }
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "same seed must give byte-identical datasets"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sidecar_metadata_reproduces_the_dataset() {
    let dir = tmp_dir("sidecar");
    let cfg = write_scenario(&dir);
    let first = dir.join("first.csv");
    run_ok(bin()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&first));
    // Re-run from the sidecar alone.
    let second = dir.join("second.csv");
    run_ok(bin()
        .arg("simulate")
        .arg("--config")
        .arg(dir.join("first.csv.meta"))
        .arg("--out")
        .arg(&second));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn missing_config_file_exits_2_and_names_the_path() {
    let out = bin()
        .arg("simulate")
        .arg("--config")
        .arg("/definitely/not/here.cfg")
        .arg("--out")
        .arg("/tmp/ignored.csv")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/definitely/not/here.cfg"), "stderr: {stderr}");
}

#[test]
fn train_writes_model_and_bounded_history() {
    let dir = tmp_dir("train");
    let cfg = write_scenario(&dir);
    let data = dir.join("data.csv");
    run_ok(bin()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&data));
    let model = dir.join("ann.model");
    run_ok(bin()
        .arg("train")
        .arg("--arch")
        .arg("ann")
        .arg(&data)
        .arg("--override")
        .arg("max_epochs=6")
        .arg("--out")
        .arg(&model));
    let history = std::fs::read_to_string(dir.join("ann.model.history.csv")).unwrap();
    let rows = history.lines().count() - 1;
    assert!((1..=6).contains(&rows), "history rows {rows}");
    assert!(history.starts_with("epoch,train_loss,val_loss\n"));

    // Trained model reloads and claims the right width.
    let loaded = crossfire_lab::fmt::model_file::load_model(&model).unwrap();
    assert_eq!(loaded.n_links, 25);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn single_class_dataset_is_rejected_before_training() {
    let dir = tmp_dir("oneclass");
    let data = dir.join("flat.csv");
    let mut text = String::from("t,link0_flows,link0_size,label\n");
    for i in 0..50 {
        text.push_str(&format!("{:.3},1,10,0\n", i as f64 * 0.5));
    }
    std::fs::write(&data, text).unwrap();
    let out = bin()
        .arg("train")
        .arg("--arch")
        .arg("ann")
        .arg(&data)
        .arg("--out")
        .arg(dir.join("m.model"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("single class"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn early_stop_fires_on_constant_loss_after_patience_plus_one() {
    // A constructed dataset whose classes are indistinguishable: identical
    // features for both labels keep the validation loss flat, so training
    // stops after patience + 1 epochs.
    let dir = tmp_dir("earlystop");
    let data = dir.join("const.csv");
    let mut text = String::from("t,link0_flows,link0_size,label\n");
    for i in 0..200 {
        text.push_str(&format!("{:.3},1,10,{}\n", i as f64 * 0.5, i % 2));
    }
    std::fs::write(&data, text).unwrap();
    let model = dir.join("m.model");
    run_ok(bin()
        .arg("train")
        .arg("--arch")
        .arg("ann")
        .arg(&data)
        .arg("--override")
        .arg("patience=2")
        .arg("--override")
        .arg("max_epochs=50")
        .arg("--out")
        .arg(&model));
    let history = std::fs::read_to_string(dir.join("m.model.history.csv")).unwrap();
    let rows = history.lines().count() - 1;
    // With identical features per class the loss settles at ln 2 and stops
    // moving; allow the couple of epochs Adam needs to flatten out.
    assert!(rows < 50, "early stopping never fired: {rows} epochs");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn detect_summary_matches_recomputation_from_emitted_csv() {
    let dir = tmp_dir("detect");
    let cfg = write_scenario(&dir);
    let data = dir.join("data.csv");
    run_ok(bin()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&data));
    let model = dir.join("ann.model");
    run_ok(bin()
        .arg("train")
        .arg("--arch")
        .arg("ann")
        .arg(&data)
        .arg("--override")
        .arg("max_epochs=8")
        .arg("--out")
        .arg(&model));
    let det = dir.join("det.csv");
    let out = run_ok(bin()
        .arg("detect")
        .arg("--model")
        .arg(&model)
        .arg(&data)
        .arg("--alpha")
        .arg("3")
        .arg("--out")
        .arg(&det));
    let stdout = String::from_utf8_lossy(&out.stdout);

    // Recompute the per-window metrics from the emitted CSV and the dataset.
    let records = tables::detection_from_csv(&std::fs::read_to_string(&det).unwrap()).unwrap();
    let samples = dataset::read_csv(&data).unwrap();
    let truth = windows(&samples, Arch::Ann.window_len(), 1);
    let verdicts: Vec<_> = records.iter().map(|r| r.verdict).collect();
    let labels: Vec<Label> = truth.iter().map(|w| Label::from_attack(w.label)).collect();
    let recomputed = MetricsReport::from_predictions(&verdicts, &labels).unwrap();

    let pick = |key: &str| -> String {
        stdout
            .lines()
            .find(|l| l.starts_with(&format!("{key} = ")))
            .unwrap_or_else(|| panic!("summary missing {key}\n{stdout}"))
            .split(" = ")
            .nth(1)
            .unwrap()
            .to_string()
    };
    assert_eq!(pick("accuracy"), format!("{}", recomputed.accuracy.unwrap()));
    assert_eq!(pick("windows"), format!("{}", verdicts.len()));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn detect_with_mismatched_links_exits_3() {
    let dir = tmp_dir("mismatch");
    let cfg = write_scenario(&dir);
    let data = dir.join("data.csv");
    run_ok(bin()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&data));
    let model = dir.join("ann.model");
    run_ok(bin()
        .arg("train")
        .arg("--arch")
        .arg("ann")
        .arg(&data)
        .arg("--override")
        .arg("max_epochs=2")
        .arg("--out")
        .arg(&model));

    // A dataset with fewer monitored links.
    let narrow = dir.join("narrow.csv");
    run_ok(bin()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .arg("--override")
        .arg("n_monitored_links=10")
        .arg("--out")
        .arg(&narrow));
    let out = bin()
        .arg("detect")
        .arg("--model")
        .arg(&model)
        .arg(&narrow)
        .arg("--out")
        .arg(dir.join("d.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_emits_expected_cardinality_and_reruns_overwrite_deterministically() {
    let dir = tmp_dir("sweep");
    let spec = dir.join("sweep.cfg");
    std::fs::write(
        &spec,
        "[sweep]\n\
         variable = alpha\n\
         values = 3 4 5\n\
         archs = ann\n\
         seeds = 9\n\
         train_fraction = 0.7\n\
         \n\
         [scenario]\n\
         duration_s = 240\n\
         n_vehicles = 5\n\
         n_bots = 2\n\
         bot_groups = 2\n\
         attack_window = 60 180\n\
         \n\
         [train]\n\
         max_epochs = 4\n",
    )
    .unwrap();
    let out_dir = dir.join("results");
    run_ok(bin()
        .arg("sweep")
        .arg("--config")
        .arg(&spec)
        .arg("--out")
        .arg(&out_dir));
    let results = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 3, "3 α values x 1 arch x 1 rep");
    assert!(results.starts_with(tables::RESULT_HEADER));
    let point_dataset = out_dir
        .join("points")
        .join("alpha-shared")
        .join("ann")
        .join("rep0")
        .join("dataset.csv");
    assert!(point_dataset.exists());
    let first_dataset = std::fs::read(&point_dataset).unwrap();
    let first_model = std::fs::read(
        out_dir
            .join("points")
            .join("alpha-shared")
            .join("ann")
            .join("rep0")
            .join("model.txt"),
    )
    .unwrap();

    // Re-run: deterministic artifacts are overwritten with identical bytes.
    run_ok(bin()
        .arg("sweep")
        .arg("--config")
        .arg(&spec)
        .arg("--out")
        .arg(&out_dir));
    assert_eq!(std::fs::read(&point_dataset).unwrap(), first_dataset);
    assert_eq!(
        std::fs::read(
            out_dir
                .join("points")
                .join("alpha-shared")
                .join("ann")
                .join("rep0")
                .join("model.txt"),
        )
        .unwrap(),
        first_model
    );

    // Report aggregation over the table.
    let report_dir = dir.join("report");
    run_ok(bin()
        .arg("report")
        .arg(out_dir.join("results.csv"))
        .arg("--out")
        .arg(&report_dir));
    let acc = std::fs::read_to_string(report_dir.join("accuracy.csv")).unwrap();
    assert!(acc.starts_with("value,ann\n"));
    assert_eq!(acc.lines().count(), 1 + 3);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_isolates_failing_points() {
    let dir = tmp_dir("sweepfail");
    let spec = dir.join("sweep.cfg");
    // vehicles = 1 cannot host 2 bots; the other point succeeds.
    std::fs::write(
        &spec,
        "[sweep]\n\
         variable = vehicles\n\
         values = 1 5\n\
         archs = ann\n\
         seeds = 4\n\
         \n\
         [scenario]\n\
         duration_s = 240\n\
         n_vehicles = 5\n\
         n_bots = 2\n\
         bot_groups = 2\n\
         attack_window = 60 180\n\
         \n\
         [train]\n\
         max_epochs = 3\n",
    )
    .unwrap();
    let out_dir = dir.join("results");
    let out = run_ok(bin()
        .arg("sweep")
        .arg("--config")
        .arg(&spec)
        .arg("--out")
        .arg(&out_dir));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("point failed"), "stderr: {stderr}");
    let results = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let lines: Vec<&str> = results.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains("NA"), "failed point row: {}", lines[1]);
    assert!(!lines[2].contains("NA"), "healthy point row: {}", lines[2]);
    std::fs::remove_dir_all(&dir).ok();
}
