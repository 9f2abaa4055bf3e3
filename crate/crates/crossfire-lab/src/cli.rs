//! Command-line pipeline: simulate, train, detect, sweep, report.
//!
//! Exit codes: 0 success, 2 config/input error, 3 data/model incompatibility,
//! 4 runtime failure.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::detect::{detect_stream, windows, Arch};
use crate::error::{Error, Result};
use crate::eval::{run_sweep, MetricsReport};
use crate::fmt::config::{
    parse_override, parse_sections, scenario_from_doc, scenario_to_text, sweep_from_doc,
    sweep_to_text, train_from_doc, train_to_text, ConfigDoc,
};
use crate::fmt::{atomic_write, dataset, model_file, tables};
use crate::nn::train::train;
use crate::sim::{run_scenario, Label};

#[derive(Parser, Debug)]
#[command(
    name = "crossfire-lab",
    version,
    about = "Simulate link-flooding attacks on an SDN-monitored ITS network and detect them with ANN/CNN/LSTM detectors"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write the labeled dataset CSV plus its sidecar.
    Simulate {
        /// Scenario config file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Repeatable key=value override (scenario keys).
        #[arg(long = "override", value_name = "K=V")]
        overrides: Vec<String>,
        /// Output dataset path.
        #[arg(long)]
        out: PathBuf,
        /// Shorthand for --override seed=N.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a detector on a dataset CSV; writes the model file and a
    /// training-history CSV next to it.
    Train {
        #[arg(long, value_parser = Arch::parse)]
        arch: Arch,
        /// Dataset CSV produced by `simulate`.
        dataset: PathBuf,
        /// Train config file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "override", value_name = "K=V")]
        overrides: Vec<String>,
        /// Output model path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Classify a dataset stream with a trained model and the α rule.
    Detect {
        #[arg(long)]
        model: PathBuf,
        dataset: PathBuf,
        /// Consecutive attack verdicts required to raise the alarm.
        #[arg(long, default_value_t = 6)]
        alpha: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment sweep; writes the result table and per-point
    /// artifacts under the output directory.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "K=V")]
        overrides: Vec<String>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Parallel points.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Aggregate a sweep result table into per-metric figure tables.
    Report {
        /// results.csv from `sweep`.
        results: PathBuf,
        /// Output directory for the per-metric tables.
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) | Error::Parse { .. } | Error::Dataset(_) | Error::Io(_) => 2,
        Error::Incompatible(_) | Error::ShapeMismatch { .. } => 3,
        Error::NoRoute { .. } => 4,
    }
}

pub fn run() -> Result<()> {
    dispatch(Cli::parse())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            overrides,
            out,
            seed,
        } => cmd_simulate(config.as_deref(), &overrides, &out, seed),
        Command::Train {
            arch,
            dataset,
            config,
            overrides,
            out,
            seed,
        } => cmd_train(arch, &dataset, config.as_deref(), &overrides, &out, seed),
        Command::Detect {
            model,
            dataset,
            alpha,
            out,
        } => cmd_detect(&model, &dataset, alpha, &out),
        Command::Sweep {
            config,
            overrides,
            out,
            jobs,
        } => cmd_sweep(&config, &overrides, &out, jobs),
        Command::Report { results, out } => cmd_report(&results, &out),
    }
}

fn read_input(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))
}

fn load_doc(path: Option<&Path>) -> Result<ConfigDoc> {
    match path {
        Some(p) => parse_sections(&read_input(p)?),
        None => Ok(ConfigDoc::default()),
    }
}

fn collect_overrides(raw: &[String], seed: Option<u64>) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for r in raw {
        out.push(parse_override(r)?);
    }
    if let Some(s) = seed {
        out.push(("seed".to_string(), s.to_string()));
    }
    Ok(out)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta");
    out.with_file_name(name)
}

fn cmd_simulate(
    config: Option<&Path>,
    overrides: &[String],
    out: &Path,
    seed: Option<u64>,
) -> Result<()> {
    let doc = load_doc(config)?;
    let config = scenario_from_doc(&doc, &collect_overrides(overrides, seed)?)?;
    let samples = run_scenario(&config)?;
    dataset::write_csv(out, &samples)?;
    atomic_write(&sidecar_path(out), &scenario_to_text(&config))?;
    println!(
        "wrote {} samples across {} links to {}",
        samples.len(),
        samples[0].per_link.len(),
        out.display()
    );
    Ok(())
}

fn cmd_train(
    arch: Arch,
    dataset_path: &Path,
    config: Option<&Path>,
    overrides: &[String],
    out: &Path,
    seed: Option<u64>,
) -> Result<()> {
    let doc = load_doc(config)?;
    let settings = train_from_doc(&doc, &collect_overrides(overrides, seed)?)?;
    let samples = dataset::parse_csv(&read_input(dataset_path)?)?;

    let stride = settings
        .stride
        .unwrap_or_else(|| crate::eval::default_train_stride(arch));
    let all_windows = windows(&samples, arch.window_len(), stride);
    if all_windows.is_empty() {
        return Err(Error::Dataset(format!(
            "dataset has {} samples, fewer than one {arch} window",
            samples.len()
        )));
    }
    let positives = all_windows.iter().filter(|w| w.label).count();
    if positives == 0 || positives == all_windows.len() {
        return Err(Error::Dataset(
            "dataset has a single class; training needs both attack and normal windows".into(),
        ));
    }

    let stats = crate::detect::FeatureStats::fit(&samples)?;
    let mut model = crate::detect::build_detector(arch, samples[0].per_link.len(), settings.nn.seed)?;
    model.stats = stats;
    model.threshold = settings.threshold;

    let train_set = crate::detect::featurize_all(&samples, &all_windows, arch, &model.stats)?;
    let report = train(&mut model, &train_set, &settings.nn)?;

    model_file::save_model(&model, out)?;
    let mut history_name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    history_name.push(".history.csv");
    let history_path = out.with_file_name(history_name);
    atomic_write(&history_path, &tables::history_to_csv(&report.history))?;

    let mut meta = String::new();
    let _ = writeln!(meta, "# arch = {arch}");
    let _ = writeln!(meta, "# dataset = {}", dataset_path.display());
    let _ = writeln!(meta, "# best_epoch = {}", report.best_epoch);
    meta.push_str(&train_to_text(&settings));
    atomic_write(&sidecar_path(out), &meta)?;

    println!(
        "trained {arch} on {} windows for {} epochs (best epoch {}); model at {}",
        train_set.len(),
        report.history.len(),
        report.best_epoch,
        out.display()
    );
    Ok(())
}

fn cmd_detect(model_path: &Path, dataset_path: &Path, alpha: usize, out: &Path) -> Result<()> {
    let model = model_file::model_from_str(&read_input(model_path)?)?;
    let samples = dataset::parse_csv(&read_input(dataset_path)?)?;
    let data_links = samples[0].per_link.len();
    if data_links != model.n_links {
        return Err(Error::Incompatible(format!(
            "model monitors {} links, dataset carries {data_links}",
            model.n_links
        )));
    }

    let run = detect_stream(&model, &samples, alpha)?;
    if run.insufficient_input {
        eprintln!(
            "warning: stream of {} samples is shorter than one {} window; no output rows",
            samples.len(),
            model.arch
        );
    }
    atomic_write(out, &tables::detection_to_csv(&run.records))?;

    // Summary block: per-window metrics before the α rule, plus alarms.
    let truth = windows(&samples, model.arch.window_len(), 1);
    let verdicts: Vec<_> = run.records.iter().map(|r| r.verdict).collect();
    let labels: Vec<Label> = truth.iter().map(|w| Label::from_attack(w.label)).collect();
    let metrics = MetricsReport::from_predictions(&verdicts, &labels)?;
    let alarms = run.alarm_times();

    let mut summary = String::new();
    let _ = writeln!(summary, "windows = {}", verdicts.len());
    let _ = writeln!(summary, "alpha = {alpha}");
    let _ = writeln!(summary, "accuracy = {}", crate::eval::metric_cell(metrics.accuracy));
    let _ = writeln!(summary, "precision = {}", crate::eval::metric_cell(metrics.precision));
    let _ = writeln!(summary, "recall = {}", crate::eval::metric_cell(metrics.recall));
    let _ = writeln!(summary, "f1 = {}", crate::eval::metric_cell(metrics.f1));
    let c = metrics.counts;
    let _ = writeln!(
        summary,
        "tp = {} fp = {} tn = {} fn = {}",
        c.true_positive, c.false_positive, c.true_negative, c.false_negative
    );
    let _ = writeln!(summary, "alarms = {}", alarms.len());
    let _ = writeln!(
        summary,
        "first_alarm_t = {}",
        alarms
            .first()
            .map(|t| format!("{t:.3}"))
            .unwrap_or_else(|| "none".into())
    );
    print!("{summary}");
    let meta = format!(
        "# model = {}\n# dataset = {}\n{summary}",
        model_path.display(),
        dataset_path.display()
    );
    atomic_write(&sidecar_path(out), &meta)?;
    Ok(())
}

fn cmd_sweep(config: &Path, overrides: &[String], out: &Path, jobs: Option<usize>) -> Result<()> {
    let doc = parse_sections(&read_input(config)?)?;
    let mut spec = sweep_from_doc(&doc, &collect_overrides(overrides, None)?)?;
    if let Some(j) = jobs {
        spec.jobs = j.max(1);
    }
    std::fs::create_dir_all(out)?;
    spec.artifact_dir = Some(out.to_path_buf());

    let rows = run_sweep(&spec)?;
    atomic_write(&out.join("results.csv"), &tables::results_to_csv(&rows))?;
    atomic_write(&out.join("sweep.meta"), &sweep_to_text(&spec))?;

    let failed: Vec<&crate::eval::SweepRow> = rows.iter().filter(|r| r.error.is_some()).collect();
    println!(
        "sweep complete: {} rows ({} failed) at {}",
        rows.len(),
        failed.len(),
        out.join("results.csv").display()
    );
    for row in failed {
        eprintln!(
            "point failed: {}={} {} rep{}: {}",
            row.variable.name(),
            row.value,
            row.arch,
            row.rep,
            row.error.as_deref().unwrap_or("unknown")
        );
    }
    Ok(())
}

fn cmd_report(results: &Path, out: &Path) -> Result<()> {
    let rows = tables::results_from_csv(&read_input(results)?)?;
    if rows.is_empty() {
        return Err(Error::Dataset("result table has no rows".into()));
    }
    std::fs::create_dir_all(out)?;

    let mut archs: Vec<String> = Vec::new();
    let mut values: Vec<String> = Vec::new();
    for r in &rows {
        if !archs.contains(&r.arch) {
            archs.push(r.arch.clone());
        }
        if !values.contains(&r.value) {
            values.push(r.value.clone());
        }
    }

    // One figure-analog table per metric: rows are sweep values, columns are
    // architectures, cells are means over repetitions.
    type MetricGetter = fn(&tables::ResultRow) -> Option<f64>;
    let metrics: [(&str, MetricGetter); 6] = [
        ("accuracy", |r| r.accuracy),
        ("precision", |r| r.precision),
        ("recall", |r| r.recall),
        ("f1", |r| r.f1),
        ("latency_s", |r| r.latency_s),
        ("train_s", |r| r.train_s),
    ];
    for (name, get) in metrics {
        let mut table = String::from("value");
        for a in &archs {
            let _ = write!(table, ",{a}");
        }
        table.push('\n');
        for v in &values {
            let _ = write!(table, "{v}");
            for a in &archs {
                let cells: Vec<f64> = rows
                    .iter()
                    .filter(|r| &r.value == v && &r.arch == a)
                    .filter_map(get)
                    .collect();
                if cells.is_empty() {
                    table.push_str(",NA");
                } else {
                    let mean = cells.iter().sum::<f64>() / cells.len() as f64;
                    let _ = write!(table, ",{mean:.4}");
                }
            }
            table.push('\n');
        }
        atomic_write(&out.join(format!("{name}.csv")), &table)?;
    }

    // Console digest: mean accuracy per (value, arch).
    let mut digest: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in &rows {
        if let Some(acc) = r.accuracy {
            digest
                .entry((r.value.clone(), r.arch.clone()))
                .or_default()
                .push(acc);
        }
    }
    println!("mean accuracy over repetitions:");
    for ((value, arch), cells) in digest {
        let mean = cells.iter().sum::<f64>() / cells.len() as f64;
        println!("  {value} {arch}: {mean:.4}");
    }
    println!("figure tables written under {}", out.display());
    Ok(())
}
