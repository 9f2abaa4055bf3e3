//! Line-oriented `key = value` config files with `[section]` headers and `#`
//! comments. Every run writes its fully resolved config back out as a
//! sidecar, so any output is reproducible from its metadata alone.

use std::fmt::Write as _;

use crate::detect::Arch;
use crate::error::{Error, Result};
use crate::eval::{SweepSpec, SweepValue, SweepVariable};
use crate::nn::train::TrainConfig;
use crate::sim::ScenarioConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub section: String,
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigDoc {
    pub entries: Vec<Entry>,
}

impl ConfigDoc {
    pub fn sections(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.section.as_str()) {
                out.push(&e.section);
            }
        }
        out
    }

    pub fn in_section<'a>(&'a self, section: &'a str) -> impl Iterator<Item = &'a Entry> {
        self.entries.iter().filter(move |e| e.section == section)
    }
}

/// Parses the raw section/key/value structure, reporting bad lines.
pub fn parse_sections(text: &str) -> Result<ConfigDoc> {
    let mut doc = ConfigDoc::default();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let name = inner
                .strip_suffix(']')
                .ok_or_else(|| Error::parse(line_no, "unterminated section header"))?
                .trim();
            if name.is_empty() || name.contains('[') || name.contains(']') {
                return Err(Error::parse(line_no, format!("bad section name '{name}'")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(line_no, format!("expected key = value, got '{line}'")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::parse(line_no, "empty key"));
        }
        doc.entries.push(Entry {
            section: section.clone(),
            key: key.to_string(),
            value: value.to_string(),
            line: line_no,
        });
    }
    Ok(doc)
}

/// Splits a repeatable `--override k=v` argument.
pub fn parse_override(raw: &str) -> Result<(String, String)> {
    let (k, v) = raw
        .split_once('=')
        .ok_or_else(|| Error::InvalidConfig(format!("override '{raw}' is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn bad(line: usize, key: &str, value: &str, want: &str) -> Error {
    Error::parse(line, format!("{key} = '{value}' is not {want}"))
}

fn num<T: std::str::FromStr>(line: usize, key: &str, value: &str, want: &str) -> Result<T> {
    value.parse().map_err(|_| bad(line, key, value, want))
}

fn pair(line: usize, key: &str, value: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(bad(line, key, value, "two numbers"));
    }
    Ok((
        num(line, key, parts[0], "a number")?,
        num(line, key, parts[1], "a number")?,
    ))
}

/// Applies one scenario key. Shared by file parsing and `--override`.
pub fn set_scenario_key(
    config: &mut ScenarioConfig,
    key: &str,
    value: &str,
    line: usize,
) -> Result<()> {
    match key {
        "n_vehicles" => config.n_vehicles = num(line, key, value, "a count")?,
        "n_bots" => config.n_bots = num(line, key, value, "a count")?,
        "bot_groups" => config.bot_groups = num(line, key, value, "a count")?,
        "n_monitored_links" => config.n_monitored_links = num(line, key, value, "a count")?,
        "n_rsus" => config.n_rsus = num(line, key, value, "a count")?,
        "n_switches" => config.n_switches = num(line, key, value, "a count")?,
        "n_victim_servers" => config.n_victim_servers = num(line, key, value, "a count")?,
        "n_decoy_servers" => config.n_decoy_servers = num(line, key, value, "a count")?,
        "seed" => config.seed = num(line, key, value, "an integer")?,
        "duration_s" => config.duration_s = num(line, key, value, "a number")?,
        "sample_interval_s" => config.sample_interval_s = num(line, key, value, "a number")?,
        "impairment_coefficient" => {
            config.impairment_coefficient = num(line, key, value, "a number")?
        }
        "speed_range" => config.speed_range = pair(line, key, value)?,
        "background_rate_kbps" => config.background_rate_kbps = pair(line, key, value)?,
        "attack_rate_kbps" => config.attack_rate_kbps = pair(line, key, value)?,
        "attack_window" => {
            config.attack_window = if value == "none" {
                None
            } else {
                Some(pair(line, key, value)?)
            }
        }
        other => return Err(Error::parse(line, format!("unknown scenario key '{other}'"))),
    }
    Ok(())
}

/// Builds a scenario from a parsed doc plus CLI overrides; defaults fill
/// whatever the file leaves out. Entries outside `[scenario]` (or the
/// implicit top section) are rejected.
pub fn scenario_from_doc(
    doc: &ConfigDoc,
    overrides: &[(String, String)],
) -> Result<ScenarioConfig> {
    let mut config = ScenarioConfig::default();
    for e in &doc.entries {
        if !(e.section.is_empty() || e.section == "scenario") {
            return Err(Error::parse(
                e.line,
                format!("unexpected section '{}' in a scenario config", e.section),
            ));
        }
        set_scenario_key(&mut config, &e.key, &e.value, e.line)?;
    }
    for (k, v) in overrides {
        let key = k.strip_prefix("scenario.").unwrap_or(k);
        set_scenario_key(&mut config, key, v, 0)
            .map_err(|_| Error::InvalidConfig(format!("bad override {k}={v}")))?;
    }
    config.validate()?;
    Ok(config)
}

/// Renders a fully resolved scenario, sidecar-ready.
pub fn scenario_to_text(config: &ScenarioConfig) -> String {
    let mut out = String::from("[scenario]\n");
    let _ = writeln!(out, "n_vehicles = {}", config.n_vehicles);
    let _ = writeln!(out, "n_bots = {}", config.n_bots);
    let _ = writeln!(out, "bot_groups = {}", config.bot_groups);
    let _ = writeln!(out, "speed_range = {} {}", config.speed_range.0, config.speed_range.1);
    let _ = writeln!(out, "duration_s = {}", config.duration_s);
    let _ = writeln!(out, "sample_interval_s = {}", config.sample_interval_s);
    match config.attack_window {
        Some((a, b)) => {
            let _ = writeln!(out, "attack_window = {a} {b}");
        }
        None => {
            let _ = writeln!(out, "attack_window = none");
        }
    }
    let _ = writeln!(out, "seed = {}", config.seed);
    let _ = writeln!(out, "n_monitored_links = {}", config.n_monitored_links);
    let _ = writeln!(out, "impairment_coefficient = {}", config.impairment_coefficient);
    let _ = writeln!(out, "n_rsus = {}", config.n_rsus);
    let _ = writeln!(out, "n_switches = {}", config.n_switches);
    let _ = writeln!(out, "n_victim_servers = {}", config.n_victim_servers);
    let _ = writeln!(out, "n_decoy_servers = {}", config.n_decoy_servers);
    let _ = writeln!(
        out,
        "background_rate_kbps = {} {}",
        config.background_rate_kbps.0, config.background_rate_kbps.1
    );
    let _ = writeln!(
        out,
        "attack_rate_kbps = {} {}",
        config.attack_rate_kbps.0, config.attack_rate_kbps.1
    );
    out
}

/// Training settings for the train command: the optimizer config plus the
/// windowing stride and decision threshold baked into the saved model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub nn: TrainConfig,
    pub stride: Option<usize>,
    pub threshold: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            nn: TrainConfig::default(),
            stride: None,
            threshold: 0.5,
        }
    }
}

pub fn set_train_key(settings: &mut TrainSettings, key: &str, value: &str, line: usize) -> Result<()> {
    match key {
        "max_epochs" => settings.nn.max_epochs = num(line, key, value, "a count")?,
        "batch_size" => settings.nn.batch_size = num(line, key, value, "a count")?,
        "patience" => settings.nn.patience = num(line, key, value, "a count")?,
        "validation_fraction" => {
            settings.nn.validation_fraction = num(line, key, value, "a fraction")?
        }
        "learning_rate" => settings.nn.learning_rate = num(line, key, value, "a number")?,
        "seed" => settings.nn.seed = num(line, key, value, "an integer")?,
        "stride" => {
            settings.stride = if value == "auto" {
                None
            } else {
                Some(num(line, key, value, "a count or auto")?)
            }
        }
        "threshold" => settings.threshold = num(line, key, value, "a number")?,
        other => return Err(Error::parse(line, format!("unknown train key '{other}'"))),
    }
    Ok(())
}

pub fn train_from_doc(doc: &ConfigDoc, overrides: &[(String, String)]) -> Result<TrainSettings> {
    let mut settings = TrainSettings::default();
    for e in &doc.entries {
        if !(e.section.is_empty() || e.section == "train") {
            return Err(Error::parse(
                e.line,
                format!("unexpected section '{}' in a train config", e.section),
            ));
        }
        set_train_key(&mut settings, &e.key, &e.value, e.line)?;
    }
    for (k, v) in overrides {
        let key = k.strip_prefix("train.").unwrap_or(k);
        set_train_key(&mut settings, key, v, 0)
            .map_err(|_| Error::InvalidConfig(format!("bad override {k}={v}")))?;
    }
    settings.nn.validate()?;
    if !(0.0..=1.0).contains(&settings.threshold) {
        return Err(Error::InvalidConfig(format!(
            "threshold {} outside [0,1]",
            settings.threshold
        )));
    }
    Ok(settings)
}

pub fn train_to_text(settings: &TrainSettings) -> String {
    let mut out = String::from("[train]\n");
    let _ = writeln!(out, "max_epochs = {}", settings.nn.max_epochs);
    let _ = writeln!(out, "batch_size = {}", settings.nn.batch_size);
    let _ = writeln!(out, "patience = {}", settings.nn.patience);
    let _ = writeln!(out, "validation_fraction = {}", settings.nn.validation_fraction);
    let _ = writeln!(out, "learning_rate = {}", settings.nn.learning_rate);
    let _ = writeln!(out, "seed = {}", settings.nn.seed);
    match settings.stride {
        Some(s) => {
            let _ = writeln!(out, "stride = {s}");
        }
        None => {
            let _ = writeln!(out, "stride = auto");
        }
    }
    let _ = writeln!(out, "threshold = {}", settings.threshold);
    out
}

/// Builds a sweep spec from `[sweep]` plus a `[scenario]` base and optional
/// `[train]` settings in the same file.
pub fn sweep_from_doc(doc: &ConfigDoc, overrides: &[(String, String)]) -> Result<SweepSpec> {
    let mut base = ScenarioConfig::default();
    let mut train = TrainSettings::default();
    let mut variable: Option<(SweepVariable, usize)> = None;
    let mut values_raw: Option<(String, usize)> = None;
    let mut archs: Vec<Arch> = vec![Arch::Ann, Arch::Cnn, Arch::Lstm];
    let mut seeds: Vec<u64> = vec![1, 2, 3];
    let mut alpha = 6usize;
    let mut train_fraction = 0.7f64;
    let mut jobs = 1usize;

    let apply_sweep_key = |key: &str,
                               value: &str,
                               line: usize,
                               variable: &mut Option<(SweepVariable, usize)>,
                               values_raw: &mut Option<(String, usize)>,
                               archs: &mut Vec<Arch>,
                               seeds: &mut Vec<u64>,
                               alpha: &mut usize,
                               train_fraction: &mut f64,
                               jobs: &mut usize|
     -> Result<()> {
        match key {
            "variable" => {
                *variable = Some((
                    SweepVariable::parse(value).map_err(|e| Error::parse(line, e.to_string()))?,
                    line,
                ))
            }
            "values" => *values_raw = Some((value.to_string(), line)),
            "archs" => {
                let parsed: Result<Vec<Arch>> = value
                    .split_whitespace()
                    .map(|a| Arch::parse(a).map_err(|e| Error::parse(line, e.to_string())))
                    .collect();
                *archs = parsed?;
            }
            "seeds" => {
                let parsed: Result<Vec<u64>> = value
                    .split_whitespace()
                    .map(|s| num(line, "seeds", s, "an integer"))
                    .collect();
                *seeds = parsed?;
            }
            "alpha" => *alpha = num(line, key, value, "a count")?,
            "train_fraction" => *train_fraction = num(line, key, value, "a fraction")?,
            "jobs" => *jobs = num(line, key, value, "a count")?,
            other => return Err(Error::parse(line, format!("unknown sweep key '{other}'"))),
        }
        Ok(())
    };

    for e in &doc.entries {
        match e.section.as_str() {
            "scenario" => set_scenario_key(&mut base, &e.key, &e.value, e.line)?,
            "train" => set_train_key(&mut train, &e.key, &e.value, e.line)?,
            "" | "sweep" => apply_sweep_key(
                &e.key,
                &e.value,
                e.line,
                &mut variable,
                &mut values_raw,
                &mut archs,
                &mut seeds,
                &mut alpha,
                &mut train_fraction,
                &mut jobs,
            )?,
            other => {
                return Err(Error::parse(e.line, format!("unexpected section '{other}'")))
            }
        }
    }
    for (k, v) in overrides {
        if let Some(key) = k.strip_prefix("scenario.") {
            set_scenario_key(&mut base, key, v, 0)?;
        } else if let Some(key) = k.strip_prefix("train.") {
            set_train_key(&mut train, key, v, 0)?;
        } else {
            let key = k.strip_prefix("sweep.").unwrap_or(k);
            apply_sweep_key(
                key,
                v,
                0,
                &mut variable,
                &mut values_raw,
                &mut archs,
                &mut seeds,
                &mut alpha,
                &mut train_fraction,
                &mut jobs,
            )?;
        }
    }

    let (variable, _) =
        variable.ok_or_else(|| Error::InvalidConfig("sweep needs 'variable'".into()))?;
    let (values_raw, values_line) =
        values_raw.ok_or_else(|| Error::InvalidConfig("sweep needs 'values'".into()))?;
    let values: Result<Vec<SweepValue>> = values_raw
        .split_whitespace()
        .map(|tok| parse_sweep_value(variable, tok, values_line))
        .collect();

    let spec = SweepSpec {
        variable,
        values: values?,
        base,
        archs,
        seeds,
        train: train.nn,
        train_fraction,
        alpha,
        stride: train.stride,
        jobs,
        artifact_dir: None,
    };
    spec.validate()?;
    spec.base.validate()?;
    Ok(spec)
}

fn parse_sweep_value(variable: SweepVariable, tok: &str, line: usize) -> Result<SweepValue> {
    match variable {
        SweepVariable::Vehicles => Ok(SweepValue::Count(num(line, "values", tok, "a count")?)),
        SweepVariable::Alpha => Ok(SweepValue::Alpha(num(line, "values", tok, "a count")?)),
        SweepVariable::SpeedRange => {
            let (lo, hi) = tok
                .split_once('-')
                .ok_or_else(|| bad(line, "values", tok, "a lo-hi range"))?;
            Ok(SweepValue::Range(
                num(line, "values", lo, "a number")?,
                num(line, "values", hi, "a number")?,
            ))
        }
    }
}

pub fn sweep_to_text(spec: &SweepSpec) -> String {
    let mut out = String::from("[sweep]\n");
    let _ = writeln!(out, "variable = {}", spec.variable.name());
    let values: Vec<String> = spec.values.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(out, "values = {}", values.join(" "));
    let archs: Vec<&str> = spec.archs.iter().map(|a| a.name()).collect();
    let _ = writeln!(out, "archs = {}", archs.join(" "));
    let seeds: Vec<String> = spec.seeds.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "seeds = {}", seeds.join(" "));
    let _ = writeln!(out, "alpha = {}", spec.alpha);
    let _ = writeln!(out, "train_fraction = {}", spec.train_fraction);
    let _ = writeln!(out, "jobs = {}", spec.jobs);
    out.push('\n');
    out.push_str(&scenario_to_text(&spec.base));
    out.push('\n');
    out.push_str(&train_to_text(&TrainSettings {
        nn: spec.train.clone(),
        stride: spec.stride,
        threshold: 0.5,
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_file_round_trips_through_its_sidecar() {
        let text = "\
# desk lab scenario
[scenario]
n_vehicles = 12
n_bots = 4
speed_range = 5 25
attack_window = 600 1800
duration_s = 2400
seed = 99
";
        let doc = parse_sections(text).unwrap();
        let config = scenario_from_doc(&doc, &[]).unwrap();
        assert_eq!(config.n_vehicles, 12);
        assert_eq!(config.speed_range, (5.0, 25.0));
        assert_eq!(config.attack_window, Some((600.0, 1800.0)));
        // Unspecified keys keep their defaults.
        assert_eq!(config.n_rsus, 4);

        let sidecar = scenario_to_text(&config);
        let reparsed = scenario_from_doc(&parse_sections(&sidecar).unwrap(), &[]).unwrap();
        assert_eq!(config, reparsed);
    }

    #[test]
    fn overrides_win_over_the_file() {
        let doc = parse_sections("[scenario]\nseed = 1\n").unwrap();
        let config = scenario_from_doc(
            &doc,
            &[("seed".into(), "7".into()), ("scenario.n_bots".into(), "3".into())],
        )
        .unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.n_bots, 3);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "[scenario]\nn_vehicles = ten\n";
        match scenario_from_doc(&parse_sections(text).unwrap(), &[]) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("expected line-2 parse error, got {other:?}"),
        }
        match parse_sections("[scenario\nx = 1\n") {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("expected line-1 section error, got {other:?}"),
        }
        match parse_sections("just some text\n") {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("expected key=value error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let doc = parse_sections("[scenario]\nvehicles = 10\n").unwrap();
        assert!(scenario_from_doc(&doc, &[]).is_err());
        let doc = parse_sections("[train]\nlr = 0.1\n").unwrap();
        assert!(train_from_doc(&doc, &[]).is_err());
    }

    #[test]
    fn sweep_file_parses_and_round_trips() {
        let text = "\
[sweep]
variable = speed_range
values = 0-10 10-20 20-30
archs = ann lstm
seeds = 4 5
alpha = 5
train_fraction = 0.8

[scenario]
n_vehicles = 10
duration_s = 600
attack_window = 150 450

[train]
max_epochs = 5
";
        let doc = parse_sections(text).unwrap();
        let spec = sweep_from_doc(&doc, &[]).unwrap();
        assert_eq!(spec.variable, SweepVariable::SpeedRange);
        assert_eq!(spec.values.len(), 3);
        assert_eq!(spec.values[2], SweepValue::Range(20.0, 30.0));
        assert_eq!(spec.archs, vec![Arch::Ann, Arch::Lstm]);
        assert_eq!(spec.seeds, vec![4, 5]);
        assert_eq!(spec.base.duration_s, 600.0);
        assert_eq!(spec.train.max_epochs, 5);

        let sidecar = sweep_to_text(&spec);
        let reparsed = sweep_from_doc(&parse_sections(&sidecar).unwrap(), &[]).unwrap();
        assert_eq!(spec.values, reparsed.values);
        assert_eq!(spec.base, reparsed.base);
        assert_eq!(spec.seeds, reparsed.seeds);
    }

    #[test]
    fn sweep_value_kinds_match_the_variable() {
        let text = "[sweep]\nvariable = vehicles\nvalues = 10-20\n";
        assert!(sweep_from_doc(&parse_sections(text).unwrap(), &[]).is_err());
    }
}
