//! The versioned, line-oriented model file.
//!
//! Line 1: `crossfire-model v1 <ann|cnn|lstm>`. Line 2: hyperparameters as
//! `key=value` pairs. Line 3: per-feature `min,max` normalization pairs.
//! Then one line per parameter tensor: name, shape (`25x51`), and the values
//! in row-major order. Floats print in Rust's shortest round-trip form, so a
//! save/load cycle reproduces bit-identical predictions.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::detect::arch::{build_detector_with, CnnShape, Net};
use crate::detect::{Arch, DetectorModel, FeatureStats};
use crate::error::{Error, Result};
use crate::fmt::atomic_write;

const MAGIC: &str = "crossfire-model";
const VERSION: &str = "v1";

/// Ceiling on any single parameter tensor a model file may declare. Keeps a
/// hostile header from driving the skeleton constructor into huge
/// allocations before the shape checks run.
const MAX_TENSOR_ELEMENTS: usize = 10_000_000;

fn checked_elements(dims: &[usize]) -> Result<usize> {
    let mut n: usize = 1;
    for &d in dims {
        n = n
            .checked_mul(d)
            .filter(|&n| n <= MAX_TENSOR_ELEMENTS)
            .ok_or_else(|| Error::parse(2, format!("declared tensor {dims:?} is too large")))?;
    }
    Ok(n)
}

/// Bounds every tensor the declared hyperparameters would allocate.
fn validate_declared_sizes(arch: Arch, n_links: usize, shape: &CnnShape) -> Result<()> {
    let feat = n_links
        .checked_mul(2)
        .ok_or_else(|| Error::parse(2, "n_links is too large"))?;
    match arch {
        Arch::Ann => {
            checked_elements(&[25, feat + 1])?;
        }
        Arch::Lstm => {
            checked_elements(&[128, feat])?;
        }
        Arch::Cnn => {
            checked_elements(&[shape.temporal_kernels, shape.temporal_width])?;
            if feat < shape.temporal_width || shape.window_rows < shape.spatial_rows {
                return Err(Error::parse(2, "cnn kernel extents exceed the window"));
            }
            let t_cols = feat - shape.temporal_width + 1;
            let s_rows = shape.window_rows - shape.spatial_rows + 1;
            checked_elements(&[
                shape.spatial_kernels,
                shape.temporal_kernels,
                shape.spatial_rows,
                t_cols,
            ])?;
            checked_elements(&[shape.dense_units, shape.spatial_kernels, s_rows])?;
        }
    }
    Ok(())
}

pub fn model_to_string(model: &DetectorModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION} {}", model.arch);

    let mut hp = vec![
        format!("n_links={}", model.n_links),
        format!("threshold={}", model.threshold),
    ];
    match &model.net {
        Net::Ann(_) => hp.push("hidden_units=25".into()),
        Net::Cnn(net) => {
            let s = net.shape;
            hp.push(format!("window_rows={}", s.window_rows));
            hp.push(format!("temporal_kernels={}", s.temporal_kernels));
            hp.push(format!("temporal_width={}", s.temporal_width));
            hp.push(format!("spatial_kernels={}", s.spatial_kernels));
            hp.push(format!("spatial_rows={}", s.spatial_rows));
            hp.push(format!("dense_units={}", s.dense_units));
        }
        Net::Lstm(net) => {
            hp.push(format!("window_steps={}", net.window_steps));
            hp.push("hidden_units=32".into());
            hp.push("layers=2".into());
        }
    }
    let _ = writeln!(out, "{}", hp.join(" "));

    let ranges: Vec<String> = model
        .stats
        .ranges
        .iter()
        .map(|(lo, hi)| format!("{lo},{hi}"))
        .collect();
    let _ = writeln!(out, "{}", ranges.join(" "));

    for (name, tensor) in model.param_names().iter().zip(crate::nn::train::Model::params(model)) {
        let dims: Vec<String> = tensor.shape().iter().map(|d| d.to_string()).collect();
        let _ = write!(out, "{name} {}", dims.join("x"));
        for v in tensor.values() {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

pub fn save_model(model: &DetectorModel, path: &Path) -> Result<()> {
    atomic_write(path, &model_to_string(model))
}

pub fn model_from_str(text: &str) -> Result<DetectorModel> {
    let mut lines = text.lines().enumerate();

    let (_, line1) = lines.next().ok_or_else(|| Error::parse(1, "empty model file"))?;
    let parts: Vec<&str> = line1.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != MAGIC {
        return Err(Error::parse(1, format!("expected '{MAGIC} {VERSION} <arch>'")));
    }
    if parts[1] != VERSION {
        return Err(Error::parse(
            1,
            format!("unsupported model version '{}', this build reads {VERSION}", parts[1]),
        ));
    }
    let arch = Arch::parse(parts[2]).map_err(|e| Error::parse(1, e.to_string()))?;

    let (_, line2) = lines.next().ok_or_else(|| Error::parse(2, "missing hyperparameters"))?;
    let mut hp: HashMap<&str, &str> = HashMap::new();
    for pair in line2.split_whitespace() {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::parse(2, format!("'{pair}' is not key=value")))?;
        if hp.insert(k, v).is_some() {
            return Err(Error::parse(2, format!("duplicate hyperparameter '{k}'")));
        }
    }
    let n_links: usize = hp_parse(&hp, "n_links")?;
    let threshold: f64 = hp_parse(&hp, "threshold")?;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::parse(2, format!("threshold {threshold} outside [0,1]")));
    }

    let expected_keys: &[&str] = match arch {
        Arch::Ann => &["n_links", "threshold", "hidden_units"],
        Arch::Cnn => &[
            "n_links",
            "threshold",
            "window_rows",
            "temporal_kernels",
            "temporal_width",
            "spatial_kernels",
            "spatial_rows",
            "dense_units",
        ],
        Arch::Lstm => &["n_links", "threshold", "window_steps", "hidden_units", "layers"],
    };
    for k in hp.keys() {
        if !expected_keys.contains(k) {
            return Err(Error::parse(2, format!("unknown hyperparameter '{k}' for {arch}")));
        }
    }
    for k in expected_keys {
        if !hp.contains_key(k) {
            return Err(Error::parse(2, format!("missing hyperparameter '{k}' for {arch}")));
        }
    }

    let cnn_shape = if arch == Arch::Cnn {
        CnnShape {
            window_rows: hp_parse(&hp, "window_rows")?,
            temporal_kernels: hp_parse(&hp, "temporal_kernels")?,
            temporal_width: hp_parse(&hp, "temporal_width")?,
            spatial_kernels: hp_parse(&hp, "spatial_kernels")?,
            spatial_rows: hp_parse(&hp, "spatial_rows")?,
            dense_units: hp_parse(&hp, "dense_units")?,
        }
    } else {
        if arch == Arch::Ann && hp["hidden_units"] != "25" {
            return Err(Error::parse(2, "ann hidden_units must be 25"));
        }
        if arch == Arch::Lstm {
            for (k, want) in [("hidden_units", "32"), ("layers", "2"), ("window_steps", "32")] {
                if hp[k] != want {
                    return Err(Error::parse(2, format!("lstm {k} must be {want}")));
                }
            }
        }
        CnnShape::default()
    };

    let (_, line3) = lines.next().ok_or_else(|| Error::parse(3, "missing normalization line"))?;
    let mut ranges = Vec::new();
    for pair in line3.split_whitespace() {
        let (lo, hi) = pair
            .split_once(',')
            .ok_or_else(|| Error::parse(3, format!("'{pair}' is not min,max")))?;
        let lo: f64 = num(lo, 3, "min")?;
        let hi: f64 = num(hi, 3, "max")?;
        if hi < lo {
            return Err(Error::parse(3, format!("range {lo},{hi} is inverted")));
        }
        ranges.push((lo, hi));
    }
    if ranges.len() != 1 + 2 * n_links {
        return Err(Error::parse(
            3,
            format!("{} normalization pairs, expected {}", ranges.len(), 1 + 2 * n_links),
        ));
    }

    validate_declared_sizes(arch, n_links, &cnn_shape)?;

    // Skeleton of the declared architecture; loaded tensors must match its
    // shapes exactly, which enforces the architecture invariants.
    let mut model = build_detector_with(arch, n_links, 0, cnn_shape)
        .map_err(|e| Error::parse(2, e.to_string()))?;
    model.threshold = threshold;
    model.stats = FeatureStats { ranges };

    let names = model.param_names();
    let mut params = crate::nn::train::Model::params_mut(&mut model);
    let mut loaded = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            return Err(Error::parse(line_no, "unexpected blank line"));
        }
        if loaded >= params.len() {
            return Err(Error::parse(line_no, "trailing content after the last tensor"));
        }
        let mut tokens = line.split_whitespace();
        let name = tokens.next().ok_or_else(|| Error::parse(line_no, "missing tensor name"))?;
        if name != names[loaded] {
            return Err(Error::parse(
                line_no,
                format!("tensor '{name}', expected '{}'", names[loaded]),
            ));
        }
        let dims_tok = tokens
            .next()
            .ok_or_else(|| Error::parse(line_no, "missing tensor shape"))?;
        let mut dims = Vec::new();
        for d in dims_tok.split('x') {
            dims.push(d.parse::<usize>().map_err(|_| {
                Error::parse(line_no, format!("bad dimension '{d}' in shape '{dims_tok}'"))
            })?);
        }
        if dims != params[loaded].shape() {
            return Err(Error::parse(
                line_no,
                format!(
                    "tensor '{name}' has shape {dims:?}, architecture wants {:?}",
                    params[loaded].shape()
                ),
            ));
        }
        let values = params[loaded].values_mut();
        let mut count = 0usize;
        for tok in tokens {
            if count >= values.len() {
                return Err(Error::parse(line_no, format!("too many values for '{name}'")));
            }
            values[count] = num(tok, line_no, "value")?;
            count += 1;
        }
        if count != values.len() {
            return Err(Error::parse(
                line_no,
                format!("'{name}' has {count} values, shape wants {}", values.len()),
            ));
        }
        loaded += 1;
    }
    if loaded != params.len() {
        return Err(Error::parse(
            3 + loaded,
            format!("model file ends after {loaded} tensors, expected {}", params.len()),
        ));
    }
    drop(params);
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<DetectorModel> {
    model_from_str(&std::fs::read_to_string(path)?)
}

fn hp_parse<T: std::str::FromStr>(hp: &HashMap<&str, &str>, key: &str) -> Result<T> {
    let raw = hp
        .get(key)
        .ok_or_else(|| Error::parse(2, format!("missing hyperparameter '{key}'")))?;
    raw.parse()
        .map_err(|_| Error::parse(2, format!("hyperparameter {key}='{raw}' failed to parse")))
}

fn num(s: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::parse(line, format!("{what} '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("{what} '{s}' is not finite")));
    }
    Ok(v)
}
