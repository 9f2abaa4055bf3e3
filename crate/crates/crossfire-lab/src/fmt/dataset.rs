//! The dataset CSV: one row per traffic sample.
//!
//! Header: `t,link0_flows,link0_size,...,link{L-1}_flows,link{L-1}_size,label`
//! with `t` in seconds at 3 decimal places and `label` in {0,1}. UTF-8, LF.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fmt::atomic_write;
use crate::sim::{Label, LinkStats, TrafficSample};

pub fn header(n_links: usize) -> String {
    let mut h = String::from("t");
    for i in 0..n_links {
        let _ = write!(h, ",link{i}_flows,link{i}_size");
    }
    h.push_str(",label");
    h
}

/// Renders samples to CSV text.
pub fn to_csv(samples: &[TrafficSample]) -> Result<String> {
    let n_links = samples
        .first()
        .ok_or_else(|| Error::Dataset("no samples to write".into()))?
        .per_link
        .len();
    let mut out = header(n_links);
    out.push('\n');
    for s in samples {
        if s.per_link.len() != n_links {
            return Err(Error::Dataset(format!(
                "sample at t={} has {} links, header says {n_links}",
                s.timestamp,
                s.per_link.len()
            )));
        }
        let _ = write!(out, "{:.3}", s.timestamp);
        for link in &s.per_link {
            let _ = write!(out, ",{},{}", link.flow_count, link.aggregate_size_kbit);
        }
        let _ = writeln!(out, ",{}", if s.label.is_attack() { 1 } else { 0 });
    }
    Ok(out)
}

pub fn write_csv(path: &Path, samples: &[TrafficSample]) -> Result<()> {
    atomic_write(path, &to_csv(samples)?)
}

/// Parses dataset CSV text. Strict on the header shape, field counts, and
/// value ranges; reports the 1-based offending line.
pub fn parse_csv(text: &str) -> Result<Vec<TrafficSample>> {
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty dataset file"))?;
    let n_links = parse_header(header_line)?;

    let mut samples = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = 2 + 2 * n_links;
        if fields.len() != expected {
            return Err(Error::parse(
                line_no,
                format!("expected {expected} fields, found {}", fields.len()),
            ));
        }
        let timestamp: f64 = parse_num(fields[0], line_no, "t")?;
        let mut per_link = Vec::with_capacity(n_links);
        for i in 0..n_links {
            let flow_count: u32 = fields[1 + 2 * i].parse().map_err(|_| {
                Error::parse(line_no, format!("link{i}_flows '{}' is not a count", fields[1 + 2 * i]))
            })?;
            let aggregate_size_kbit: f64 =
                parse_num(fields[2 + 2 * i], line_no, &format!("link{i}_size"))?;
            if aggregate_size_kbit < 0.0 {
                return Err(Error::parse(line_no, format!("link{i}_size is negative")));
            }
            if flow_count == 0 && aggregate_size_kbit != 0.0 {
                return Err(Error::parse(
                    line_no,
                    format!("link{i} has volume but zero flows"),
                ));
            }
            per_link.push(LinkStats {
                flow_count,
                aggregate_size_kbit,
            });
        }
        let label = match *fields.last().expect("field count checked") {
            "0" => Label::Normal,
            "1" => Label::Attack,
            other => {
                return Err(Error::parse(line_no, format!("label '{other}' is not 0 or 1")))
            }
        };
        samples.push(TrafficSample {
            timestamp,
            per_link,
            label,
        });
    }
    if samples.is_empty() {
        return Err(Error::parse(1, "dataset has a header but no rows"));
    }
    Ok(samples)
}

pub fn read_csv(path: &Path) -> Result<Vec<TrafficSample>> {
    parse_csv(&std::fs::read_to_string(path)?)
}

fn parse_header(line: &str) -> Result<usize> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() < 3 || !fields.len().is_multiple_of(2) {
        return Err(Error::parse(1, "header must be t,link0_flows,link0_size,...,label"));
    }
    if fields[0] != "t" || *fields.last().unwrap() != "label" {
        return Err(Error::parse(1, "header must start with 't' and end with 'label'"));
    }
    let n_links = (fields.len() - 2) / 2;
    for i in 0..n_links {
        let flows = format!("link{i}_flows");
        let size = format!("link{i}_size");
        if fields[1 + 2 * i] != flows || fields[2 + 2 * i] != size {
            return Err(Error::parse(
                1,
                format!("header columns {} and {} must be {flows},{size}", 1 + 2 * i, 2 + 2 * i),
            ));
        }
    }
    Ok(n_links)
}

fn parse_num(s: &str, line: usize, field: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::parse(line, format!("{field} '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("{field} '{s}' is not finite")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_scenario, ScenarioConfig};

    #[test]
    fn round_trips_a_simulated_dataset() {
        let config = ScenarioConfig {
            duration_s: 30.0,
            n_vehicles: 3,
            n_bots: 1,
            bot_groups: 1,
            attack_window: Some((10.0, 20.0)),
            ..ScenarioConfig::default()
        };
        let samples = run_scenario(&config).unwrap();
        let text = to_csv(&samples).unwrap();
        assert!(text.starts_with("t,link0_flows,link0_size,"));
        assert!(text.ends_with('\n'));
        assert!(!text.contains('\r'));

        let parsed = parse_csv(&text).unwrap();
        assert_eq!(parsed.len(), samples.len());
        for (a, b) in parsed.iter().zip(&samples) {
            // Sizes round-trip exactly; t is quantized to 3 decimals, which
            // is lossless at a 0.5 s interval.
            assert_eq!(a.per_link, b.per_link);
            assert_eq!(a.label, b.label);
            assert_eq!(a.timestamp, b.timestamp);
        }
    }

    #[test]
    fn rejects_malformed_inputs_with_line_numbers() {
        let cases = [
            ("", "empty"),
            ("nope", "header"),
            ("t,link0_flows,link0_size,label\n1.0,2", "fields"),
            ("t,link0_flows,link0_size,label\n1.0,x,3.0,0", "count"),
            ("t,link0_flows,link0_size,label\n1.0,2,3.0,7", "label"),
            ("t,link0_flows,link0_size,label\n1.0,0,3.0,1", "zero flows"),
            ("t,link0_flows,link0_size,label\n1.0,1,-3.0,1", "negative"),
            ("t,link0_flows,link0_size,label", "no rows"),
            ("t,link0_flows,link9_size,label\n1.0,1,3.0,0", "column names"),
        ];
        for (text, why) in cases {
            match parse_csv(text) {
                Err(Error::Parse { .. }) => {}
                other => panic!("case '{why}' should fail with a parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn accepts_a_minimal_hand_written_file() {
        let text = "t,link0_flows,link0_size,label\n0.000,2,300.5,0\n0.500,0,0,1\n";
        let samples = parse_csv(text).unwrap();
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[0].per_link[0].flow_count, 2);
        assert!(samples[1].label.is_attack());
    }
}
