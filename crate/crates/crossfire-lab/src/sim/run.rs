//! Discrete-time scenario execution: route every active flow each interval,
//! apply speed-dependent handoff impairments, and accumulate per-link flow
//! counts and byte volumes into labeled samples.

use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;

use rand::Rng;

use crate::error::Result;
use crate::sim::scenario::{
    generate_flow_schedule, impairment_rng, make_vehicles, assign_bots, ScenarioConfig,
};
use crate::sim::topology::{build_topology, route_flow, NetworkTopology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Normal,
    Attack,
}

impl Label {
    pub fn is_attack(self) -> bool {
        matches!(self, Label::Attack)
    }

    pub fn from_attack(attack: bool) -> Self {
        if attack {
            Label::Attack
        } else {
            Label::Normal
        }
    }
}

/// Per-link observation within one monitoring interval.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStats {
    /// Distinct flows whose traffic reached this link during the interval.
    pub flow_count: u32,
    /// Kbit transferred over the link during the interval.
    pub aggregate_size_kbit: f64,
}

/// One monitoring-interval observation across all monitored links.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficSample {
    /// Interval start, seconds since scenario start.
    pub timestamp: f64,
    /// One entry per monitored link, in `monitored_links` order.
    pub per_link: Vec<LinkStats>,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpairmentOutcome {
    pub delay_jitter_s: f64,
    pub dropped: bool,
}

/// Samples the handoff impairment for one vehicle-interval: drop probability
/// `min(1, coefficient * speed)`; when the connection survives, a delay
/// jitter uniform in `[0, coefficient * speed * sample_interval]`.
pub fn connection_impairment(
    speed_mps: f64,
    coefficient: f64,
    sample_interval_s: f64,
    rng: &mut ChaCha8Rng,
) -> ImpairmentOutcome {
    let p = (coefficient * speed_mps).min(1.0);
    let dropped = rng.gen::<f64>() < p;
    let delay_jitter_s = if dropped {
        0.0
    } else {
        let hi = coefficient * speed_mps * sample_interval_s;
        if hi > 0.0 {
            rng.gen::<f64>() * hi
        } else {
            0.0
        }
    };
    ImpairmentOutcome {
        delay_jitter_s,
        dropped,
    }
}

struct IntervalRow {
    size: Vec<f64>,
    present: Vec<Vec<u32>>,
}

impl IntervalRow {
    fn new(width: usize) -> Self {
        IntervalRow {
            size: vec![0.0; width],
            present: vec![Vec::new(); width],
        }
    }

    fn clear(&mut self) {
        self.size.iter_mut().for_each(|v| *v = 0.0);
        self.present.iter_mut().for_each(Vec::clear);
    }

    fn finalize(&mut self, timestamp: f64, label: Label) -> TrafficSample {
        let per_link = self
            .size
            .iter()
            .zip(&mut self.present)
            .map(|(&size, ids)| {
                ids.sort_unstable();
                ids.dedup();
                LinkStats {
                    flow_count: ids.len() as u32,
                    aggregate_size_kbit: size,
                }
            })
            .collect();
        TrafficSample {
            timestamp,
            per_link,
            label,
        }
    }
}

/// Runs a full scenario and returns `duration / sample_interval` samples.
/// Deterministic for a fixed config, seed included.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<TrafficSample>> {
    let topology = build_topology(config)?;
    run_scenario_on(config, &topology)
}

/// Scenario execution against an already-built topology.
pub fn run_scenario_on(
    config: &ScenarioConfig,
    topology: &NetworkTopology,
) -> Result<Vec<TrafficSample>> {
    config.validate()?;
    let mut vehicles = make_vehicles(config);
    assign_bots(&mut vehicles, config.n_bots, config.seed)?;
    let flows = generate_flow_schedule(config, &vehicles, topology)?;

    let n_steps = config.n_steps();
    let dt = config.sample_interval_s;
    let width = topology.monitored_links.len();
    let monitored_col: HashMap<u32, usize> = topology
        .monitored_links
        .iter()
        .enumerate()
        .map(|(col, &lid)| (lid, col))
        .collect();

    // Paths only depend on (attachment RSU, destination).
    let mut route_cache: HashMap<(usize, u32), Vec<usize>> = HashMap::new();

    let mut cur = IntervalRow::new(width);
    let mut next = IntervalRow::new(width);
    let mut samples = Vec::with_capacity(n_steps);

    for step in 0..n_steps {
        let t0 = step as f64 * dt;
        let t1 = t0 + dt;

        for flow in flows.iter().filter(|f| f.active_in(t0, t1)) {
            let vehicle = &vehicles[flow.src_vehicle as usize];
            let outcome = connection_impairment(
                vehicle.speed_mps,
                config.impairment_coefficient,
                dt,
                &mut impairment_rng(config.seed, vehicle.id, step),
            );
            if outcome.dropped {
                continue;
            }

            let rsu_idx = vehicle.attached_rsu_at(t0, config.n_rsus);
            let cols = match route_cache.entry((rsu_idx, flow.dst)) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => {
                    let path = route_flow(topology, topology.rsus[rsu_idx], flow.dst)?;
                    e.insert(
                        path.iter()
                            .filter_map(|lid| monitored_col.get(lid).copied())
                            .collect(),
                    )
                }
            };

            let mass = flow.volume_kbit(t0, t1);
            if mass <= 0.0 {
                continue;
            }
            // The whole transmission is delayed by the jitter; the share of
            // it that lands past the interval boundary is credited to the
            // next interval instead.
            let spill = if outcome.delay_jitter_s > 0.0 {
                let a = flow.start_s.max(t0);
                let b = flow.end_s.min(t1);
                let frac = (((b + outcome.delay_jitter_s) - t1) / (b - a)).clamp(0.0, 1.0);
                mass * frac
            } else {
                0.0
            };
            let kept = mass - spill;

            for &col in cols.iter() {
                if kept > 0.0 {
                    cur.size[col] += kept;
                    cur.present[col].push(flow.id);
                }
                if spill > 0.0 && step + 1 < n_steps {
                    next.size[col] += spill;
                    next.present[col].push(flow.id);
                }
            }
        }

        let label = match config.attack_window {
            Some((w0, w1)) if t0 < w1 && t1 > w0 => Label::Attack,
            _ => Label::Normal,
        };
        samples.push(cur.finalize(t0, label));
        std::mem::swap(&mut cur, &mut next);
        next.clear();
    }

    Ok(samples)
}

/// Event-driven monitoring: instead of shipping every periodic measurement
/// to the controller, keep only the intervals in which some monitored link
/// crossed `utilization_threshold` of its capacity. The complement of the
/// periodic mode; labels and per-link features are untouched.
pub fn congestion_triggered_samples(
    topology: &NetworkTopology,
    samples: &[TrafficSample],
    sample_interval_s: f64,
    utilization_threshold: f64,
) -> Vec<TrafficSample> {
    let capacity_kbit: Vec<f64> = topology
        .monitored_links
        .iter()
        .map(|&lid| topology.link(lid).capacity_kbps * sample_interval_s)
        .collect();
    samples
        .iter()
        .filter(|s| {
            s.per_link
                .iter()
                .zip(&capacity_kbit)
                .any(|(l, &cap)| l.aggregate_size_kbit >= utilization_threshold * cap)
        })
        .cloned()
        .collect()
}
