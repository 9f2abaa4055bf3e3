//! Scenario configuration, vehicles, and the flow schedule: constant-rate
//! background traffic to victim servers from every vehicle, plus coordinated
//! ramping attack flows from alternating bot groups to decoy servers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sim::topology::{NetworkTopology, NodeId};

/// Distance between consecutive RSU coverage areas along the ring road.
pub const RSU_SPACING_M: f64 = 500.0;

/// Full description of one simulation run. Everything that affects the
/// emitted samples lives here, so a config (with its seed) reproduces a run
/// bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_vehicles: usize,
    pub n_bots: usize,
    /// Per-vehicle speed drawn uniformly from this range, m/s.
    pub speed_range: (f64, f64),
    pub duration_s: f64,
    pub sample_interval_s: f64,
    /// Absent means a normal (attack-free) scenario.
    pub attack_window: Option<(f64, f64)>,
    /// Alternation granularity: bots are split round-robin into this many
    /// groups, each active in one equal sub-slot of the attack window.
    /// Capped at the bot count so no sub-slot is left silent.
    pub bot_groups: usize,
    pub seed: u64,
    /// How many links are monitored (feature columns come in link order).
    pub n_monitored_links: usize,
    /// Maps speed to handoff-failure probability, per m/s.
    pub impairment_coefficient: f64,
    pub n_rsus: usize,
    pub n_switches: usize,
    pub n_victim_servers: usize,
    pub n_decoy_servers: usize,
    pub background_rate_kbps: (f64, f64),
    pub attack_rate_kbps: (f64, f64),
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_vehicles: 10,
            n_bots: 2,
            speed_range: (10.0, 20.0),
            duration_s: 3600.0,
            sample_interval_s: 0.5,
            attack_window: Some((900.0, 2700.0)),
            bot_groups: 3,
            seed: 0,
            n_monitored_links: 25,
            impairment_coefficient: 0.004,
            n_rsus: 4,
            n_switches: 3,
            n_victim_servers: 2,
            n_decoy_servers: 3,
            background_rate_kbps: (600.0, 1700.0),
            attack_rate_kbps: (40.0, 300.0),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, v) in [
            ("duration_s", self.duration_s),
            ("sample_interval_s", self.sample_interval_s),
            ("impairment_coefficient", self.impairment_coefficient),
            ("speed_range.0", self.speed_range.0),
            ("speed_range.1", self.speed_range.1),
            ("background_rate_kbps.0", self.background_rate_kbps.0),
            ("background_rate_kbps.1", self.background_rate_kbps.1),
            ("attack_rate_kbps.0", self.attack_rate_kbps.0),
            ("attack_rate_kbps.1", self.attack_rate_kbps.1),
            ("attack_window.0", self.attack_window.map(|w| w.0).unwrap_or(0.0)),
            ("attack_window.1", self.attack_window.map(|w| w.1).unwrap_or(0.0)),
        ] {
            if !v.is_finite() {
                return fail(format!("{name} = {v} is not a finite number"));
            }
        }
        if self.n_vehicles > 1_000_000 {
            return fail(format!("n_vehicles = {} is beyond the desk scale", self.n_vehicles));
        }
        if self.n_rsus > 10_000
            || self.n_switches > 10_000
            || self.n_victim_servers > 10_000
            || self.n_decoy_servers > 10_000
        {
            return fail("topology node counts are capped at 10000 each".into());
        }
        if self.n_monitored_links > 1_000_000 {
            return fail(format!(
                "n_monitored_links = {} is beyond the desk scale",
                self.n_monitored_links
            ));
        }
        if self.n_bots > self.n_vehicles {
            return fail(format!(
                "n_bots = {} exceeds n_vehicles = {}",
                self.n_bots, self.n_vehicles
            ));
        }
        if !(self.speed_range.0 >= 0.0 && self.speed_range.0 <= self.speed_range.1) {
            return fail(format!("speed_range {:?} is not ordered", self.speed_range));
        }
        if self.duration_s <= 0.0 {
            return fail(format!("duration_s = {} must be positive", self.duration_s));
        }
        if !(self.sample_interval_s > 0.0 && self.sample_interval_s <= self.duration_s) {
            return fail(format!(
                "sample_interval_s = {} must lie in (0, duration]",
                self.sample_interval_s
            ));
        }
        let steps = self.duration_s / self.sample_interval_s;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return fail(format!(
                "sample_interval_s = {} does not divide duration_s = {}",
                self.sample_interval_s, self.duration_s
            ));
        }
        if steps > 1e8 {
            return fail(format!("{steps} sampling steps is beyond the desk scale"));
        }
        if let Some((start, end)) = self.attack_window {
            if !(start >= 0.0 && start < end && end <= self.duration_s) {
                return fail(format!(
                    "attack_window ({start}, {end}) must lie within [0, {}]",
                    self.duration_s
                ));
            }
            if self.n_bots > 0 && self.bot_groups == 0 {
                return fail("bot_groups must be >= 1 when bots attack".into());
            }
        }
        if self.n_monitored_links == 0 {
            return fail("n_monitored_links must be >= 1".into());
        }
        if self.impairment_coefficient < 0.0 {
            return fail(format!(
                "impairment_coefficient = {} must be >= 0",
                self.impairment_coefficient
            ));
        }
        if self.n_rsus == 0 || self.n_switches == 0 {
            return fail("need at least one RSU and one switch".into());
        }
        if self.n_victim_servers == 0 || self.n_decoy_servers == 0 {
            return fail("need at least one victim and one decoy server".into());
        }
        for (name, (lo, hi)) in [
            ("background_rate_kbps", self.background_rate_kbps),
            ("attack_rate_kbps", self.attack_rate_kbps),
        ] {
            if !(lo > 0.0 && lo <= hi) {
                return fail(format!("{name} ({lo}, {hi}) is not an ordered positive range"));
            }
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.duration_s / self.sample_interval_s).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: u32,
    pub speed_mps: f64,
    pub is_bot: bool,
    /// Attachment at scenario start; `attached_rsu_at` gives it over time.
    pub attached_rsu: usize,
    /// Starting position along the RSU ring, metres.
    pub start_offset_m: f64,
}

impl Vehicle {
    /// RSU index this vehicle talks to at time `t`: vehicles circulate along
    /// a ring of equally spaced RSU coverage areas at their fixed speed.
    pub fn attached_rsu_at(&self, t: f64, n_rsus: usize) -> usize {
        let ring = n_rsus as f64 * RSU_SPACING_M;
        let pos = (self.start_offset_m + self.speed_mps * t).rem_euclid(ring);
        ((pos / RSU_SPACING_M) as usize).min(n_rsus - 1)
    }
}

/// Creates the vehicle fleet for a config: seeded speeds and start positions,
/// nobody flagged as a bot yet.
pub fn make_vehicles(config: &ScenarioConfig) -> Vec<Vehicle> {
    let mut rng = sub_rng(config.seed, RngStream::Vehicles);
    let ring = config.n_rsus as f64 * RSU_SPACING_M;
    (0..config.n_vehicles as u32)
        .map(|id| {
            let (lo, hi) = config.speed_range;
            let speed_mps = if hi > lo { rng.gen_range(lo..hi) } else { lo };
            let start_offset_m = rng.gen_range(0.0..ring);
            let mut v = Vehicle {
                id,
                speed_mps,
                is_bot: false,
                attached_rsu: 0,
                start_offset_m,
            };
            v.attached_rsu = v.attached_rsu_at(0.0, config.n_rsus);
            v
        })
        .collect()
}

/// Flags exactly `n_bots` vehicles as bots, chosen uniformly without
/// replacement from the seeded generator. Deterministic per seed.
pub fn assign_bots(vehicles: &mut [Vehicle], n_bots: usize, seed: u64) -> Result<()> {
    if n_bots > vehicles.len() {
        return Err(Error::InvalidConfig(format!(
            "cannot flag {n_bots} bots among {} vehicles",
            vehicles.len()
        )));
    }
    for v in vehicles.iter_mut() {
        v.is_bot = false;
    }
    let mut rng = sub_rng(seed, RngStream::Bots);
    // Partial Fisher-Yates over the index list; the first n_bots drawn win.
    let mut indices: Vec<usize> = (0..vehicles.len()).collect();
    for i in 0..n_bots {
        let j = rng.gen_range(i..indices.len());
        indices.swap(i, j);
        vehicles[indices[i]].is_bot = true;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    Background,
    Attack,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateProfile {
    ConstantKbps(f64),
    /// Linear ramp from `from` to `to` across the flow's active span.
    RampKbps { from: f64, to: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub id: u32,
    pub src_vehicle: u32,
    pub dst: NodeId,
    pub rate: RateProfile,
    pub start_s: f64,
    pub end_s: f64,
    pub kind: FlowKind,
}

impl FlowSpec {
    pub fn rate_at(&self, t: f64) -> f64 {
        match self.rate {
            RateProfile::ConstantKbps(r) => r,
            RateProfile::RampKbps { from, to } => {
                let span = self.end_s - self.start_s;
                let frac = ((t - self.start_s) / span).clamp(0.0, 1.0);
                from + (to - from) * frac
            }
        }
    }

    /// Exact integral of the rate over `[a, b]` clipped to the active span,
    /// in Kbit (Kbps times seconds).
    pub fn volume_kbit(&self, a: f64, b: f64) -> f64 {
        let lo = a.max(self.start_s);
        let hi = b.min(self.end_s);
        if hi <= lo {
            return 0.0;
        }
        // Both profiles are linear in t, so the trapezoid rule is exact.
        0.5 * (self.rate_at(lo) + self.rate_at(hi)) * (hi - lo)
    }

    pub fn active_in(&self, a: f64, b: f64) -> bool {
        self.start_s < b && self.end_s > a
    }
}

/// Builds the full flow schedule: one background flow per vehicle for the
/// whole run, and one ramping attack flow per bot in its group's sub-slot of
/// the attack window. No attack flow exists outside the window.
pub fn generate_flow_schedule(
    config: &ScenarioConfig,
    vehicles: &[Vehicle],
    topology: &NetworkTopology,
) -> Result<Vec<FlowSpec>> {
    config.validate()?;
    let mut rng = sub_rng(config.seed, RngStream::Flows);
    let mut flows = Vec::new();
    let mut next_id = 0u32;

    let (bg_lo, bg_hi) = config.background_rate_kbps;
    for v in vehicles {
        let dst = topology.victim_servers[rng.gen_range(0..topology.victim_servers.len())];
        let rate = if bg_hi > bg_lo {
            rng.gen_range(bg_lo..bg_hi)
        } else {
            bg_lo
        };
        flows.push(FlowSpec {
            id: next_id,
            src_vehicle: v.id,
            dst,
            rate: RateProfile::ConstantKbps(rate),
            start_s: 0.0,
            end_s: config.duration_s,
            kind: FlowKind::Background,
        });
        next_id += 1;
    }

    if let Some((w_start, w_end)) = config.attack_window {
        let bots: Vec<&Vehicle> = vehicles.iter().filter(|v| v.is_bot).collect();
        if !bots.is_empty() {
            if config.bot_groups == 0 {
                return Err(Error::InvalidConfig(
                    "bot_groups must be >= 1 when bots attack".into(),
                ));
            }
            // More groups than bots would leave sub-slots silent.
            let n_groups = config.bot_groups.min(bots.len());
            let slot = (w_end - w_start) / n_groups as f64;
            let (atk_lo, atk_hi) = config.attack_rate_kbps;
            for (i, bot) in bots.iter().enumerate() {
                let group = i % n_groups;
                let start_s = w_start + group as f64 * slot;
                let end_s = start_s + slot;
                let dst =
                    topology.decoy_servers[rng.gen_range(0..topology.decoy_servers.len())];
                flows.push(FlowSpec {
                    id: next_id,
                    src_vehicle: bot.id,
                    dst,
                    rate: RateProfile::RampKbps {
                        from: atk_lo,
                        to: atk_hi,
                    },
                    start_s,
                    end_s,
                    kind: FlowKind::Attack,
                });
                next_id += 1;
            }
        }
    }

    Ok(flows)
}

/// Independent deterministic generator streams derived from the scenario seed.
#[derive(Debug, Clone, Copy)]
pub enum RngStream {
    Vehicles,
    Bots,
    Flows,
    Impairment,
}

pub fn sub_rng(seed: u64, stream: RngStream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(stream as u64 + 1)))
}

/// Generator keyed by (seed, vehicle, step) so impairment draws for one
/// vehicle never depend on which other flows exist in the run.
pub fn impairment_rng(seed: u64, vehicle: u32, step: usize) -> ChaCha8Rng {
    let mix = splitmix64(seed ^ splitmix64(RngStream::Impairment as u64 + 1))
        ^ splitmix64((vehicle as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        ^ splitmix64((step as u64 + 1).wrapping_mul(0xBF58_476D_1CE4_E5B9));
    ChaCha8Rng::seed_from_u64(splitmix64(mix))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::topology::build_topology;

    #[test]
    fn bot_assignment_is_deterministic_and_exact() {
        let config = ScenarioConfig {
            n_vehicles: 30,
            ..ScenarioConfig::default()
        };
        let mut a = make_vehicles(&config);
        let mut b = make_vehicles(&config);
        assign_bots(&mut a, 5, 99).unwrap();
        assign_bots(&mut b, 5, 99).unwrap();
        let ids = |vs: &[Vehicle]| -> Vec<u32> {
            vs.iter().filter(|v| v.is_bot).map(|v| v.id).collect()
        };
        assert_eq!(ids(&a).len(), 5);
        assert_eq!(ids(&a), ids(&b));
    }

    #[test]
    fn bot_extremes() {
        let config = ScenarioConfig::default();
        let mut vs = make_vehicles(&config);
        assign_bots(&mut vs, 0, 1).unwrap();
        assert!(vs.iter().all(|v| !v.is_bot));
        let all = vs.len();
        assign_bots(&mut vs, all, 1).unwrap();
        assert!(vs.iter().all(|v| v.is_bot));
        assert!(assign_bots(&mut vs, 11, 1).is_err());
    }

    #[test]
    fn schedule_without_window_is_background_only() {
        let config = ScenarioConfig {
            attack_window: None,
            ..ScenarioConfig::default()
        };
        let topo = build_topology(&config).unwrap();
        let mut vehicles = make_vehicles(&config);
        assign_bots(&mut vehicles, config.n_bots, config.seed).unwrap();
        let flows = generate_flow_schedule(&config, &vehicles, &topo).unwrap();
        assert_eq!(flows.len(), config.n_vehicles);
        assert!(flows.iter().all(|f| f.kind == FlowKind::Background));
    }

    #[test]
    fn six_bots_three_groups_fill_three_sub_slots() {
        let config = ScenarioConfig {
            n_vehicles: 12,
            n_bots: 6,
            bot_groups: 3,
            attack_window: Some((900.0, 2700.0)),
            ..ScenarioConfig::default()
        };
        let topo = build_topology(&config).unwrap();
        let mut vehicles = make_vehicles(&config);
        assign_bots(&mut vehicles, config.n_bots, config.seed).unwrap();
        let flows = generate_flow_schedule(&config, &vehicles, &topo).unwrap();
        let attacks: Vec<&FlowSpec> = flows.iter().filter(|f| f.kind == FlowKind::Attack).collect();
        assert_eq!(attacks.len(), 6);

        // Enumerate the partition: 3 sub-slots of 600 s, 2 bots in each.
        let mut per_slot = [0usize; 3];
        for f in &attacks {
            let slot = ((f.start_s - 900.0) / 600.0).round() as usize;
            assert!((f.start_s - (900.0 + slot as f64 * 600.0)).abs() < 1e-9);
            assert!((f.end_s - f.start_s - 600.0).abs() < 1e-9);
            per_slot[slot] += 1;
            // Attack flows never leave the window.
            assert!(f.start_s >= 900.0 - 1e-9 && f.end_s <= 2700.0 + 1e-9);
            // Destinations are decoys.
            assert!(topo.decoy_servers.contains(&f.dst));
        }
        assert_eq!(per_slot, [2, 2, 2]);
    }

    #[test]
    fn attack_ramp_hits_its_endpoints_monotonically() {
        let config = ScenarioConfig {
            n_bots: 3,
            bot_groups: 1,
            ..ScenarioConfig::default()
        };
        let topo = build_topology(&config).unwrap();
        let mut vehicles = make_vehicles(&config);
        assign_bots(&mut vehicles, config.n_bots, config.seed).unwrap();
        let flows = generate_flow_schedule(&config, &vehicles, &topo).unwrap();
        for f in flows.iter().filter(|f| f.kind == FlowKind::Attack) {
            assert!((f.rate_at(f.start_s) - 40.0).abs() < 1e-12);
            assert!((f.rate_at(f.end_s) - 300.0).abs() < 1e-12);
            let mut last = 0.0;
            for k in 0..=100 {
                let t = f.start_s + (f.end_s - f.start_s) * k as f64 / 100.0;
                let r = f.rate_at(t);
                assert!(r >= last - 1e-12, "ramp decreased at t={t}");
                assert!((40.0..=300.0).contains(&r));
                last = r;
            }
        }
    }

    #[test]
    fn more_groups_than_bots_collapses_to_bot_count() {
        let config = ScenarioConfig {
            n_vehicles: 10,
            n_bots: 2,
            bot_groups: 3,
            ..ScenarioConfig::default()
        };
        let topo = build_topology(&config).unwrap();
        let mut vehicles = make_vehicles(&config);
        assign_bots(&mut vehicles, 2, config.seed).unwrap();
        let flows = generate_flow_schedule(&config, &vehicles, &topo).unwrap();
        let attacks: Vec<&FlowSpec> = flows.iter().filter(|f| f.kind == FlowKind::Attack).collect();
        assert_eq!(attacks.len(), 2);
        // Two sub-slots of 900 s each: the window stays fully covered.
        let mut starts: Vec<f64> = attacks.iter().map(|f| f.start_s).collect();
        starts.sort_by(f64::total_cmp);
        assert_eq!(starts, vec![900.0, 1800.0]);
        assert!((attacks[0].end_s - attacks[0].start_s - 900.0).abs() < 1e-9);
    }

    #[test]
    fn zero_groups_with_bots_and_window_is_rejected() {
        let config = ScenarioConfig {
            bot_groups: 0,
            ..ScenarioConfig::default()
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn interval_must_divide_duration() {
        let config = ScenarioConfig {
            duration_s: 10.0,
            sample_interval_s: 3.0,
            ..ScenarioConfig::default()
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn non_finite_and_absurd_configs_are_rejected() {
        for config in [
            ScenarioConfig {
                duration_s: f64::INFINITY,
                ..ScenarioConfig::default()
            },
            ScenarioConfig {
                sample_interval_s: f64::NAN,
                ..ScenarioConfig::default()
            },
            ScenarioConfig {
                speed_range: (f64::NAN, 10.0),
                ..ScenarioConfig::default()
            },
            ScenarioConfig {
                n_vehicles: usize::MAX,
                ..ScenarioConfig::default()
            },
            ScenarioConfig {
                duration_s: 1e12,
                sample_interval_s: 0.5,
                attack_window: None,
                ..ScenarioConfig::default()
            },
        ] {
            assert!(config.validate().is_err(), "accepted {config:?}");
        }
    }

    #[test]
    fn vehicles_stay_attached_to_valid_rsus() {
        let config = ScenarioConfig {
            n_vehicles: 20,
            speed_range: (0.0, 40.0),
            ..ScenarioConfig::default()
        };
        let vehicles = make_vehicles(&config);
        for v in &vehicles {
            assert!((config.speed_range.0..=config.speed_range.1).contains(&v.speed_mps));
            for k in 0..100 {
                let rsu = v.attached_rsu_at(k as f64 * 36.0, config.n_rsus);
                assert!(rsu < config.n_rsus);
            }
        }
    }
}
