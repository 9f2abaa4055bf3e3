//! Deterministic ITS network simulation: topology, flow scheduling,
//! speed-dependent impairments, and labeled per-link traffic time series.

pub mod run;
pub mod scenario;
pub mod topology;

pub use run::{
    congestion_triggered_samples, connection_impairment, run_scenario, run_scenario_on,
    ImpairmentOutcome, Label, LinkStats, TrafficSample,
};
pub use scenario::{
    assign_bots, generate_flow_schedule, make_vehicles, FlowKind, FlowSpec, RateProfile,
    ScenarioConfig, Vehicle,
};
pub use topology::{build_topology, route_flow, victims_reachable, Link, LinkId, NetworkTopology, NodeId};
