//! Parameterized ITS topology: RSUs feeding a switch core, with victim and
//! decoy servers dual-homed behind it.
//!
//! All RSU-to-switch links form the boundary between the access side and the
//! server region, so they are the pivotal set: cutting them disconnects every
//! server (victim and decoy alike) from every RSU, and any flow from a
//! vehicle to a decoy has to cross one of them. With the default sizes
//! (4 RSUs, 3 switches, 2 victims, 3 decoys) the generator yields exactly
//! 25 links, all of them monitorable.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::sim::scenario::ScenarioConfig;

pub type NodeId = u32;
pub type LinkId = u32;

const ACCESS_CAPACITY_KBPS: f64 = 10_000.0;
const CORE_CAPACITY_KBPS: f64 = 100_000.0;
const SERVER_CAPACITY_KBPS: f64 = 10_000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub endpoints: (NodeId, NodeId),
    pub capacity_kbps: f64,
    pub is_pivotal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    pub rsus: Vec<NodeId>,
    pub switches: Vec<NodeId>,
    pub victim_servers: Vec<NodeId>,
    pub decoy_servers: Vec<NodeId>,
    pub links: Vec<Link>,
    pub pivotal_links: Vec<LinkId>,
    /// The L links whose counters feed the detectors, in feature-column order.
    pub monitored_links: Vec<LinkId>,
    adjacency: HashMap<NodeId, Vec<LinkId>>,
}

impl NetworkTopology {
    pub fn n_nodes(&self) -> usize {
        self.rsus.len() + self.switches.len() + self.victim_servers.len() + self.decoy_servers.len()
    }

    pub fn servers(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.victim_servers
            .iter()
            .chain(self.decoy_servers.iter())
            .copied()
    }

    pub fn incident_links(&self, node: NodeId) -> &[LinkId] {
        self.adjacency.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id as usize]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.incident_links(node).len()
    }

    fn other_end(&self, link: LinkId, node: NodeId) -> NodeId {
        let l = self.link(link);
        if l.endpoints.0 == node {
            l.endpoints.1
        } else {
            l.endpoints.0
        }
    }
}

/// Builds the topology described by `config` and selects its monitored links:
/// pivotal links first (in id order), then the remaining links by descending
/// endpoint-degree sum.
pub fn build_topology(config: &ScenarioConfig) -> Result<NetworkTopology> {
    config.validate()?;

    let n_rsus = config.n_rsus;
    let n_switches = config.n_switches;
    let n_victims = config.n_victim_servers;
    let n_decoys = config.n_decoy_servers;

    let mut next: NodeId = 0;
    let mut take = |n: usize| -> Vec<NodeId> {
        let ids = (next..next + n as NodeId).collect();
        next += n as NodeId;
        ids
    };
    let rsus = take(n_rsus);
    let switches = take(n_switches);
    let victim_servers = take(n_victims);
    let decoy_servers = take(n_decoys);

    let mut links = Vec::new();
    let mut adjacency: HashMap<NodeId, Vec<LinkId>> = HashMap::new();
    let add_link = |links: &mut Vec<Link>,
                        adjacency: &mut HashMap<NodeId, Vec<LinkId>>,
                        a: NodeId,
                        b: NodeId,
                        capacity: f64,
                        pivotal: bool| {
        let id = links.len() as LinkId;
        links.push(Link {
            id,
            endpoints: (a, b),
            capacity_kbps: capacity,
            is_pivotal: pivotal,
        });
        adjacency.entry(a).or_default().push(id);
        adjacency.entry(b).or_default().push(id);
    };

    // Access boundary: every RSU to every switch. This is the pivotal cut.
    for &r in &rsus {
        for &s in &switches {
            add_link(&mut links, &mut adjacency, r, s, ACCESS_CAPACITY_KBPS, true);
        }
    }
    // Core mesh among the switches.
    for i in 0..switches.len() {
        for j in i + 1..switches.len() {
            add_link(
                &mut links,
                &mut adjacency,
                switches[i],
                switches[j],
                CORE_CAPACITY_KBPS,
                false,
            );
        }
    }
    // Servers dual-home onto two distinct switches (one when only one exists).
    let server_ids: Vec<NodeId> = victim_servers
        .iter()
        .chain(decoy_servers.iter())
        .copied()
        .collect();
    for (k, &server) in server_ids.iter().enumerate() {
        let first = switches[k % switches.len()];
        add_link(
            &mut links,
            &mut adjacency,
            server,
            first,
            SERVER_CAPACITY_KBPS,
            false,
        );
        if switches.len() >= 2 {
            let second = switches[(k + 1) % switches.len()];
            add_link(
                &mut links,
                &mut adjacency,
                server,
                second,
                SERVER_CAPACITY_KBPS,
                false,
            );
        }
    }

    let pivotal_links: Vec<LinkId> = links.iter().filter(|l| l.is_pivotal).map(|l| l.id).collect();

    if config.n_monitored_links > links.len() {
        return Err(Error::InvalidConfig(format!(
            "n_monitored_links = {} exceeds the {} links this topology has",
            config.n_monitored_links,
            links.len()
        )));
    }

    let mut topo = NetworkTopology {
        rsus,
        switches,
        victim_servers,
        decoy_servers,
        links,
        pivotal_links: pivotal_links.clone(),
        monitored_links: Vec::new(),
        adjacency,
    };

    let mut monitored = pivotal_links;
    let mut rest: Vec<LinkId> = topo
        .links
        .iter()
        .filter(|l| !l.is_pivotal)
        .map(|l| l.id)
        .collect();
    rest.sort_by_key(|&id| {
        let l = topo.link(id);
        let deg = topo.degree(l.endpoints.0) + topo.degree(l.endpoints.1);
        (std::cmp::Reverse(deg), id)
    });
    monitored.extend(rest);
    monitored.truncate(config.n_monitored_links);
    topo.monitored_links = monitored;

    Ok(topo)
}

/// Shortest path by hop count from an RSU (or any node) to a destination.
/// Among equal-length paths, returns the lexicographically smallest link-id
/// sequence. Fully deterministic.
pub fn route_flow(topology: &NetworkTopology, src: NodeId, dst: NodeId) -> Result<Vec<LinkId>> {
    let n = topology.n_nodes() as u32;
    if src >= n || dst >= n {
        return Err(Error::NoRoute { src, dst });
    }
    if src == dst {
        return Ok(Vec::new());
    }

    // Hop distances to dst via breadth-first search.
    let mut dist: Vec<u32> = vec![u32::MAX; n as usize];
    dist[dst as usize] = 0;
    let mut queue = std::collections::VecDeque::from([dst]);
    while let Some(u) = queue.pop_front() {
        for &lid in topology.incident_links(u) {
            let v = topology.other_end(lid, u);
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = dist[u as usize] + 1;
                queue.push_back(v);
            }
        }
    }
    if dist[src as usize] == u32::MAX {
        return Err(Error::NoRoute { src, dst });
    }

    // Greedy descent: the smallest link id that still makes progress at each
    // hop yields the lexicographically smallest link-id sequence overall.
    let mut path = Vec::with_capacity(dist[src as usize] as usize);
    let mut node = src;
    while node != dst {
        let d = dist[node as usize];
        let step = topology
            .incident_links(node)
            .iter()
            .copied()
            .filter(|&lid| dist[topology.other_end(lid, node) as usize] + 1 == d)
            .min()
            .expect("BFS distance guarantees a descending neighbor");
        path.push(step);
        node = topology.other_end(step, node);
    }
    Ok(path)
}

/// True when every victim server can reach every RSU. Used by tests and by
/// the pivotality check; plain breadth-first reachability.
pub fn victims_reachable(topology: &NetworkTopology, blocked_links: &[LinkId]) -> bool {
    let blocked: std::collections::HashSet<LinkId> = blocked_links.iter().copied().collect();
    for &victim in &topology.victim_servers {
        let mut seen = std::collections::HashSet::from([victim]);
        let mut queue = std::collections::VecDeque::from([victim]);
        while let Some(u) = queue.pop_front() {
            for &lid in topology.incident_links(u) {
                if blocked.contains(&lid) {
                    continue;
                }
                let v = topology.other_end(lid, u);
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        if !topology.rsus.iter().all(|r| seen.contains(r)) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn default_topology() -> NetworkTopology {
        build_topology(&ScenarioConfig::default()).unwrap()
    }

    /// Independent breadth-first search over the node graph, ignoring the
    /// implementation's distance bookkeeping entirely.
    fn bfs_hops(topo: &NetworkTopology, src: NodeId, dst: NodeId) -> Option<usize> {
        let mut dist = HashMap::from([(src, 0usize)]);
        let mut queue = std::collections::VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            if u == dst {
                return Some(du);
            }
            for &lid in topo.incident_links(u) {
                let l = topo.link(lid);
                let v = if l.endpoints.0 == u { l.endpoints.1 } else { l.endpoints.0 };
                dist.entry(v).or_insert_with(|| {
                    queue.push_back(v);
                    du + 1
                });
            }
        }
        None
    }

    #[test]
    fn default_yields_25_links_all_connected() {
        let topo = default_topology();
        assert_eq!(topo.links.len(), 25);
        assert_eq!(topo.monitored_links.len(), 25);
        assert!(!topo.pivotal_links.is_empty());
        // Every server reachable from every RSU.
        for &r in &topo.rsus {
            for s in topo.servers().collect::<Vec<_>>() {
                assert!(bfs_hops(&topo, r, s).is_some(), "no path {r} -> {s}");
            }
        }
    }

    #[test]
    fn removing_pivotal_links_disconnects_victims() {
        let topo = default_topology();
        assert!(victims_reachable(&topo, &[]));
        assert!(!victims_reachable(&topo, &topo.pivotal_links.clone()));
    }

    #[test]
    fn decoy_paths_cross_a_pivotal_link() {
        let topo = default_topology();
        for &d in &topo.decoy_servers {
            for &r in &topo.rsus {
                let path = route_flow(&topo, r, d).unwrap();
                assert!(
                    path.iter().any(|&lid| topo.link(lid).is_pivotal),
                    "decoy route {r} -> {d} avoids pivotal links"
                );
            }
        }
    }

    #[test]
    fn monitoring_every_link_is_the_boundary_case() {
        let mut config = ScenarioConfig {
            n_monitored_links: 25,
            ..ScenarioConfig::default()
        };
        let topo = build_topology(&config).unwrap();
        assert_eq!(topo.monitored_links.len(), topo.links.len());

        config.n_monitored_links = 26;
        assert!(build_topology(&config).is_err());
    }

    #[test]
    fn same_config_builds_identical_topologies() {
        let a = build_topology(&ScenarioConfig::default()).unwrap();
        let b = build_topology(&ScenarioConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monitored_links_start_with_the_pivotal_set() {
        let config = ScenarioConfig {
            n_monitored_links: 14,
            ..ScenarioConfig::default()
        };
        let topo = build_topology(&config).unwrap();
        let n_pivotal = topo.pivotal_links.len();
        assert_eq!(&topo.monitored_links[..n_pivotal], &topo.pivotal_links[..]);
        // The remainder must be the highest-degree non-pivotal links: with the
        // default sizes those are the switch-mesh links.
        for &lid in &topo.monitored_links[n_pivotal..] {
            let l = topo.link(lid);
            assert!(topo.switches.contains(&l.endpoints.0) && topo.switches.contains(&l.endpoints.1));
        }
    }

    #[test]
    fn adjacent_nodes_route_over_their_single_link() {
        let topo = default_topology();
        let link = topo.link(0);
        let path = route_flow(&topo, link.endpoints.0, link.endpoints.1).unwrap();
        assert_eq!(path, vec![0]);
    }

    #[test]
    fn equal_length_paths_pick_smallest_link_sequence() {
        let topo = default_topology();
        // Victim 0 dual-homes onto switches 0 and 1; RSU 0 reaches both
        // switches directly, so there are two 2-hop paths. The winner must be
        // lexicographically smallest by link ids.
        let victim = topo.victim_servers[0];
        let rsu = topo.rsus[0];
        let path = route_flow(&topo, rsu, victim).unwrap();
        assert_eq!(path.len(), 2);
        let mut candidates: Vec<Vec<LinkId>> = Vec::new();
        for &l1 in topo.incident_links(rsu) {
            let mid = topo.other_end(l1, rsu);
            for &l2 in topo.incident_links(mid) {
                if topo.other_end(l2, mid) == victim {
                    candidates.push(vec![l1, l2]);
                }
            }
        }
        candidates.sort();
        assert_eq!(path, candidates[0]);
    }

    #[test]
    fn random_topologies_match_bfs_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let config = ScenarioConfig {
                n_rsus: rng.gen_range(1..6),
                n_switches: rng.gen_range(1..5),
                n_victim_servers: rng.gen_range(1..4),
                n_decoy_servers: rng.gen_range(1..4),
                n_monitored_links: 1,
                ..ScenarioConfig::default()
            };
            let topo = build_topology(&config).unwrap();
            for &r in &topo.rsus {
                for s in topo.servers().collect::<Vec<_>>() {
                    let path = route_flow(&topo, r, s).unwrap();
                    let oracle = bfs_hops(&topo, r, s).unwrap();
                    assert_eq!(path.len(), oracle, "path length off for {r} -> {s}");
                    // The returned path must be a real walk from r to s.
                    let mut node = r;
                    for &lid in &path {
                        node = topo.other_end(lid, node);
                    }
                    assert_eq!(node, s);
                }
            }
        }
    }

    #[test]
    fn unreachable_destination_is_a_routing_error() {
        let topo = default_topology();
        let err = route_flow(&topo, topo.rsus[0], 999).unwrap_err();
        assert!(matches!(err, Error::NoRoute { .. }));
    }
}
