use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::NodeAddr;

/// Default disc radius for a link, in meters.
pub const DEFAULT_MAX_RANGE_M: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Coordinator,
    Router,
    EndDevice,
}

impl Role {
    /// Coordinators and routers forward frames; end devices never do.
    pub fn relays(self) -> bool {
        !matches!(self, Role::EndDevice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub addr: NodeAddr,
    pub role: Role,
    pub x_m: f64,
    pub y_m: f64,
}

impl NodeSpec {
    pub fn new(addr: u64, role: Role, x_m: f64, y_m: f64) -> Self {
        Self {
            addr: NodeAddr(addr),
            role,
            x_m,
            y_m,
        }
    }

    pub fn distance_to(&self, other: &NodeSpec) -> f64 {
        (self.x_m - other.x_m).hypot(self.y_m - other.y_m)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("topology has no nodes")]
    Empty,
    #[error("duplicate node id {0}")]
    DuplicateNodeId(NodeAddr),
    #[error("topology has no coordinator")]
    NoCoordinator,
    #[error("topology has more than one coordinator ({0} and {1})")]
    MultipleCoordinators(NodeAddr, NodeAddr),
    #[error("max_range_m must be a positive number")]
    BadRange,
    #[error("node {0} has a non-finite position")]
    BadPosition(NodeAddr),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RouteError {
    #[error("unknown node {0}")]
    UnknownNode(NodeAddr),
    #[error("no route from {0} to the coordinator")]
    NoRoute(NodeAddr),
}

/// Nodes plus the disc-model link set derived from their positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: BTreeMap<NodeAddr, NodeSpec>,
    max_range_m: f64,
    links: BTreeSet<(NodeAddr, NodeAddr)>,
    neighbours: BTreeMap<NodeAddr, BTreeSet<NodeAddr>>,
    coordinator: NodeAddr,
    /// Min-hop distance to the coordinator over relay nodes.
    hop_distance: BTreeMap<NodeAddr, usize>,
}

/// Builds the topology; a link `(a, b)` exists iff `dist(a, b) <= max_range_m`.
pub fn build_topology(nodes: &[NodeSpec], max_range_m: f64) -> Result<Topology, TopologyError> {
    if nodes.is_empty() {
        return Err(TopologyError::Empty);
    }
    if !(max_range_m > 0.0 && max_range_m.is_finite()) {
        return Err(TopologyError::BadRange);
    }
    let mut map = BTreeMap::new();
    let mut coordinator = None;
    for n in nodes {
        if !(n.x_m.is_finite() && n.y_m.is_finite()) {
            return Err(TopologyError::BadPosition(n.addr));
        }
        if map.insert(n.addr, *n).is_some() {
            return Err(TopologyError::DuplicateNodeId(n.addr));
        }
        if n.role == Role::Coordinator {
            if let Some(first) = coordinator {
                return Err(TopologyError::MultipleCoordinators(first, n.addr));
            }
            coordinator = Some(n.addr);
        }
    }
    let coordinator = coordinator.ok_or(TopologyError::NoCoordinator)?;

    let mut links = BTreeSet::new();
    let mut neighbours: BTreeMap<NodeAddr, BTreeSet<NodeAddr>> =
        map.keys().map(|a| (*a, BTreeSet::new())).collect();
    let all: Vec<&NodeSpec> = map.values().collect();
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            if a.distance_to(b) <= max_range_m {
                links.insert((a.addr, b.addr));
                neighbours.get_mut(&a.addr).unwrap().insert(b.addr);
                neighbours.get_mut(&b.addr).unwrap().insert(a.addr);
            }
        }
    }

    let mut topo = Topology {
        nodes: map,
        max_range_m,
        links,
        neighbours,
        coordinator,
        hop_distance: BTreeMap::new(),
    };
    topo.hop_distance = topo.bfs_from_coordinator();
    Ok(topo)
}

impl Topology {
    pub fn coordinator(&self) -> NodeAddr {
        self.coordinator
    }

    pub fn max_range_m(&self) -> f64 {
        self.max_range_m
    }

    pub fn node(&self, addr: NodeAddr) -> Option<&NodeSpec> {
        self.nodes.get(&addr)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes.values()
    }

    /// Undirected links as `(smaller, larger)` address pairs.
    pub fn links(&self) -> &BTreeSet<(NodeAddr, NodeAddr)> {
        &self.links
    }

    pub fn has_link(&self, a: NodeAddr, b: NodeAddr) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.links.contains(&key)
    }

    pub fn neighbours(&self, addr: NodeAddr) -> impl Iterator<Item = NodeAddr> + '_ {
        self.neighbours.get(&addr).into_iter().flatten().copied()
    }

    fn relays(&self, addr: NodeAddr) -> bool {
        self.nodes.get(&addr).is_some_and(|n| n.role.relays())
    }

    fn bfs_from_coordinator(&self) -> BTreeMap<NodeAddr, usize> {
        let mut dist = BTreeMap::new();
        let mut queue = VecDeque::new();
        dist.insert(self.coordinator, 0);
        queue.push_back(self.coordinator);
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            for v in self.neighbours(u) {
                if dist.contains_key(&v) {
                    continue;
                }
                dist.insert(v, d + 1);
                // End devices terminate paths; they are reached but not expanded.
                if self.relays(v) {
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Min-hop distance from `addr` to the coordinator, if reachable.
    pub fn hop_distance(&self, addr: NodeAddr) -> Option<usize> {
        self.hop_distance.get(&addr).copied()
    }

    /// Min-hop path from `src` to the coordinator, both ends included.
    ///
    /// Among equal-length paths the one whose next hop has the smallest
    /// address is taken at every step, which makes the path unique.
    pub fn route(&self, src: NodeAddr) -> Result<Vec<NodeAddr>, RouteError> {
        if !self.nodes.contains_key(&src) {
            return Err(RouteError::UnknownNode(src));
        }
        let mut d = self.hop_distance(src).ok_or(RouteError::NoRoute(src))?;
        let mut path = vec![src];
        let mut cur = src;
        while d > 0 {
            let next = self
                .neighbours(cur)
                .find(|n| self.relays(*n) && self.hop_distance(*n) == Some(d - 1))
                .expect("bfs distances always have a predecessor");
            path.push(next);
            cur = next;
            d -= 1;
        }
        Ok(path)
    }

    /// Precomputed routes for every node that has one.
    pub fn route_table(&self) -> BTreeMap<NodeAddr, Vec<NodeAddr>> {
        self.nodes
            .keys()
            .filter_map(|a| self.route(*a).ok().map(|p| (*a, p)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: u64 = 0xC0;

    #[test]
    fn range_decides_links() {
        let t = build_topology(
            &[
                NodeSpec::new(C, Role::Coordinator, 0.0, 0.0),
                NodeSpec::new(1, Role::EndDevice, 500.0, 0.0),
            ],
            DEFAULT_MAX_RANGE_M,
        )
        .unwrap();
        assert_eq!(t.links().len(), 1);
        let t = build_topology(
            &[
                NodeSpec::new(C, Role::Coordinator, 0.0, 0.0),
                NodeSpec::new(1, Role::EndDevice, 1500.0, 0.0),
            ],
            DEFAULT_MAX_RANGE_M,
        )
        .unwrap();
        assert!(t.links().is_empty());
        assert_eq!(t.route(NodeAddr(1)), Err(RouteError::NoRoute(NodeAddr(1))));
    }

    #[test]
    fn exactly_at_range_is_linked() {
        let t = build_topology(
            &[
                NodeSpec::new(C, Role::Coordinator, 0.0, 0.0),
                NodeSpec::new(1, Role::EndDevice, 1000.0, 0.0),
            ],
            1000.0,
        )
        .unwrap();
        assert!(t.has_link(NodeAddr(1), NodeAddr(C)));
    }

    #[test]
    fn line_forces_two_hops() {
        let t = build_topology(
            &[
                NodeSpec::new(0xA, Role::EndDevice, 0.0, 0.0),
                NodeSpec::new(0xB, Role::Router, 600.0, 0.0),
                NodeSpec::new(C, Role::Coordinator, 1200.0, 0.0),
            ],
            700.0,
        )
        .unwrap();
        assert_eq!(t.links().len(), 2);
        assert!(!t.has_link(NodeAddr(0xA), NodeAddr(C)));
        assert_eq!(
            t.route(NodeAddr(0xA)).unwrap(),
            vec![NodeAddr(0xA), NodeAddr(0xB), NodeAddr(C)]
        );
    }

    #[test]
    fn direct_link_is_one_hop() {
        let t = build_topology(
            &[
                NodeSpec::new(C, Role::Coordinator, 0.0, 0.0),
                NodeSpec::new(1, Role::EndDevice, 10.0, 0.0),
            ],
            100.0,
        )
        .unwrap();
        assert_eq!(t.route(NodeAddr(1)).unwrap().len() - 1, 1);
        assert_eq!(t.route(NodeAddr(C)).unwrap(), vec![NodeAddr(C)]);
    }

    #[test]
    fn diamond_tie_breaks_on_smaller_id() {
        // src at the left, two routers above/below, coordinator at the right.
        let t = build_topology(
            &[
                NodeSpec::new(0x1, Role::EndDevice, 0.0, 0.0),
                NodeSpec::new(0x9, Role::Router, 500.0, 400.0),
                NodeSpec::new(0x5, Role::Router, 500.0, -400.0),
                NodeSpec::new(C, Role::Coordinator, 1000.0, 0.0),
            ],
            700.0,
        )
        .unwrap();
        assert_eq!(
            t.route(NodeAddr(1)).unwrap(),
            vec![NodeAddr(1), NodeAddr(5), NodeAddr(C)]
        );
    }

    #[test]
    fn end_devices_do_not_relay() {
        let t = build_topology(
            &[
                NodeSpec::new(0x1, Role::EndDevice, 0.0, 0.0),
                NodeSpec::new(0x2, Role::EndDevice, 600.0, 0.0),
                NodeSpec::new(C, Role::Coordinator, 1200.0, 0.0),
            ],
            700.0,
        )
        .unwrap();
        assert_eq!(t.route(NodeAddr(1)), Err(RouteError::NoRoute(NodeAddr(1))));
        assert_eq!(t.route(NodeAddr(2)).unwrap().len(), 2);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(build_topology(&[], 1.0), Err(TopologyError::Empty));
        assert_eq!(
            build_topology(&[NodeSpec::new(1, Role::Router, 0.0, 0.0)], 1.0),
            Err(TopologyError::NoCoordinator)
        );
        assert_eq!(
            build_topology(
                &[
                    NodeSpec::new(1, Role::Coordinator, 0.0, 0.0),
                    NodeSpec::new(2, Role::Coordinator, 0.0, 0.0)
                ],
                1.0
            ),
            Err(TopologyError::MultipleCoordinators(
                NodeAddr(1),
                NodeAddr(2)
            ))
        );
        assert_eq!(
            build_topology(
                &[
                    NodeSpec::new(1, Role::Coordinator, 0.0, 0.0),
                    NodeSpec::new(1, Role::Router, 0.0, 0.0)
                ],
                1.0
            ),
            Err(TopologyError::DuplicateNodeId(NodeAddr(1)))
        );
        assert_eq!(
            build_topology(&[NodeSpec::new(1, Role::Coordinator, 0.0, 0.0)], 0.0),
            Err(TopologyError::BadRange)
        );
        assert_eq!(
            build_topology(&[NodeSpec::new(1, Role::Coordinator, 0.0, 0.0)], 1.0)
                .unwrap()
                .route(NodeAddr(7)),
            Err(RouteError::UnknownNode(NodeAddr(7)))
        );
    }
}
