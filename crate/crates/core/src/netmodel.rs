//! Network graph, legacy (OLSR-style) shortest-path forwarding and topology mutation.
//!
//! Routing in the legacy part of the network is hop-count based. Among several next hops on a
//! shortest path, the neighbor with the lowest node id is chosen, so that forwarding is a
//! deterministic function of `(topology, at, dst)`. Link latency never affects route selection;
//! it is only used for delay accounting and controller placement.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Identifier of a node. Ids are positive integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// Identifier of a coalition team.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TeamId(pub u32);

impl fmt::Display for TeamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Soldier,
    Vehicle,
    PortableStation,
    Cloudlet,
}

impl NodeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeKind::Soldier => "soldier",
            NodeKind::Vehicle => "vehicle",
            NodeKind::PortableStation => "portable-station",
            NodeKind::Cloudlet => "cloudlet",
        }
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "soldier" => Ok(NodeKind::Soldier),
            "vehicle" => Ok(NodeKind::Vehicle),
            "portable-station" => Ok(NodeKind::PortableStation),
            "cloudlet" => Ok(NodeKind::Cloudlet),
            other => Err(format!("unknown node kind '{other}'")),
        }
    }
}

/// Energy reserve of a node. Infrastructure (cloudlets) is mains powered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Battery {
    Finite(f64),
    Unbounded,
}

impl Battery {
    pub fn is_finite(&self) -> bool {
        matches!(self, Battery::Finite(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub kind: NodeKind,
    pub team: TeamId,
    /// Upgraded to SDN forwarding.
    pub sdn_capable: bool,
    /// May host a controller.
    pub controller_candidate: bool,
    pub battery: Battery,
}

impl NodeRecord {
    /// A battery-powered soldier node of team 1, no SDN, no controller.
    pub fn soldier(id: u32) -> Self {
        NodeRecord {
            id: NodeId(id),
            kind: NodeKind::Soldier,
            team: TeamId(1),
            sdn_capable: false,
            controller_candidate: false,
            battery: Battery::Finite(100.0),
        }
    }
}

/// Unordered node pair, stored with the smaller id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkKey {
    a: NodeId,
    b: NodeId,
}

impl LinkKey {
    pub fn new(x: NodeId, y: NodeId) -> Self {
        if x <= y {
            LinkKey { a: x, b: y }
        } else {
            LinkKey { a: y, b: x }
        }
    }

    pub fn between(x: u32, y: u32) -> Self {
        Self::new(NodeId(x), NodeId(y))
    }

    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.a, self.b)
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.a == n || self.b == n
    }

    /// The endpoint opposite to `n`, if `n` is an endpoint.
    pub fn other(&self, n: NodeId) -> Option<NodeId> {
        if n == self.a {
            Some(self.b)
        } else if n == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

impl fmt::Display for LinkKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkRecord {
    pub key: LinkKey,
    pub latency_ms: f64,
    pub up: bool,
}

impl LinkRecord {
    pub fn new(x: u32, y: u32, latency_ms: f64) -> Self {
        LinkRecord { key: LinkKey::between(x, y), latency_ms, up: true }
    }
}

/// Topology mutations delivered by the mobility/failure timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TopologyEvent {
    LinkDown(LinkKey),
    LinkUp(LinkKey),
    NodeCompromised(NodeId),
}

/// An ordered sequence of node ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(Vec<NodeId>);

impl Path {
    pub fn new(nodes: Vec<NodeId>) -> Self {
        Path(nodes)
    }

    pub fn from_ids(ids: &[u32]) -> Self {
        Path(ids.iter().copied().map(NodeId).collect())
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    pub fn src(&self) -> Option<NodeId> {
        self.0.first().copied()
    }

    pub fn dst(&self) -> Option<NodeId> {
        self.0.last().copied()
    }

    pub fn hops(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// Checks the path is simple, has at least one hop and follows up links of `topo`.
    pub fn validate(&self, topo: &Topology) -> Result<()> {
        if self.0.len() < 2 {
            return Err(Error::InvalidPath(format!("{self} has fewer than two nodes")));
        }
        let mut seen = BTreeSet::new();
        for n in &self.0 {
            if !topo.contains(*n) {
                return Err(Error::InvalidPath(format!("{self} references unknown node {n}")));
            }
            if !seen.insert(*n) {
                return Err(Error::InvalidPath(format!("{self} repeats node {n}")));
            }
        }
        for w in self.0.windows(2) {
            if !topo.is_up(w[0], w[1]) {
                return Err(Error::InvalidPath(format!(
                    "{self} uses missing or down link {}-{}",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

/// Immutable network graph. Mutation goes through [`apply_event`], which returns a new value.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: BTreeMap<NodeId, NodeRecord>,
    links: BTreeMap<LinkKey, LinkRecord>,
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
    compromised: BTreeSet<NodeId>,
    version: u64,
}

impl Topology {
    pub fn new(nodes: Vec<NodeRecord>, links: Vec<LinkRecord>) -> Result<Self> {
        let mut node_map = BTreeMap::new();
        for n in nodes {
            if n.id.0 == 0 {
                return Err(Error::InvalidTopology("node ids must be positive".into()));
            }
            if let Battery::Finite(b) = n.battery {
                if !(b >= 0.0) {
                    return Err(Error::InvalidTopology(format!("node {} has negative battery", n.id)));
                }
                if n.kind == NodeKind::Cloudlet {
                    return Err(Error::InvalidTopology(format!(
                        "cloudlet {} must have an unbounded battery",
                        n.id
                    )));
                }
            }
            let id = n.id;
            if node_map.insert(id, n).is_some() {
                return Err(Error::DuplicateNode(id));
            }
        }
        let mut adjacency: BTreeMap<NodeId, BTreeSet<NodeId>> =
            node_map.keys().map(|k| (*k, BTreeSet::new())).collect();
        let mut link_map = BTreeMap::new();
        for l in links {
            let (a, b) = l.key.endpoints();
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            for n in [a, b] {
                if !node_map.contains_key(&n) {
                    return Err(Error::UnknownNode(n));
                }
            }
            if !(l.latency_ms > 0.0) || !l.latency_ms.is_finite() {
                return Err(Error::InvalidTopology(format!("link {} needs a positive latency", l.key)));
            }
            if link_map.insert(l.key, l).is_some() {
                return Err(Error::DuplicateLink(a, b));
            }
            adjacency.get_mut(&a).unwrap().insert(b);
            adjacency.get_mut(&b).unwrap().insert(a);
        }
        Ok(Topology { nodes: node_map, links: link_map, adjacency, compromised: BTreeSet::new(), version: 0 })
    }

    /// Builds a topology of default soldier nodes from an edge list, every link at `latency_ms`.
    pub fn from_edges(edges: &[(u32, u32)], latency_ms: f64) -> Result<Self> {
        let ids: BTreeSet<u32> = edges.iter().flat_map(|(a, b)| [*a, *b]).collect();
        let nodes = ids.into_iter().map(NodeRecord::soldier).collect();
        let links = edges.iter().map(|(a, b)| LinkRecord::new(*a, *b, latency_ms)).collect();
        Topology::new(nodes, links)
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.contains_key(&n)
    }

    pub fn node(&self, n: NodeId) -> Option<&NodeRecord> {
        self.nodes.get(&n)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn links(&self) -> impl Iterator<Item = &LinkRecord> {
        self.links.values()
    }

    pub fn link(&self, x: NodeId, y: NodeId) -> Option<&LinkRecord> {
        self.links.get(&LinkKey::new(x, y))
    }

    pub fn is_up(&self, x: NodeId, y: NodeId) -> bool {
        self.link(x, y).is_some_and(|l| l.up)
    }

    /// Neighbors over up links, in ascending id order.
    pub fn neighbors(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency
            .get(&n)
            .into_iter()
            .flatten()
            .copied()
            .filter(move |m| self.is_up(n, *m))
    }

    /// Neighbors over any link, up or down.
    pub fn all_neighbors(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.get(&n).into_iter().flatten().copied()
    }

    pub fn is_compromised(&self, n: NodeId) -> bool {
        self.compromised.contains(&n)
    }

    pub fn compromised(&self) -> &BTreeSet<NodeId> {
        &self.compromised
    }

    pub fn sdn_nodes(&self) -> BTreeSet<NodeId> {
        self.nodes.values().filter(|n| n.sdn_capable).map(|n| n.id).collect()
    }

    /// Copy of the topology where exactly the members of `upgrades` are SDN capable.
    pub fn with_upgrades(&self, upgrades: &BTreeSet<NodeId>) -> Result<Self> {
        if let Some(n) = upgrades.iter().find(|n| !self.contains(**n)) {
            return Err(Error::UnknownNode(*n));
        }
        let mut t = self.clone();
        for rec in t.nodes.values_mut() {
            rec.sdn_capable = upgrades.contains(&rec.id);
        }
        Ok(t)
    }

    /// Copy with every link in `failed` marked down. Version is not bumped.
    pub fn with_links_down(&self, failed: &[LinkKey]) -> Result<Self> {
        let mut t = self.clone();
        for k in failed {
            let (a, b) = k.endpoints();
            t.links.get_mut(k).ok_or(Error::UnknownLink(a, b))?.up = false;
        }
        Ok(t)
    }

    fn require(&self, n: NodeId) -> Result<()> {
        if self.contains(n) {
            Ok(())
        } else {
            Err(Error::UnknownNode(n))
        }
    }
}

/// Hop distances towards one destination. Absent nodes are unreachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distances {
    dst: NodeId,
    hops: BTreeMap<NodeId, u32>,
}

impl Distances {
    pub fn dst(&self) -> NodeId {
        self.dst
    }

    pub fn get(&self, n: NodeId) -> Option<u32> {
        self.hops.get(&n).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, u32)> + '_ {
        self.hops.iter().map(|(k, v)| (*k, *v))
    }
}

/// BFS hop distance of every node to `dst` over up links.
pub fn shortest_distances(topo: &Topology, dst: NodeId) -> Result<Distances> {
    topo.require(dst)?;
    let mut hops = BTreeMap::new();
    hops.insert(dst, 0);
    let mut queue = VecDeque::from([dst]);
    while let Some(u) = queue.pop_front() {
        let d = hops[&u];
        for v in topo.neighbors(u) {
            if let std::collections::btree_map::Entry::Vacant(e) = hops.entry(v) {
                e.insert(d + 1);
                queue.push_back(v);
            }
        }
    }
    Ok(Distances { dst, hops })
}

fn next_hop_from(topo: &Topology, dist: &Distances, at: NodeId) -> Option<NodeId> {
    let d = dist.get(at)?;
    if d == 0 {
        return None;
    }
    // neighbors() is ascending, so the first match is the lowest id
    topo.neighbors(at).find(|u| dist.get(*u) == Some(d - 1))
}

/// Next hop of the un-overridden legacy routing from `at` towards `dst`.
pub fn legacy_next_hop(topo: &Topology, at: NodeId, dst: NodeId) -> Result<NodeId> {
    topo.require(at)?;
    let dist = shortest_distances(topo, dst)?;
    if at == dst {
        return Err(Error::InvalidPath(format!("next hop requested from {at} to itself")));
    }
    next_hop_from(topo, &dist, at).ok_or(Error::Unreachable { from: at, dst })
}

/// All-destinations legacy routing table for one topology snapshot.
#[derive(Debug, Clone)]
pub struct LegacyRouting {
    dist: BTreeMap<NodeId, Distances>,
    next: BTreeMap<(NodeId, NodeId), NodeId>,
}

impl LegacyRouting {
    pub fn new(topo: &Topology) -> Self {
        let mut dist = BTreeMap::new();
        let mut next = BTreeMap::new();
        for dst in topo.node_ids() {
            let d = shortest_distances(topo, dst).expect("node from topology");
            for (at, _) in d.iter() {
                if let Some(nh) = next_hop_from(topo, &d, at) {
                    next.insert((at, dst), nh);
                }
            }
            dist.insert(dst, d);
        }
        LegacyRouting { dist, next }
    }

    pub fn next_hop(&self, at: NodeId, dst: NodeId) -> Option<NodeId> {
        self.next.get(&(at, dst)).copied()
    }

    pub fn distance(&self, at: NodeId, dst: NodeId) -> Option<u32> {
        self.dist.get(&dst).and_then(|d| d.get(at))
    }

    pub fn distances_to(&self, dst: NodeId) -> Option<&Distances> {
        self.dist.get(&dst)
    }

    /// The default legacy path from `src` to `dst`.
    pub fn path(&self, src: NodeId, dst: NodeId) -> Option<Path> {
        self.distance(src, dst)?;
        let mut nodes = vec![src];
        let mut cur = src;
        while cur != dst {
            cur = self.next_hop(cur, dst)?;
            nodes.push(cur);
        }
        Some(Path(nodes))
    }
}

/// All simple paths from `src` to `dst` with at most `max_hops` edges, in lexicographic order.
pub fn enumerate_simple_paths(topo: &Topology, src: NodeId, dst: NodeId, max_hops: usize) -> Vec<Path> {
    let mut out = Vec::new();
    if src == dst || max_hops == 0 || !topo.contains(src) || !topo.contains(dst) {
        return out;
    }
    let mut stack = vec![src];
    let mut on_path = BTreeSet::from([src]);
    dfs_paths(topo, dst, max_hops, &mut stack, &mut on_path, &mut out);
    out
}

fn dfs_paths(
    topo: &Topology,
    dst: NodeId,
    max_hops: usize,
    stack: &mut Vec<NodeId>,
    on_path: &mut BTreeSet<NodeId>,
    out: &mut Vec<Path>,
) {
    let cur = *stack.last().unwrap();
    if cur == dst {
        out.push(Path(stack.clone()));
        return;
    }
    if stack.len() > max_hops {
        return;
    }
    // ascending neighbor order gives lexicographic output: no dst-terminated simple path
    // is a proper prefix of another
    let next: Vec<NodeId> = topo.neighbors(cur).filter(|n| !on_path.contains(n)).collect();
    for n in next {
        stack.push(n);
        on_path.insert(n);
        dfs_paths(topo, dst, max_hops, stack, on_path, out);
        on_path.remove(&n);
        stack.pop();
    }
}

/// Applies one timeline event and bumps the version. Repeated downs/ups are idempotent.
pub fn apply_event(topo: &Topology, ev: TopologyEvent) -> Result<Topology> {
    let mut t = topo.clone();
    match ev {
        TopologyEvent::LinkDown(k) | TopologyEvent::LinkUp(k) => {
            let (a, b) = k.endpoints();
            let link = t.links.get_mut(&k).ok_or(Error::UnknownLink(a, b))?;
            link.up = matches!(ev, TopologyEvent::LinkUp(_));
        }
        TopologyEvent::NodeCompromised(n) => {
            t.require(n)?;
            t.compromised.insert(n);
        }
    }
    t.version += 1;
    Ok(t)
}

/// Largest finite hop distance between any two nodes, `None` for graphs without links.
pub fn diameter(topo: &Topology) -> Option<u32> {
    let routing = LegacyRouting::new(topo);
    routing.dist.values().flat_map(|d| d.iter().map(|(_, h)| h)).filter(|h| *h > 0).max()
}

/// Latency-weighted shortest distances (ms) from `src` over up links (Dijkstra).
pub fn latency_distances(topo: &Topology, src: NodeId) -> Result<BTreeMap<NodeId, f64>> {
    topo.require(src)?;
    // latencies are positive finite floats, so their bit patterns order like the values
    let mut best: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0f64.to_bits(), src)));
    while let Some(Reverse((bits, u))) = heap.pop() {
        let d = f64::from_bits(bits);
        if best.contains_key(&u) {
            continue;
        }
        best.insert(u, d);
        for v in topo.neighbors(u) {
            if !best.contains_key(&v) {
                let w = topo.link(u, v).unwrap().latency_ms;
                heap.push(Reverse(((d + w).to_bits(), v)));
            }
        }
    }
    Ok(best)
}

/// The canonical eight-node coalition example: two teams, ten links of 10 ms.
pub fn fig4() -> Topology {
    crate::bundled::parse(crate::bundled::FIG4).expect("bundled scenario").topology
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(x: u32) -> NodeId {
        NodeId(x)
    }

    #[test]
    fn distances_on_fig4() {
        let t = fig4();
        let d = shortest_distances(&t, n(8)).unwrap();
        assert_eq!(d.get(n(2)), Some(2));
        assert_eq!(d.get(n(4)), Some(2));
        assert_eq!(d.get(n(8)), Some(0));
        assert_eq!(d.get(n(1)), Some(3));

        let t2 = apply_event(&t, TopologyEvent::LinkDown(LinkKey::between(5, 8))).unwrap();
        let d2 = shortest_distances(&t2, n(8)).unwrap();
        assert_eq!(d2.get(n(4)), Some(3));
        assert_eq!(
            LegacyRouting::new(&t2).path(n(4), n(8)),
            Some(Path::from_ids(&[4, 6, 7, 8]))
        );
    }

    #[test]
    fn unknown_destination() {
        assert_eq!(shortest_distances(&fig4(), n(99)), Err(Error::UnknownNode(n(99))));
    }

    #[test]
    fn disconnected_nodes_are_unreachable() {
        let t = Topology::from_edges(&[(1, 2), (3, 4)], 1.0).unwrap();
        let d = shortest_distances(&t, n(1)).unwrap();
        assert_eq!(d.get(n(3)), None);
        assert_eq!(legacy_next_hop(&t, n(3), n(1)), Err(Error::Unreachable { from: n(3), dst: n(1) }));
    }

    #[test]
    fn legacy_next_hops_on_fig4() {
        let t = fig4();
        assert_eq!(legacy_next_hop(&t, n(2), n(8)).unwrap(), n(5));
        assert_eq!(legacy_next_hop(&t, n(4), n(8)).unwrap(), n(5));
        assert_eq!(legacy_next_hop(&t, n(7), n(8)).unwrap(), n(8));
        // 1 has two equal-length options (2 and 3); lowest id wins
        assert_eq!(legacy_next_hop(&t, n(1), n(8)).unwrap(), n(2));
    }

    #[test]
    fn paths_from_2_to_8() {
        let t = fig4();
        let paths = enumerate_simple_paths(&t, n(2), n(8), 4);
        for p in [[2, 5, 8].as_slice(), &[2, 4, 5, 8], &[2, 4, 6, 7, 8]] {
            assert!(paths.contains(&Path::from_ids(p)), "missing {p:?}");
        }
        let mut sorted = paths.clone();
        sorted.sort();
        assert_eq!(paths, sorted);
        assert_eq!(enumerate_simple_paths(&t, n(7), n(8), 1), vec![Path::from_ids(&[7, 8])]);
    }

    #[test]
    fn link_events() {
        let t = fig4();
        let down = apply_event(&t, TopologyEvent::LinkDown(LinkKey::between(1, 2))).unwrap();
        assert!(!down.is_up(n(1), n(2)));
        assert_eq!(down.version(), t.version() + 1);
        let again = apply_event(&down, TopologyEvent::LinkDown(LinkKey::between(2, 1))).unwrap();
        assert!(!again.is_up(n(1), n(2)));

        let up = apply_event(&t, TopologyEvent::LinkUp(LinkKey::between(1, 2))).unwrap();
        assert_eq!(up.version(), t.version() + 1);
        assert_eq!(up.links().collect::<Vec<_>>(), t.links().collect::<Vec<_>>());

        assert_eq!(
            apply_event(&t, TopologyEvent::LinkDown(LinkKey::between(1, 8))),
            Err(Error::UnknownLink(n(1), n(8)))
        );
        let c = apply_event(&t, TopologyEvent::NodeCompromised(n(5))).unwrap();
        assert!(c.is_compromised(n(5)));
    }

    #[test]
    fn rejects_malformed_topologies() {
        assert_eq!(Topology::from_edges(&[(1, 1)], 1.0), Err(Error::SelfLoop(n(1))));
        assert_eq!(Topology::from_edges(&[(1, 2), (2, 1)], 1.0), Err(Error::DuplicateLink(n(1), n(2))));
        assert!(matches!(Topology::from_edges(&[(1, 2)], 0.0), Err(Error::InvalidTopology(_))));
        let nodes = vec![NodeRecord::soldier(1)];
        assert_eq!(Topology::new(nodes, vec![LinkRecord::new(1, 2, 1.0)]), Err(Error::UnknownNode(n(2))));
        let mut cl = NodeRecord::soldier(1);
        cl.kind = NodeKind::Cloudlet;
        assert!(Topology::new(vec![cl], vec![]).is_err());
    }

    #[test]
    fn path_validation() {
        let t = fig4();
        assert!(Path::from_ids(&[2, 4, 6, 7, 8]).validate(&t).is_ok());
        assert!(Path::from_ids(&[2, 8]).validate(&t).is_err());
        assert!(Path::from_ids(&[2, 4, 2]).validate(&t).is_err());
        assert!(Path::from_ids(&[2]).validate(&t).is_err());
    }

    #[test]
    fn latency_dijkstra() {
        let t = Topology::new(
            (1..=3).map(NodeRecord::soldier).collect(),
            vec![LinkRecord::new(1, 2, 5.0), LinkRecord::new(2, 3, 5.0), LinkRecord::new(1, 3, 20.0)],
        )
        .unwrap();
        let d = latency_distances(&t, n(1)).unwrap();
        assert_eq!(d[&n(3)], 10.0);
        assert_eq!(diameter(&t), Some(1));
    }
}
