//! Stateful data plane: per-link two-state machines and rules that match on them, so that an SDN
//! node can fail over to a precomputed backup next hop without asking its controller.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::forwarding::{walk, ForwardingView, WalkOutcome};
use crate::netmodel::{shortest_distances, LegacyRouting, LinkKey, NodeId, Topology, TopologyEvent};
use crate::policy::{
    match_rule, AccessId, Action, Decision, FlowRule, Header, LinkState, LinkStateView, Match, RuleTable,
    StatePredicate,
};

/// Priority of failover rules; between NTK forward and NTK drop rules.
pub const BACKUP_PRIORITY: i32 = 150;

/// Default failure detection delay, in microseconds.
pub const DEFAULT_DETECTION_DELAY_US: u64 = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkStateMachine {
    pub link: LinkKey,
    pub state: LinkState,
    pub detection_delay_us: u64,
}

impl LinkStateMachine {
    pub fn new(link: LinkKey, detection_delay_us: u64) -> Self {
        LinkStateMachine { link, state: LinkState::Up, detection_delay_us }
    }

    /// Next state after observing `ev`; only events on the monitored link are accepted.
    pub fn transition(&self, ev: TopologyEvent) -> Result<Self> {
        let (link, state) = match ev {
            TopologyEvent::LinkDown(l) => (l, LinkState::Down),
            TopologyEvent::LinkUp(l) => (l, LinkState::Up),
            TopologyEvent::NodeCompromised(n) => {
                return Err(Error::MismatchedLink { expected: self.link.to_string(), got: format!("node {n}") })
            }
        };
        if link != self.link {
            return Err(Error::MismatchedLink { expected: self.link.to_string(), got: link.to_string() });
        }
        Ok(LinkStateMachine { state, ..*self })
    }

    /// Time at which an event at `event_time_us` takes effect on this machine.
    pub fn detection_time(&self, event_time_us: u64) -> u64 {
        event_time_us + self.detection_delay_us
    }
}

impl LinkStateView for BTreeMap<LinkKey, LinkStateMachine> {
    fn link_state(&self, link: LinkKey) -> Option<LinkState> {
        self.get(&link).map(|m| m.state)
    }
}

/// One machine per incident link of `node`.
pub fn monitors_for(topo: &Topology, node: NodeId, detection_delay_us: u64) -> BTreeMap<LinkKey, LinkStateMachine> {
    topo.all_neighbors(node)
        .map(|m| {
            let k = LinkKey::new(node, m);
            let mut machine = LinkStateMachine::new(k, detection_delay_us);
            if !topo.is_up(node, m) {
                machine.state = LinkState::Down;
            }
            (k, machine)
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BackupRules {
    pub rules: Vec<FlowRule>,
    /// Destinations without a loop-free alternative (or without a primary route).
    pub unprotected: Vec<NodeId>,
}

/// Precomputes, for every destination, a rule pair at `node` that forwards on the primary legacy
/// next hop while that link is UP and on a backup neighbor once it is DOWN.
///
/// The backup is the lowest-id neighbor `u` (other than the primary) that still reaches the
/// destination without the monitored link and whose own legacy route neither returns to `node`
/// nor crosses the monitored link, so the rerouted packet cannot bounce back.
pub fn precompute_backup_rules(
    topo: &Topology,
    node: NodeId,
    dsts: &BTreeSet<NodeId>,
) -> Result<BackupRules> {
    if !topo.contains(node) {
        return Err(Error::UnknownNode(node));
    }
    let routing = LegacyRouting::new(topo);
    let mut out = BackupRules::default();
    for &dst in dsts.iter().filter(|d| **d != node) {
        if !topo.contains(dst) {
            return Err(Error::UnknownNode(dst));
        }
        let Some(primary) = routing.next_hop(node, dst) else {
            out.unprotected.push(dst);
            continue;
        };
        let link = LinkKey::new(node, primary);
        let up = FlowRule {
            matcher: Match {
                dst: Some(dst),
                state: Some(StatePredicate { link, state: LinkState::Up }),
                ..Match::default()
            },
            action: Action::Forward(primary),
            priority: BACKUP_PRIORITY,
        };
        out.rules.push(up);

        let without = topo.with_links_down(&[link])?;
        let dist = shortest_distances(&without, dst)?;
        let alternative = without
            .neighbors(node)
            .filter(|u| *u != primary && dist.get(*u).is_some())
            .find(|u| returns_safely(&routing, *u, dst, node, link));
        match alternative {
            Some(alt) => {
                let mut down = up;
                down.matcher.state = Some(StatePredicate { link, state: LinkState::Down });
                down.action = Action::Forward(alt);
                out.rules.push(down);
            }
            None => out.unprotected.push(dst),
        }
    }
    Ok(out)
}

/// Legacy route from `from` to `dst` avoids `node` and `link`.
fn returns_safely(routing: &LegacyRouting, from: NodeId, dst: NodeId, node: NodeId, link: LinkKey) -> bool {
    let Some(path) = routing.path(from, dst) else { return false };
    !path.nodes().contains(&node) && path.nodes().windows(2).all(|w| LinkKey::new(w[0], w[1]) != link)
}

/// Backup tables for every node in `nodes`, protecting every destination.
pub fn backup_tables(
    topo: &Topology,
    nodes: &BTreeSet<NodeId>,
) -> Result<(BTreeMap<NodeId, RuleTable>, BTreeMap<NodeId, Vec<NodeId>>)> {
    let dsts: BTreeSet<NodeId> = topo.node_ids().collect();
    let mut tables = BTreeMap::new();
    let mut unprotected = BTreeMap::new();
    for &n in nodes {
        let b = precompute_backup_rules(topo, n, &dsts)?;
        tables.insert(n, RuleTable::new(n, b.rules)?);
        if !b.unprotected.is_empty() {
            unprotected.insert(n, b.unprotected);
        }
    }
    Ok((tables, unprotected))
}

/// Table lookup with the node's current machine states.
pub fn stateful_forward(
    table: &RuleTable,
    machines: &BTreeMap<LinkKey, LinkStateMachine>,
    header: &Header,
) -> Decision {
    match_rule(table, header, machines)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopCheck {
    pub loop_free: bool,
    pub cycle: Option<Vec<NodeId>>,
}

/// Walks every (src, dst) pair through the composed forwarding function with `failed` links down.
/// Legacy nodes keep their pre-failure routes; SDN nodes see the failures through their machines.
pub fn check_loop_free(topo: &Topology, tables: &BTreeMap<NodeId, RuleTable>, failed: &[LinkKey]) -> Result<LoopCheck> {
    let routing = LegacyRouting::new(topo);
    let physical = topo.with_links_down(failed)?;
    let view = ForwardingView::new(&routing, &physical, tables);
    let mut accesses: BTreeSet<AccessId> =
        tables.values().flat_map(|t| t.rules().iter().filter_map(|r| r.matcher.access)).collect();
    if accesses.is_empty() {
        accesses.insert(AccessId(0));
    }
    for src in topo.node_ids() {
        for dst in topo.node_ids().filter(|d| *d != src) {
            for &access in &accesses {
                let outcome = walk(&view, src, &Header { src, dst, access });
                match outcome {
                    WalkOutcome::Looped(cycle) => return Ok(LoopCheck { loop_free: false, cycle: Some(cycle) }),
                    WalkOutcome::TtlExpired(p) => {
                        return Ok(LoopCheck { loop_free: false, cycle: Some(p.nodes().to_vec()) })
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(LoopCheck { loop_free: true, cycle: None })
}
