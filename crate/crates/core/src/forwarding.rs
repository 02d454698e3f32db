//! Hop-by-hop walk of a single packet through a composed forwarding function.
//!
//! SDN nodes consult their rule table; nodes without a table, and table misses, follow the legacy
//! routes of the given snapshot. Link predicates read the physical link state, i.e. every state
//! machine is assumed to have already detected the current failures.

use std::collections::{BTreeMap, BTreeSet};

use crate::netmodel::{LegacyRouting, LinkKey, NodeId, Path, Topology};
use crate::policy::{match_rule, Decision, Header, LinkState, LinkStateView, RuleTable};

/// Default packet time-to-live in hops.
pub const DEFAULT_TTL: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WalkOutcome {
    Delivered(Path),
    /// A drop rule fired at the last node of the path.
    Dropped(Path),
    /// Next hop is unreachable or over a down link.
    Lost(Path),
    /// The walk revisited a node; the cycle starts and ends at the repeated node.
    Looped(Vec<NodeId>),
    TtlExpired(Path),
}

impl WalkOutcome {
    pub fn terminates(&self) -> bool {
        !matches!(self, WalkOutcome::Looped(_) | WalkOutcome::TtlExpired(_))
    }
}

pub struct ForwardingView<'a> {
    pub routes: &'a LegacyRouting,
    pub physical: &'a Topology,
    pub tables: &'a BTreeMap<NodeId, RuleTable>,
    pub ttl: usize,
}

impl<'a> ForwardingView<'a> {
    pub fn new(routes: &'a LegacyRouting, physical: &'a Topology, tables: &'a BTreeMap<NodeId, RuleTable>) -> Self {
        ForwardingView { routes, physical, tables, ttl: DEFAULT_TTL }
    }

    /// Next hop chosen at `at`, or the terminal outcome kind.
    pub fn decide(&self, at: NodeId, header: &Header) -> Decision {
        let decision = match self.tables.get(&at) {
            Some(t) => match_rule(t, header, &PhysicalState(self.physical)),
            None => Decision::Legacy,
        };
        match decision {
            Decision::Legacy => match self.routes.next_hop(at, header.dst) {
                Some(n) => Decision::Forward(n),
                None => Decision::Legacy,
            },
            d => d,
        }
    }
}

struct PhysicalState<'a>(&'a Topology);

impl LinkStateView for PhysicalState<'_> {
    fn link_state(&self, link: LinkKey) -> Option<LinkState> {
        let (a, b) = link.endpoints();
        self.0.link(a, b).map(|l| if l.up { LinkState::Up } else { LinkState::Down })
    }
}

pub fn walk(view: &ForwardingView<'_>, src: NodeId, header: &Header) -> WalkOutcome {
    let mut nodes = vec![src];
    let mut seen = BTreeSet::from([src]);
    let mut at = src;
    loop {
        if at == header.dst {
            return WalkOutcome::Delivered(Path::new(nodes));
        }
        if nodes.len() > view.ttl {
            return WalkOutcome::TtlExpired(Path::new(nodes));
        }
        let next = match view.decide(at, header) {
            Decision::Forward(n) => n,
            Decision::Drop => return WalkOutcome::Dropped(Path::new(nodes)),
            Decision::Legacy => return WalkOutcome::Lost(Path::new(nodes)),
        };
        if !view.physical.is_up(at, next) {
            return WalkOutcome::Lost(Path::new(nodes));
        }
        if !seen.insert(next) {
            // forwarding is a function of (node, header), so a revisit repeats forever
            let start = nodes.iter().position(|n| *n == next).unwrap();
            let mut cycle = nodes[start..].to_vec();
            cycle.push(next);
            return WalkOutcome::Looped(cycle);
        }
        nodes.push(next);
        at = next;
    }
}
