//! Need-to-know (NTK) policies for coalition teams and the flow-rule tables that enforce them.
//!
//! Packets carry a `(source id, destination id, access id)` triple. Each information category has
//! one access id and each team is cleared for a set of access ids. The compiler installs a rule
//! for every flow at the first SDN node on its default legacy path: forward if the destination's
//! team is cleared for the category, drop otherwise. Only delivery is restricted; transit through
//! nodes of other teams is not a violation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::forwarding::{walk, ForwardingView, WalkOutcome};
use crate::netmodel::{LegacyRouting, LinkKey, NodeId, Path, TeamId, Topology};

/// Priority of compiled NTK drop rules. Above the failover rules so that no backup path can
/// deliver a denied packet.
pub const NTK_DROP_PRIORITY: i32 = 200;
/// Priority of compiled NTK forward rules. Below the failover rules so that a forward rule never
/// pins traffic onto a failed link.
pub const NTK_FORWARD_PRIORITY: i32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AccessId(pub u32);

impl fmt::Display for AccessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NtkPolicy {
    categories: BTreeMap<String, AccessId>,
    clearances: BTreeMap<TeamId, BTreeSet<AccessId>>,
}

impl NtkPolicy {
    pub fn new(
        categories: impl IntoIterator<Item = (String, AccessId)>,
        clearances: BTreeMap<TeamId, BTreeSet<AccessId>>,
    ) -> Result<Self> {
        let mut cats = BTreeMap::new();
        let mut used = BTreeSet::new();
        for (name, id) in categories {
            if !used.insert(id) {
                return Err(Error::InvalidPolicy(format!("access id {id} used by two categories")));
            }
            if cats.insert(name.clone(), id).is_some() {
                return Err(Error::InvalidPolicy(format!("category '{name}' declared twice")));
            }
        }
        for ids in clearances.values() {
            if let Some(bad) = ids.iter().find(|a| !used.contains(a)) {
                return Err(Error::InvalidPolicy(format!("clearance for undeclared access id {bad}")));
            }
        }
        Ok(NtkPolicy { categories: cats, clearances })
    }

    pub fn categories(&self) -> impl Iterator<Item = (&str, AccessId)> {
        self.categories.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn clearances(&self) -> &BTreeMap<TeamId, BTreeSet<AccessId>> {
        &self.clearances
    }

    pub fn access_of(&self, category: &str) -> Option<AccessId> {
        self.categories.get(category).copied()
    }

    pub fn category_of(&self, access: AccessId) -> Option<&str> {
        self.categories.iter().find(|(_, a)| **a == access).map(|(k, _)| k.as_str())
    }

    pub fn is_cleared(&self, team: TeamId, access: AccessId) -> bool {
        self.clearances.get(&team).is_some_and(|s| s.contains(&access))
    }

    /// Every team named in the clearances must exist among `teams`.
    pub fn check_teams(&self, teams: &BTreeSet<TeamId>) -> Result<()> {
        match self.clearances.keys().find(|t| !teams.contains(t)) {
            Some(t) => Err(Error::InvalidPolicy(format!("clearance for unknown team {t}"))),
            None => Ok(()),
        }
    }

    /// Whether a packet of `access` may be delivered to `dst`.
    pub fn allows(&self, topo: &Topology, dst: NodeId, access: AccessId) -> bool {
        topo.node(dst).is_some_and(|n| self.is_cleared(n.team, access))
    }
}

/// A communication demand between two nodes for one information category.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Flow {
    pub src: NodeId,
    pub dst: NodeId,
    pub category: String,
}

impl Flow {
    pub fn new(src: u32, dst: u32, category: &str) -> Self {
        Flow { src: NodeId(src), dst: NodeId(dst), category: category.to_string() }
    }
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}:{}", self.src, self.dst, self.category)
    }
}

/// Packet header fields a rule can match on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Header {
    pub src: NodeId,
    pub dst: NodeId,
    pub access: AccessId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkState {
    Up,
    Down,
}

impl LinkState {
    pub fn as_str(&self) -> &'static str {
        match self {
            LinkState::Up => "UP",
            LinkState::Down => "DOWN",
        }
    }
}

/// Requires the locally tracked state of `link` to be `state`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StatePredicate {
    pub link: LinkKey,
    pub state: LinkState,
}

/// Source of link states for state predicates.
pub trait LinkStateView {
    fn link_state(&self, link: LinkKey) -> Option<LinkState>;
}

impl LinkStateView for BTreeMap<LinkKey, LinkState> {
    fn link_state(&self, link: LinkKey) -> Option<LinkState> {
        self.get(&link).copied()
    }
}

/// No tracked state: every state predicate fails.
pub struct NoLinkState;

impl LinkStateView for NoLinkState {
    fn link_state(&self, _: LinkKey) -> Option<LinkState> {
        None
    }
}

/// `None` fields are wildcards.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Match {
    pub src: Option<NodeId>,
    pub dst: Option<NodeId>,
    pub access: Option<AccessId>,
    pub state: Option<StatePredicate>,
}

impl Match {
    pub fn exact(h: Header) -> Self {
        Match { src: Some(h.src), dst: Some(h.dst), access: Some(h.access), state: None }
    }

    /// Number of non-wildcard fields, the state predicate included.
    pub fn specificity(&self) -> u8 {
        self.src.is_some() as u8 + self.dst.is_some() as u8 + self.access.is_some() as u8 + self.state.is_some() as u8
    }

    pub fn matches(&self, h: &Header, states: &dyn LinkStateView) -> bool {
        fn field<T: PartialEq>(m: Option<T>, v: T) -> bool {
            m.is_none_or(|x| x == v)
        }
        field(self.src, h.src)
            && field(self.dst, h.dst)
            && field(self.access, h.access)
            && self.state.is_none_or(|p| states.link_state(p.link) == Some(p.state))
    }

    /// Whether some header and link state satisfy both matches.
    pub fn overlaps(&self, other: &Match) -> bool {
        fn field<T: PartialEq>(a: Option<T>, b: Option<T>) -> bool {
            match (a, b) {
                (Some(x), Some(y)) => x == y,
                _ => true,
            }
        }
        let state_ok = match (self.state, other.state) {
            (Some(p), Some(q)) => p.link != q.link || p.state == q.state,
            _ => true,
        };
        field(self.src, other.src) && field(self.dst, other.dst) && field(self.access, other.access) && state_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Forward(NodeId),
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowRule {
    pub matcher: Match,
    pub action: Action,
    pub priority: i32,
}

/// Outcome of a table lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Forward(NodeId),
    Drop,
    /// No rule matched; the node forwards like a legacy node.
    Legacy,
}

/// Rules of one node, sorted by priority then specificity (both descending).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTable {
    node: NodeId,
    rules: Vec<FlowRule>,
}

impl RuleTable {
    pub fn empty(node: NodeId) -> Self {
        RuleTable { node, rules: Vec::new() }
    }

    /// Sorts `rules` and rejects full ties: two overlapping rules with equal priority and
    /// specificity but different actions. Exact duplicates are merged.
    pub fn new(node: NodeId, mut rules: Vec<FlowRule>) -> Result<Self> {
        rules.sort_by(|a, b| {
            b.priority
                .cmp(&a.priority)
                .then(b.matcher.specificity().cmp(&a.matcher.specificity()))
                .then(a.matcher.cmp(&b.matcher))
                .then(a.action.cmp(&b.action))
        });
        rules.dedup();
        for (i, a) in rules.iter().enumerate() {
            for b in rules[i + 1..].iter() {
                if a.priority != b.priority || a.matcher.specificity() != b.matcher.specificity() {
                    break;
                }
                if a.action != b.action && a.matcher.overlaps(&b.matcher) {
                    return Err(Error::ConflictingRules {
                        node,
                        detail: format!("{} vs {}", describe(a), describe(b)),
                    });
                }
            }
        }
        Ok(RuleTable { node, rules })
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn rules(&self) -> &[FlowRule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    /// New table with `extra` merged in.
    pub fn merged(&self, extra: impl IntoIterator<Item = FlowRule>) -> Result<Self> {
        let mut rules = self.rules.clone();
        rules.extend(extra);
        RuleTable::new(self.node, rules)
    }

    /// New table without the rule at `index`.
    pub fn without(&self, index: usize) -> Self {
        let mut rules = self.rules.clone();
        rules.remove(index);
        RuleTable { node: self.node, rules }
    }
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "*".to_string(), |x| x.to_string())
}

/// One-line rendering used in dumps and diagnostics.
pub fn describe(r: &FlowRule) -> String {
    let m = &r.matcher;
    let state = m.state.map_or_else(|| "*".to_string(), |p| format!("{}={}", p.link, p.state.as_str()));
    let action = match r.action {
        Action::Forward(n) => format!("forward({n})"),
        Action::Drop => "drop".to_string(),
    };
    format!(
        "prio={} src={} dst={} access={} state={} -> {}",
        r.priority,
        opt(m.src),
        opt(m.dst),
        opt(m.access),
        state,
        action
    )
}

/// First matching rule decides; no match falls through to legacy forwarding.
pub fn match_rule(table: &RuleTable, header: &Header, states: &dyn LinkStateView) -> Decision {
    table
        .rules
        .iter()
        .find(|r| r.matcher.matches(header, states))
        .map_or(Decision::Legacy, |r| match r.action {
            Action::Forward(n) => Decision::Forward(n),
            Action::Drop => Decision::Drop,
        })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverageReport {
    pub covered: Vec<Flow>,
    /// No SDN node before the destination on the default path.
    pub unenforceable: Vec<Flow>,
    /// Destination unreachable from the source.
    pub unroutable: Vec<Flow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledPolicy {
    pub tables: BTreeMap<NodeId, RuleTable>,
    pub coverage: CoverageReport,
}

fn header_of(policy: &NtkPolicy, flow: &Flow) -> Result<Header> {
    let access = policy
        .access_of(&flow.category)
        .ok_or_else(|| Error::InvalidPolicy(format!("unknown category '{}'", flow.category)))?;
    Ok(Header { src: flow.src, dst: flow.dst, access })
}

fn check_flow(topo: &Topology, flow: &Flow) -> Result<()> {
    for n in [flow.src, flow.dst] {
        if !topo.contains(n) {
            return Err(Error::UnknownNode(n));
        }
    }
    Ok(())
}

/// First node of `S` on `path`, destination excluded.
fn enforcement_point(path: &Path, upgrades: &BTreeSet<NodeId>) -> Option<(usize, NodeId)> {
    let nodes = path.nodes();
    nodes[..nodes.len() - 1].iter().copied().enumerate().find(|(_, n)| upgrades.contains(n))
}

/// Compiles `flows` into per-node tables for the SDN nodes in `upgrades`.
///
/// A compromised destination is treated as cleared for nothing.
pub fn compile_policy(
    policy: &NtkPolicy,
    topo: &Topology,
    upgrades: &BTreeSet<NodeId>,
    flows: &[Flow],
) -> Result<CompiledPolicy> {
    if let Some(n) = upgrades.iter().find(|n| !topo.contains(**n)) {
        return Err(Error::UnknownNode(*n));
    }
    let routing = LegacyRouting::new(topo);
    let mut rules: BTreeMap<NodeId, Vec<FlowRule>> = upgrades.iter().map(|n| (*n, Vec::new())).collect();
    let mut coverage = CoverageReport::default();
    for flow in flows {
        check_flow(topo, flow)?;
        let header = header_of(policy, flow)?;
        let Some(path) = routing.path(flow.src, flow.dst).filter(|p| p.hops() > 0) else {
            coverage.unroutable.push(flow.clone());
            continue;
        };
        let Some((idx, at)) = enforcement_point(&path, upgrades) else {
            coverage.unenforceable.push(flow.clone());
            continue;
        };
        let cleared = !topo.is_compromised(flow.dst) && policy.allows(topo, flow.dst, header.access);
        let rule = if cleared {
            FlowRule {
                matcher: Match::exact(header),
                action: Action::Forward(path.nodes()[idx + 1]),
                priority: NTK_FORWARD_PRIORITY,
            }
        } else {
            FlowRule { matcher: Match::exact(header), action: Action::Drop, priority: NTK_DROP_PRIORITY }
        };
        rules.get_mut(&at).unwrap().push(rule);
        coverage.covered.push(flow.clone());
    }
    let tables = rules
        .into_iter()
        .map(|(n, r)| Ok((n, RuleTable::new(n, r)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(CompiledPolicy { tables, coverage })
}

/// A packet delivered to a destination that is not cleared for its category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub flow: Flow,
    pub path: Path,
}

/// Walks one packet of every flow through the forwarding pipeline and reports NTK violations.
///
/// Only tables of nodes in `upgrades` are consulted; other nodes forward on legacy routes.
pub fn verify_ntk(
    topo: &Topology,
    upgrades: &BTreeSet<NodeId>,
    policy: &NtkPolicy,
    flows: &[Flow],
    tables: &BTreeMap<NodeId, RuleTable>,
) -> Vec<Violation> {
    let routing = LegacyRouting::new(topo);
    let active: BTreeMap<NodeId, RuleTable> =
        tables.iter().filter(|(n, _)| upgrades.contains(n)).map(|(n, t)| (*n, t.clone())).collect();
    let view = ForwardingView::new(&routing, topo, &active);
    let mut out = Vec::new();
    for flow in flows {
        let Ok(header) = header_of(policy, flow) else { continue };
        if let WalkOutcome::Delivered(path) = walk(&view, flow.src, &header) {
            if !policy.allows(topo, flow.dst, header.access) {
                out.push(Violation { flow: flow.clone(), path });
            }
        }
    }
    out
}

/// Splits flows into those whose default path crosses an SDN node before the destination and
/// those that no SDN node can police.
pub fn enforcement_coverage(
    topo: &Topology,
    upgrades: &BTreeSet<NodeId>,
    flows: &[Flow],
) -> (Vec<Flow>, Vec<Flow>) {
    let routing = LegacyRouting::new(topo);
    flows.iter().cloned().partition(|f| {
        routing
            .path(f.src, f.dst)
            .filter(|p| p.hops() > 0)
            .is_some_and(|p| enforcement_point(&p, upgrades).is_some())
    })
}
