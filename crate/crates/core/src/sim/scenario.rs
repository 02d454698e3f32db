use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::dataplane::DEFAULT_DETECTION_DELAY_US;
use crate::error::{Error, Result};
use crate::forwarding::DEFAULT_TTL;
use crate::netmodel::{LinkKey, NodeId, NodeKind, TeamId, Topology};
use crate::placement::{Organization, PlacementWeights};
use crate::policy::{Flow, NtkPolicy};
use crate::sim::energy::EnergyModel;

/// Default forwarding pause per reconfiguration, in ms.
///
/// Calibrated on the bundled reference scenario (three 10 ms hops, one reconfiguration every
/// 20 s at the gateway) to a 25% mean-delay overhead.
pub const DEFAULT_RECONF_PAUSE_MS: f64 = 570.0;
pub const DEFAULT_CONVERGENCE_MS: f64 = 2000.0;
pub const DEFAULT_RECOMPUTE_MS: f64 = 100.0;
pub const DEFAULT_CHECKPOINT_MS: f64 = 1000.0;

/// How the data plane reacts to link failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReactionMode {
    /// The controller is told, recomputes and reinstalls routes.
    Centralized,
    /// A legacy MANET protocol reconverges.
    ManetBackup,
    /// Precomputed stateful rules fail over locally.
    Delegated,
}

impl ReactionMode {
    pub const ALL: [ReactionMode; 3] = [ReactionMode::Centralized, ReactionMode::ManetBackup, ReactionMode::Delegated];

    pub fn as_str(&self) -> &'static str {
        match self {
            ReactionMode::Centralized => "centralized",
            ReactionMode::ManetBackup => "manet-backup",
            ReactionMode::Delegated => "delegated",
        }
    }
}

impl fmt::Display for ReactionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReactionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "centralized" => Ok(ReactionMode::Centralized),
            "manet-backup" => Ok(ReactionMode::ManetBackup),
            "delegated" => Ok(ReactionMode::Delegated),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub src: NodeId,
    pub dst: NodeId,
    pub category: String,
    pub rate_pps: f64,
    pub start_s: f64,
    pub end_s: f64,
}

impl FlowSpec {
    pub fn flow(&self) -> Flow {
        Flow { src: self.src, dst: self.dst, category: self.category.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    LinkDown(LinkKey),
    LinkUp(LinkKey),
    NodeCompromised(NodeId),
    /// Controller pushes a new configuration to one node.
    Reconfigure(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedEvent {
    pub time_ms: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub seed: u64,
    pub mode: ReactionMode,
    pub detection_delay_ms: f64,
    pub convergence_ms: f64,
    pub recompute_ms: f64,
    pub ttl: usize,
    /// Controller hosts; empty selects the lowest-id cloudlet, else the lowest-id candidate.
    pub controller_sites: Vec<NodeId>,
    pub organization: Organization,
    /// Forwarders per controller; `None` is unlimited.
    pub capacity: Option<usize>,
    pub max_sites: usize,
    pub weights: PlacementWeights,
    pub budget: usize,
    pub max_hops: Option<usize>,
    pub reconf_period_s: Option<f64>,
    pub reconf_nodes: Vec<NodeId>,
    pub reconf_pause_ms: f64,
    pub status_period_s: Option<f64>,
    pub energy: EnergyModel,
    pub duration_s: Option<f64>,
    pub checkpoint_ms: f64,
    /// Randomize each flow's injection phase within one inter-packet gap.
    pub jitter: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            seed: 1,
            mode: ReactionMode::Delegated,
            detection_delay_ms: DEFAULT_DETECTION_DELAY_US as f64 / 1000.0,
            convergence_ms: DEFAULT_CONVERGENCE_MS,
            recompute_ms: DEFAULT_RECOMPUTE_MS,
            ttl: DEFAULT_TTL,
            controller_sites: Vec::new(),
            organization: Organization::Flat,
            capacity: None,
            max_sites: 2,
            weights: PlacementWeights::default(),
            budget: 2,
            max_hops: None,
            reconf_period_s: None,
            reconf_nodes: Vec::new(),
            reconf_pause_ms: DEFAULT_RECONF_PAUSE_MS,
            status_period_s: None,
            energy: EnergyModel::default(),
            duration_s: None,
            checkpoint_ms: DEFAULT_CHECKPOINT_MS,
            jitter: true,
        }
    }
}

/// Everything one simulation run needs. SDN-capable nodes of the topology form the deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: Topology,
    pub teams: BTreeMap<TeamId, String>,
    pub policy: NtkPolicy,
    pub flows: Vec<FlowSpec>,
    pub events: Vec<TimedEvent>,
    pub params: Params,
}

impl Scenario {
    pub fn deployment(&self) -> BTreeSet<NodeId> {
        self.topology.sdn_nodes()
    }

    pub fn ntk_flows(&self) -> Vec<Flow> {
        let mut seen = BTreeSet::new();
        self.flows.iter().map(FlowSpec::flow).filter(|f| seen.insert(f.clone())).collect()
    }

    /// Controller hosts used by the simulator.
    pub fn controller_sites(&self) -> BTreeSet<NodeId> {
        if !self.params.controller_sites.is_empty() {
            return self.params.controller_sites.iter().copied().collect();
        }
        let t = &self.topology;
        t.nodes()
            .find(|n| n.kind == NodeKind::Cloudlet)
            .or_else(|| t.nodes().find(|n| n.controller_candidate))
            .map(|n| n.id)
            .into_iter()
            .collect()
    }

    pub fn with_mode(&self, mode: ReactionMode) -> Self {
        let mut s = self.clone();
        s.params.mode = mode;
        s
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.topology;
        let known = |n: NodeId| if t.contains(n) { Ok(()) } else { Err(Error::UnknownNode(n)) };
        let team_ids: BTreeSet<TeamId> = self.teams.keys().copied().collect();
        for n in t.nodes() {
            if !team_ids.contains(&n.team) {
                return Err(Error::InvalidScenario(format!("node {} belongs to undeclared team {}", n.id, n.team)));
            }
        }
        self.policy.check_teams(&team_ids)?;
        for f in &self.flows {
            known(f.src)?;
            known(f.dst)?;
            if f.src == f.dst {
                return Err(Error::InvalidScenario(format!("flow {}->{} loops on itself", f.src, f.dst)));
            }
            if self.policy.access_of(&f.category).is_none() {
                return Err(Error::InvalidScenario(format!("flow uses unknown category '{}'", f.category)));
            }
            if !(f.rate_pps > 0.0 && f.rate_pps.is_finite()) {
                return Err(Error::InvalidScenario(format!("flow {}->{} needs a positive rate", f.src, f.dst)));
            }
            if !(f.start_s >= 0.0 && f.end_s >= f.start_s && f.end_s.is_finite()) {
                return Err(Error::InvalidScenario(format!("flow {}->{} has an invalid time window", f.src, f.dst)));
            }
        }
        let mut last = 0.0;
        for e in &self.events {
            if !(e.time_ms >= last) || !e.time_ms.is_finite() {
                return Err(Error::InvalidScenario(format!("event times must be non-decreasing (at {} ms)", e.time_ms)));
            }
            last = e.time_ms;
            match e.kind {
                EventKind::LinkDown(k) | EventKind::LinkUp(k) => {
                    let (a, b) = k.endpoints();
                    if t.link(a, b).is_none() {
                        return Err(Error::UnknownLink(a, b));
                    }
                }
                EventKind::NodeCompromised(n) | EventKind::Reconfigure(n) => known(n)?,
            }
        }
        let p = &self.params;
        for n in p.controller_sites.iter().chain(&p.reconf_nodes) {
            known(*n)?;
        }
        for n in &p.controller_sites {
            if !t.node(*n).unwrap().controller_candidate {
                return Err(Error::InvalidScenario(format!("controller site {n} is not a candidate")));
            }
        }
        let non_negative = [
            ("detection_delay_ms", p.detection_delay_ms),
            ("convergence_ms", p.convergence_ms),
            ("recompute_ms", p.recompute_ms),
            ("reconf_pause_ms", p.reconf_pause_ms),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidScenario(format!("{name} must be a non-negative number")));
            }
        }
        for (name, v) in [("reconf_period_s", p.reconf_period_s), ("status_period_s", p.status_period_s), ("duration_s", p.duration_s)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidScenario(format!("{name} must be positive")));
                }
            }
        }
        if !(p.checkpoint_ms > 0.0) {
            return Err(Error::InvalidScenario("checkpoint_ms must be positive".into()));
        }
        if p.ttl == 0 {
            return Err(Error::InvalidScenario("ttl must be positive".into()));
        }
        Ok(())
    }
}
