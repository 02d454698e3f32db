//! Deterministic discrete-event simulation of packet flows over a hybrid SDN ad hoc network.
//!
//! Time is kept in integer microseconds. Events are processed in `(time, sequence)` order, where
//! the sequence number is the order of scheduling, so a `(scenario, seed)` pair always yields the
//! same trace. Packets are individual and never queue; the only source of extra delay is a node
//! that is paused by a reconfiguration.
//!
//! Failure handling depends on [`ReactionMode`]:
//!
//! * centralized: the lower-id SDN endpoint reports to its controller; routes and tables are
//!   reinstalled after twice the controller path latency plus a recompute constant,
//! * manet-backup: nothing beyond the legacy protocol,
//! * delegated: endpoint state machines flip after the detection delay and precomputed stateful
//!   rules take over.
//!
//! In every mode the legacy protocol reconverges on the post-change topology after the
//! convergence delay, so failures that no faster mechanism covers are recovered then.

pub mod energy;
mod scenario;

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use self::scenario::*;
use crate::dataplane::{backup_tables, monitors_for, stateful_forward, LinkStateMachine};
use crate::error::{Error, Result};
use crate::netmodel::{apply_event, latency_distances, LegacyRouting, LinkKey, NodeId, Topology, TopologyEvent};
use crate::placement::assign_forwarders;
use crate::policy::{compile_policy, Decision, Header, LinkState, RuleTable};
use crate::sim::energy::{energy_model, periodic_count};

/// Converts milliseconds to integer microseconds.
pub fn ms_to_us(ms: f64) -> u64 {
    (ms * 1000.0).round().max(0.0) as u64
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub injected: u64,
    pub delivered: u64,
    pub dropped_policy: u64,
    pub dropped_loss: u64,
    pub in_flight: u64,
    pub mean_delivery_delay_ms: f64,
    /// One entry per link failure that was recovered, in failure order.
    pub recovery_latency_ms: Vec<f64>,
    pub ntk_violations: u64,
    pub energy: BTreeMap<NodeId, f64>,
    pub controller_messages: u64,
    /// Packets whose TTL ran out, a forwarding-loop diagnostic (also counted as loss).
    pub ttl_expired: u64,
}

impl Metrics {
    pub fn total_energy(&self) -> f64 {
        self.energy.values().sum()
    }

    pub fn is_conserved(&self) -> bool {
        self.injected == self.delivered + self.dropped_policy + self.dropped_loss + self.in_flight
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checkpoint {
    pub time_us: u64,
    pub injected: u64,
    pub delivered: u64,
    pub dropped_policy: u64,
    pub dropped_loss: u64,
    pub in_flight: u64,
}

impl Checkpoint {
    pub fn is_conserved(&self) -> bool {
        self.injected == self.delivered + self.dropped_policy + self.dropped_loss + self.in_flight
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FailureRecord {
    pub link: LinkKey,
    pub time_us: u64,
    pub recovered_us: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub lines: Vec<String>,
    pub checkpoints: Vec<Checkpoint>,
    pub failures: Vec<FailureRecord>,
    /// Time of every controller message.
    pub controller_message_times: Vec<u64>,
}

impl SimTrace {
    pub fn text(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            s.push_str(l);
            s.push('\n');
        }
        s
    }

    /// Controller messages sent in the closed interval `[from_us, to_us]`.
    pub fn controller_messages_between(&self, from_us: u64, to_us: u64) -> usize {
        self.controller_message_times.iter().filter(|t| (from_us..=to_us).contains(*t)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventBody {
    PacketInject { flow: usize },
    PacketHop { packet: u64, at: NodeId },
    LinkDown(LinkKey),
    LinkUp(LinkKey),
    NodeCompromised(NodeId),
    Detect { node: NodeId, link: LinkKey, state: LinkState, failure: Option<usize> },
    ControllerRttComplete { failure: Option<usize> },
    ReconvergenceComplete { failure: Option<usize>, snapshot: usize },
    Reconfigure(NodeId),
    NetworkReconfigure { failure: Option<usize> },
    StatusUpdate(NodeId),
    Checkpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Queued {
    time: u64,
    seq: u64,
    body: EventBody,
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
struct Packet {
    flow: usize,
    header: Header,
    injected_at: u64,
    hops: usize,
}

struct FlowState {
    header: Header,
    start_us: u64,
    end_us: u64,
    phase_us: u64,
    rate_pps: f64,
    sent: u64,
}

impl FlowState {
    fn time_of(&self, k: u64) -> u64 {
        self.start_us + self.phase_us + (k as f64 * 1e6 / self.rate_pps).round() as u64
    }
}

struct Engine<'a> {
    scenario: &'a Scenario,
    mode: ReactionMode,
    sdn: BTreeSet<NodeId>,
    queue: BinaryHeap<Reverse<Queued>>,
    seq: u64,
    physical: Topology,
    /// Snapshot legacy routing currently forwards on.
    routes_topo: Topology,
    routes: LegacyRouting,
    tables: BTreeMap<NodeId, RuleTable>,
    /// Controller-compiled policy rules, kept so failover rules can be re-derived on their own.
    policy_tables: BTreeMap<NodeId, RuleTable>,
    machines: BTreeMap<NodeId, BTreeMap<LinkKey, LinkStateMachine>>,
    paused_until: BTreeMap<NodeId, u64>,
    /// Physical topology at each link change, what the legacy protocol converges to.
    snapshots: Vec<Topology>,
    controller_of: BTreeMap<NodeId, NodeId>,
    sites: BTreeSet<NodeId>,
    flows: Vec<FlowState>,
    packets: BTreeMap<u64, Packet>,
    next_packet: u64,
    reconfigurations: BTreeMap<NodeId, u64>,
    status_updates: BTreeMap<NodeId, u64>,
    delay_sum_us: u128,
    metrics: Metrics,
    trace: SimTrace,
}

/// Runs one simulation. `seed` overrides the scenario's own seed.
pub fn run(scenario: &Scenario, seed: u64) -> Result<(SimTrace, Metrics)> {
    scenario.validate()?;
    let mut engine = Engine::new(scenario, seed)?;
    engine.run();
    Ok(engine.finish())
}

/// Runs all three reaction modes on the same scenario and seed.
pub fn compare_modes(scenario: &Scenario) -> Result<Vec<(ReactionMode, SimTrace, Metrics)>> {
    ReactionMode::ALL
        .iter()
        .map(|m| {
            let (trace, metrics) = run(&scenario.with_mode(*m), scenario.params.seed)?;
            Ok((*m, trace, metrics))
        })
        .collect()
}

/// Relative increase of the mean delivery delay caused by reconfigurations.
pub fn delay_overhead(with: &Metrics, without: &Metrics) -> Result<f64> {
    if without.mean_delivery_delay_ms == 0.0 {
        return Err(Error::InvalidScenario("baseline delivery delay is zero".into()));
    }
    Ok((with.mean_delivery_delay_ms - without.mean_delivery_delay_ms) / without.mean_delivery_delay_ms)
}

impl<'a> Engine<'a> {
    fn new(scenario: &'a Scenario, seed: u64) -> Result<Self> {
        let params = &scenario.params;
        let topo = scenario.topology.clone();
        let sdn = scenario.deployment();
        let sites = scenario.controller_sites();
        let controller_of = if sites.is_empty() {
            BTreeMap::new()
        } else {
            assign_forwarders(&topo, &sites, params.capacity.unwrap_or(usize::MAX))?.map
        };
        let delay_us = ms_to_us(params.detection_delay_ms);
        let machines = sdn.iter().map(|n| (*n, monitors_for(&topo, *n, delay_us))).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut flows = Vec::new();
        for f in &scenario.flows {
            let access = scenario.policy.access_of(&f.category).expect("validated");
            let gap_us = (1e6 / f.rate_pps).round().max(1.0) as u64;
            let phase_us = if params.jitter { rng.gen_range(0..gap_us) } else { 0 };
            flows.push(FlowState {
                header: Header { src: f.src, dst: f.dst, access },
                start_us: ms_to_us(f.start_s * 1000.0),
                end_us: ms_to_us(f.end_s * 1000.0),
                phase_us,
                rate_pps: f.rate_pps,
                sent: 0,
            });
        }

        let mut engine = Engine {
            scenario,
            mode: params.mode,
            sdn,
            queue: BinaryHeap::new(),
            seq: 0,
            routes: LegacyRouting::new(&topo),
            routes_topo: topo.clone(),
            physical: topo,
            tables: BTreeMap::new(),
            policy_tables: BTreeMap::new(),
            machines,
            paused_until: BTreeMap::new(),
            snapshots: Vec::new(),
            controller_of,
            sites,
            flows,
            packets: BTreeMap::new(),
            next_packet: 0,
            reconfigurations: BTreeMap::new(),
            status_updates: BTreeMap::new(),
            delay_sum_us: 0,
            metrics: Metrics::default(),
            trace: SimTrace::default(),
        };
        engine.rebuild_tables()?;
        engine.schedule_initial();
        Ok(engine)
    }

    fn horizon_us(&self) -> u64 {
        let s = self.scenario;
        if let Some(d) = s.params.duration_s {
            return ms_to_us(d * 1000.0);
        }
        let flow_end = s.flows.iter().map(|f| ms_to_us(f.end_s * 1000.0)).max().unwrap_or(0);
        let last_event = s.events.iter().map(|e| ms_to_us(e.time_ms)).max().unwrap_or(0);
        flow_end.max(last_event)
    }

    fn schedule(&mut self, time: u64, body: EventBody) {
        self.queue.push(Reverse(Queued { time, seq: self.seq, body }));
        self.seq += 1;
    }

    fn schedule_initial(&mut self) {
        let horizon = self.horizon_us();
        let params = &self.scenario.params;
        for (i, f) in self.flows.iter().enumerate() {
            let first = f.time_of(0);
            if first < f.end_us {
                self.queue.push(Reverse(Queued { time: first, seq: self.seq, body: EventBody::PacketInject { flow: i } }));
                self.seq += 1;
            }
        }
        let events: Vec<(u64, EventBody)> = self
            .scenario
            .events
            .iter()
            .map(|e| {
                let body = match e.kind {
                    EventKind::LinkDown(k) => EventBody::LinkDown(k),
                    EventKind::LinkUp(k) => EventBody::LinkUp(k),
                    EventKind::NodeCompromised(n) => EventBody::NodeCompromised(n),
                    EventKind::Reconfigure(n) => EventBody::Reconfigure(n),
                };
                (ms_to_us(e.time_ms), body)
            })
            .collect();
        let horizon_s = horizon as f64 / 1e6;
        let mut periodic = Vec::new();
        if let Some(period) = params.reconf_period_s {
            for k in 1..=periodic_count(period, horizon_s) {
                let t = ms_to_us(k as f64 * period * 1000.0);
                for n in &params.reconf_nodes {
                    periodic.push((t, EventBody::Reconfigure(*n)));
                }
            }
        }
        if let Some(period) = params.status_period_s {
            for k in 1..=periodic_count(period, horizon_s) {
                let t = ms_to_us(k as f64 * period * 1000.0);
                for n in &self.sdn {
                    periodic.push((t, EventBody::StatusUpdate(*n)));
                }
            }
        }
        let step = ms_to_us(params.checkpoint_ms).max(1);
        let mut t = step;
        while t <= horizon {
            periodic.push((t, EventBody::Checkpoint));
            t += step;
        }
        for (t, body) in events.into_iter().chain(periodic) {
            self.schedule(t, body);
        }
    }

    fn log(&mut self, time: u64, seq: u64, kind: &str, detail: std::fmt::Arguments<'_>) {
        let mut line = String::new();
        let _ = write!(line, "{time} {seq} {kind} {detail}");
        self.trace.lines.push(line);
    }

    fn controller_message(&mut self, time: u64, count: usize) {
        self.metrics.controller_messages += count as u64;
        self.trace.controller_message_times.extend(std::iter::repeat_n(time, count));
    }

    fn rebuild_tables(&mut self) -> Result<()> {
        let flows = self.scenario.ntk_flows();
        let compiled = compile_policy(&self.scenario.policy, &self.routes_topo, &self.sdn, &flows)?;
        self.policy_tables = compiled.tables;
        self.refresh_failover()
    }

    /// Policy rules plus, in delegated mode, failover rules derived from the current legacy routes.
    fn refresh_failover(&mut self) -> Result<()> {
        let mut tables = self.policy_tables.clone();
        if self.mode == ReactionMode::Delegated {
            let (backup, _) = backup_tables(&self.routes_topo, &self.sdn)?;
            for (n, b) in backup {
                let merged = match tables.get(&n) {
                    Some(t) => t.merged(b.rules().iter().copied())?,
                    None => b,
                };
                tables.insert(n, merged);
            }
        }
        self.tables = tables;
        Ok(())
    }

    fn run(&mut self) {
        while let Some(Reverse(ev)) = self.queue.pop() {
            self.handle(ev);
        }
    }

    fn handle(&mut self, ev: Queued) {
        let Queued { time, seq, body } = ev;
        match body {
            EventBody::PacketInject { flow } => self.inject(time, seq, flow),
            EventBody::PacketHop { packet, at } => self.forward(time, seq, packet, at),
            EventBody::LinkDown(k) => self.link_change(time, seq, k, false),
            EventBody::LinkUp(k) => self.link_change(time, seq, k, true),
            EventBody::NodeCompromised(n) => {
                let ev = TopologyEvent::NodeCompromised(n);
                self.physical = apply_event(&self.physical, ev).expect("validated node");
                self.routes_topo = apply_event(&self.routes_topo, ev).expect("validated node");
                self.log(time, seq, "link-state", format_args!("compromised={n}"));
                self.schedule(time, EventBody::NetworkReconfigure { failure: None });
            }
            EventBody::Detect { node, link, state, failure } => {
                let ev = match state {
                    LinkState::Up => TopologyEvent::LinkUp(link),
                    LinkState::Down => TopologyEvent::LinkDown(link),
                };
                if let Some(m) = self.machines.get_mut(&node).and_then(|ms| ms.get_mut(&link)) {
                    *m = m.transition(ev).expect("machine monitors this link");
                }
                self.log(time, seq, "detect", format_args!("node={node} link={link} state={}", state.as_str()));
                if self.mode == ReactionMode::Delegated {
                    self.mark_recovered(time, failure);
                }
            }
            EventBody::ControllerRttComplete { failure } => {
                self.log(time, seq, "controller-rtt-complete", format_args!("failure={}", opt(failure)));
                let recompute = ms_to_us(self.scenario.params.recompute_ms);
                self.schedule(time + recompute, EventBody::NetworkReconfigure { failure });
            }
            EventBody::ReconvergenceComplete { failure, snapshot } => {
                let physical = self.snapshots[snapshot].clone();
                self.reroute_to(physical);
                // delegated nodes re-derive their failover rules from the converged routes locally
                self.refresh_failover().expect("tables compiled at start");
                self.log(time, seq, "reconvergence-complete", format_args!("failure={}", opt(failure)));
                self.mark_recovered(time, failure);
            }
            EventBody::NetworkReconfigure { failure } => {
                if self.mode == ReactionMode::Centralized {
                    self.reroute();
                }
                self.rebuild_tables().expect("tables compiled at start");
                let sdn: Vec<NodeId> = self.sdn.iter().copied().collect();
                for n in &sdn {
                    self.pause(time, *n);
                }
                self.controller_message(time, sdn.len());
                self.log(time, seq, "reconfigure", format_args!("scope=network nodes={} failure={}", sdn.len(), opt(failure)));
                self.mark_recovered(time, failure);
            }
            EventBody::Reconfigure(n) => {
                self.pause(time, n);
                self.controller_message(time, 1);
                let until = self.paused_until[&n];
                self.log(time, seq, "reconfigure", format_args!("node={n} paused_until={until}"));
            }
            EventBody::StatusUpdate(n) => {
                *self.status_updates.entry(n).or_default() += 1;
                self.controller_message(time, 1);
                self.log(time, seq, "status-update", format_args!("node={n}"));
            }
            EventBody::Checkpoint => self.checkpoint(time, seq),
        }
    }

    fn pause(&mut self, time: u64, n: NodeId) {
        *self.reconfigurations.entry(n).or_default() += 1;
        let until = time + ms_to_us(self.scenario.params.reconf_pause_ms);
        let e = self.paused_until.entry(n).or_default();
        *e = (*e).max(until);
    }

    fn reroute(&mut self) {
        self.reroute_to(self.physical.clone());
    }

    /// Legacy routes converge on `physical`, keeping the compromise markers already known.
    fn reroute_to(&mut self, physical: Topology) {
        let compromised = self.routes_topo.compromised().clone();
        let mut t = physical;
        for n in compromised {
            t = apply_event(&t, TopologyEvent::NodeCompromised(n)).expect("known node");
        }
        self.routes = LegacyRouting::new(&t);
        self.routes_topo = t;
    }

    fn mark_recovered(&mut self, time: u64, failure: Option<usize>) {
        if let Some(i) = failure {
            let rec = &mut self.trace.failures[i];
            if rec.recovered_us.is_none() {
                rec.recovered_us = Some(time);
            }
        }
    }

    fn link_change(&mut self, time: u64, seq: u64, k: LinkKey, up: bool) {
        let ev = if up { TopologyEvent::LinkUp(k) } else { TopologyEvent::LinkDown(k) };
        let was_up = {
            let (a, b) = k.endpoints();
            self.physical.is_up(a, b)
        };
        self.physical = apply_event(&self.physical, ev).expect("validated link");
        let kind = if up { "link-up" } else { "link-down" };
        self.log(time, seq, kind, format_args!("link={k}"));
        if was_up == up {
            return;
        }
        let failure = if up {
            None
        } else {
            self.trace.failures.push(FailureRecord { link: k, time_us: time, recovered_us: None });
            Some(self.trace.failures.len() - 1)
        };
        let (a, b) = k.endpoints();
        let state = if up { LinkState::Up } else { LinkState::Down };
        let delay = ms_to_us(self.scenario.params.detection_delay_ms);
        for n in [a, b] {
            if self.machines.get(&n).is_some_and(|m| m.contains_key(&k)) {
                let fail_ref = (self.mode == ReactionMode::Delegated && self.has_failover(n, k)).then_some(failure).flatten();
                self.schedule(time + delay, EventBody::Detect { node: n, link: k, state, failure: fail_ref });
            }
        }
        // legacy routing runs underneath every mode and eventually reconverges
        let conv = ms_to_us(self.scenario.params.convergence_ms);
        self.snapshots.push(self.physical.clone());
        let snapshot = self.snapshots.len() - 1;
        self.schedule(time + conv, EventBody::ReconvergenceComplete { failure, snapshot });
        match self.mode {
            ReactionMode::Centralized => {
                let reporter = [a, b].into_iter().find(|n| self.sdn.contains(n)).unwrap_or(a);
                match self.controller_latency_us(reporter) {
                    Some(lat) => {
                        self.controller_message(time, 1);
                        self.schedule(time + 2 * lat, EventBody::ControllerRttComplete { failure });
                    }
                    None => self.log(time, seq, "link-down", format_args!("link={k} controller=unreachable")),
                }
            }
            ReactionMode::ManetBackup | ReactionMode::Delegated => {}
        }
    }

    /// `node` holds a rule that fires once `link` is seen down.
    fn has_failover(&self, node: NodeId, link: LinkKey) -> bool {
        self.tables.get(&node).is_some_and(|t| {
            t.rules().iter().any(|r| r.matcher.state.is_some_and(|p| p.link == link && p.state == LinkState::Down))
        })
    }

    /// One-way latency from `node` to its controller over the current physical topology.
    fn controller_latency_us(&self, node: NodeId) -> Option<u64> {
        let dist = latency_distances(&self.physical, node).ok()?;
        let site = match self.controller_of.get(&node) {
            Some(s) => Some(*s),
            None => self
                .sites
                .iter()
                .filter_map(|s| dist.get(s).map(|d| (*d, *s)))
                .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))
                .map(|(_, s)| s),
        }?;
        dist.get(&site).map(|d| ms_to_us(*d))
    }

    fn inject(&mut self, time: u64, seq: u64, flow: usize) {
        let id = self.next_packet;
        self.next_packet += 1;
        let f = &mut self.flows[flow];
        f.sent += 1;
        let header = f.header;
        let next = f.time_of(f.sent);
        let more = next < f.end_us;
        self.packets.insert(id, Packet { flow, header, injected_at: time, hops: 0 });
        self.metrics.injected += 1;
        self.log(time, seq, "packet-inject", format_args!("pkt={id} flow={flow} src={} dst={} access={}", header.src, header.dst, header.access));
        if more {
            self.schedule(next, EventBody::PacketInject { flow });
        }
        self.forward(time, seq, id, header.src);
    }

    fn finish_packet(&mut self, id: u64) -> Packet {
        self.packets.remove(&id).expect("live packet")
    }

    fn forward(&mut self, time: u64, seq: u64, id: u64, at: NodeId) {
        let pkt = self.packets[&id].clone();
        let header = pkt.header;
        if at == header.dst {
            self.finish_packet(id);
            self.metrics.delivered += 1;
            self.delay_sum_us += (time - pkt.injected_at) as u128;
            let cleared = self.scenario.policy.allows(&self.physical, header.dst, header.access);
            if !cleared {
                self.metrics.ntk_violations += 1;
            }
            self.log(time, seq, "packet-hop", format_args!("pkt={id} at={at} delivered{}", if cleared { "" } else { " ntk-violation" }));
            return;
        }
        if let Some(&until) = self.paused_until.get(&at) {
            if until > time {
                self.log(time, seq, "packet-hop", format_args!("pkt={id} at={at} held_until={until}"));
                self.schedule(until, EventBody::PacketHop { packet: id, at });
                return;
            }
        }
        if pkt.hops >= self.scenario.params.ttl {
            self.finish_packet(id);
            self.metrics.dropped_loss += 1;
            self.metrics.ttl_expired += 1;
            self.log(time, seq, "packet-hop", format_args!("pkt={id} at={at} lost=ttl loop-suspected"));
            return;
        }
        let decision = match (self.sdn.contains(&at), self.tables.get(&at), self.machines.get(&at)) {
            (true, Some(t), Some(m)) => stateful_forward(t, m, &header),
            _ => Decision::Legacy,
        };
        let decision = match decision {
            // a pinned next hop that routing already knows is gone falls back to routing
            Decision::Forward(n) if !self.routes_topo.is_up(at, n) => Decision::Legacy,
            d => d,
        };
        let next = match decision {
            Decision::Drop => {
                self.finish_packet(id);
                self.metrics.dropped_policy += 1;
                self.log(time, seq, "packet-hop", format_args!("pkt={id} at={at} dropped=policy"));
                return;
            }
            Decision::Forward(n) => Some(n),
            Decision::Legacy => self.routes.next_hop(at, header.dst),
        };
        let Some(next) = next else {
            self.finish_packet(id);
            self.metrics.dropped_loss += 1;
            self.log(time, seq, "packet-hop", format_args!("pkt={id} at={at} lost=no-route"));
            return;
        };
        let Some(link) = self.physical.link(at, next).filter(|l| l.up) else {
            self.finish_packet(id);
            self.metrics.dropped_loss += 1;
            self.log(time, seq, "packet-hop", format_args!("pkt={id} at={at} lost=link-down next={next}"));
            return;
        };
        let arrive = time + ms_to_us(link.latency_ms);
        self.packets.get_mut(&id).unwrap().hops += 1;
        self.log(time, seq, "packet-hop", format_args!("pkt={id} at={at} next={next}"));
        self.schedule(arrive, EventBody::PacketHop { packet: id, at: next });
        let _ = pkt.flow;
    }

    fn snapshot(&self, time: u64) -> Checkpoint {
        Checkpoint {
            time_us: time,
            injected: self.metrics.injected,
            delivered: self.metrics.delivered,
            dropped_policy: self.metrics.dropped_policy,
            dropped_loss: self.metrics.dropped_loss,
            in_flight: self.packets.len() as u64,
        }
    }

    fn checkpoint(&mut self, time: u64, seq: u64) {
        let c = self.snapshot(time);
        self.trace.checkpoints.push(c);
        self.log(
            time,
            seq,
            "checkpoint",
            format_args!(
                "injected={} delivered={} dropped_policy={} dropped_loss={} in_flight={}",
                c.injected, c.delivered, c.dropped_policy, c.dropped_loss, c.in_flight
            ),
        );
    }

    fn finish(mut self) -> (SimTrace, Metrics) {
        let end = self.trace.lines.len() as u64;
        let last_time = self.horizon_us().max(self.trace.checkpoints.last().map_or(0, |c| c.time_us));
        self.checkpoint(last_time, end);
        self.metrics.in_flight = self.packets.len() as u64;
        if self.metrics.delivered > 0 {
            self.metrics.mean_delivery_delay_ms = self.delay_sum_us as f64 / self.metrics.delivered as f64 / 1000.0;
        }
        self.metrics.recovery_latency_ms = self
            .trace
            .failures
            .iter()
            .filter_map(|f| f.recovered_us.map(|r| (r - f.time_us) as f64 / 1000.0))
            .collect();
        let horizon_s = self.horizon_us() as f64 / 1e6;
        let model = self.scenario.params.energy;
        for n in self.scenario.topology.node_ids() {
            let reconf = self.reconfigurations.get(&n).copied().unwrap_or(0);
            let status = self.status_updates.get(&n).copied().unwrap_or(0);
            let e = if horizon_s > 0.0 { energy_model(&model, reconf, status, horizon_s).unwrap_or(0.0) } else { 0.0 };
            self.metrics.energy.insert(n, e);
        }
        (self.trace, self.metrics)
    }
}

fn opt(v: Option<usize>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}
