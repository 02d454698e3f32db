//! Line-oriented scenario files.
//!
//! ```text
//! [nodes]      id kind team battery|inf [sdn] [candidate]
//! [links]      a b latency_ms [down]
//! [teams]      id name
//! [policy]     category name access_id
//!              clear team category...
//! [flows]      src dst category rate_pps start_s end_s
//! [events]     time_ms link_down a b | link_up a b | node_compromised n | reconfigure n
//! [params]     key value...
//! ```
//!
//! `#` starts a comment. Fields are separated by whitespace. Only `[nodes]` is mandatory.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::netmodel::{Battery, LinkKey, LinkRecord, NodeId, NodeKind, NodeRecord, TeamId, Topology};
use crate::policy::{AccessId, NtkPolicy};
use crate::sim::energy::EnergyModel;
use crate::sim::{EventKind, FlowSpec, Params, Scenario, TimedEvent};

const SECTIONS: [&str; 7] = ["nodes", "links", "teams", "policy", "flows", "events", "params"];

fn perr(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse { line, reason: reason.into() }
}

fn serr(line: usize, reason: impl Into<String>) -> Error {
    Error::Semantic { line, reason: reason.into() }
}

fn field<T: FromStr>(line: usize, name: &str, tok: Option<&&str>) -> Result<T> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing field '{name}'")))?;
    tok.parse().map_err(|_| perr(line, format!("bad {name} '{tok}'")))
}

fn node_field(line: usize, name: &str, tok: Option<&&str>) -> Result<NodeId> {
    let v: u32 = field(line, name, tok)?;
    if v == 0 {
        return Err(perr(line, format!("{name} must be positive")));
    }
    Ok(NodeId(v))
}

fn no_extra(line: usize, toks: &[&str], n: usize) -> Result<()> {
    match toks.get(n) {
        Some(t) => Err(perr(line, format!("unexpected field '{t}'"))),
        None => Ok(()),
    }
}

fn parse_bool(line: usize, tok: Option<&&str>) -> Result<bool> {
    match tok.copied() {
        Some("true") | Some("yes") | Some("on") => Ok(true),
        Some("false") | Some("no") | Some("off") => Ok(false),
        Some(t) => Err(perr(line, format!("bad boolean '{t}'"))),
        None => Err(perr(line, "missing value")),
    }
}

#[derive(Default)]
struct Raw {
    nodes: Vec<(usize, NodeRecord)>,
    links: Vec<(usize, LinkRecord)>,
    teams: BTreeMap<TeamId, String>,
    categories: Vec<(usize, String, AccessId)>,
    clearances: Vec<(usize, TeamId, Vec<String>)>,
    flows: Vec<(usize, FlowSpec)>,
    events: Vec<(usize, TimedEvent)>,
    params: Params,
    energy_baseline: Option<f64>,
    energy_reconf: Option<f64>,
    energy_status: Option<f64>,
}

/// Parses and validates a scenario. Never panics; every failure is an [`Error`].
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut raw = Raw::default();
    let mut section: Option<&str> = None;
    let mut seen_sections = BTreeSet::new();
    for (idx, full) in text.lines().enumerate() {
        let line = idx + 1;
        let content = full.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| perr(line, "unterminated section header"))?.trim();
            let name = SECTIONS
                .iter()
                .find(|s| **s == name)
                .ok_or_else(|| perr(line, format!("unknown section [{name}]")))?;
            if !seen_sections.insert(*name) {
                return Err(perr(line, format!("section [{name}] repeated")));
            }
            section = Some(name);
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        match section {
            None => return Err(perr(line, "content before the first section header")),
            Some("nodes") => raw.nodes.push((line, parse_node(line, &toks)?)),
            Some("links") => raw.links.push((line, parse_link(line, &toks)?)),
            Some("teams") => {
                let id = TeamId(field(line, "team id", toks.first())?);
                let name: String = field(line, "team name", toks.get(1))?;
                no_extra(line, &toks, 2)?;
                if raw.teams.insert(id, name).is_some() {
                    return Err(perr(line, format!("duplicate team {id}")));
                }
            }
            Some("policy") => parse_policy(line, &toks, &mut raw)?,
            Some("flows") => raw.flows.push((line, parse_flow(line, &toks)?)),
            Some("events") => raw.events.push((line, parse_event(line, &toks)?)),
            Some("params") => parse_param(line, &toks, &mut raw)?,
            Some(_) => unreachable!("section names come from SECTIONS"),
        }
    }
    if !seen_sections.contains("nodes") {
        return Err(perr(text.lines().count().max(1), "missing [nodes] section"));
    }
    build(raw)
}

fn parse_node(line: usize, toks: &[&str]) -> Result<NodeRecord> {
    let id = node_field(line, "node id", toks.first())?;
    let kind: NodeKind = {
        let t = toks.get(1).ok_or_else(|| perr(line, "missing field 'kind'"))?;
        t.parse().map_err(|e: String| perr(line, e))?
    };
    let team = TeamId(field(line, "team", toks.get(2))?);
    let battery = match toks.get(3) {
        Some(&"inf") => Battery::Unbounded,
        t => {
            let b: f64 = field(line, "battery", t)?;
            if !(b >= 0.0 && b.is_finite()) {
                return Err(perr(line, format!("battery must be a non-negative number or 'inf', got '{b}'")));
            }
            Battery::Finite(b)
        }
    };
    let mut rec = NodeRecord { id, kind, team, sdn_capable: false, controller_candidate: false, battery };
    for flag in &toks[4..] {
        match *flag {
            "sdn" if !rec.sdn_capable => rec.sdn_capable = true,
            "candidate" if !rec.controller_candidate => rec.controller_candidate = true,
            other => return Err(perr(line, format!("unexpected node flag '{other}'"))),
        }
    }
    if kind == NodeKind::Cloudlet && battery.is_finite() {
        return Err(perr(line, "cloudlet battery must be 'inf'"));
    }
    Ok(rec)
}

fn parse_link(line: usize, toks: &[&str]) -> Result<LinkRecord> {
    let a = node_field(line, "endpoint", toks.first())?;
    let b = node_field(line, "endpoint", toks.get(1))?;
    if a == b {
        return Err(perr(line, format!("self-loop on node {a}")));
    }
    let latency_ms: f64 = field(line, "latency", toks.get(2))?;
    if !(latency_ms > 0.0 && latency_ms.is_finite()) {
        return Err(perr(line, "latency must be positive"));
    }
    let up = match toks.get(3) {
        None => true,
        Some(&"down") => false,
        Some(t) => return Err(perr(line, format!("unexpected link flag '{t}'"))),
    };
    no_extra(line, toks, 4)?;
    Ok(LinkRecord { key: LinkKey::new(a, b), latency_ms, up })
}

fn parse_policy(line: usize, toks: &[&str], raw: &mut Raw) -> Result<()> {
    match toks.first().copied() {
        Some("category") => {
            let name: String = field(line, "category name", toks.get(1))?;
            let id = AccessId(field(line, "access id", toks.get(2))?);
            no_extra(line, toks, 3)?;
            raw.categories.push((line, name, id));
        }
        Some("clear") => {
            let team = TeamId(field(line, "team", toks.get(1))?);
            raw.clearances.push((line, team, toks[2..].iter().map(|s| s.to_string()).collect()));
        }
        Some(other) => return Err(perr(line, format!("unknown policy statement '{other}'"))),
        None => unreachable!("blank lines are skipped"),
    }
    Ok(())
}

fn parse_flow(line: usize, toks: &[&str]) -> Result<FlowSpec> {
    let f = FlowSpec {
        src: node_field(line, "src", toks.first())?,
        dst: node_field(line, "dst", toks.get(1))?,
        category: field(line, "category", toks.get(2))?,
        rate_pps: field(line, "rate", toks.get(3))?,
        start_s: field(line, "start", toks.get(4))?,
        end_s: field(line, "end", toks.get(5))?,
    };
    no_extra(line, toks, 6)?;
    if !(f.rate_pps > 0.0 && f.rate_pps.is_finite()) {
        return Err(perr(line, "rate must be positive"));
    }
    if !(f.start_s >= 0.0 && f.end_s >= f.start_s && f.end_s.is_finite()) {
        return Err(perr(line, "flow window must satisfy 0 <= start <= end"));
    }
    Ok(f)
}

fn parse_event(line: usize, toks: &[&str]) -> Result<TimedEvent> {
    let time_ms: f64 = field(line, "time", toks.first())?;
    if !(time_ms >= 0.0 && time_ms.is_finite()) {
        return Err(perr(line, "event time must be a non-negative number"));
    }
    let kind = match toks.get(1).copied() {
        Some("link_down") | Some("link_up") => {
            let a = node_field(line, "endpoint", toks.get(2))?;
            let b = node_field(line, "endpoint", toks.get(3))?;
            no_extra(line, toks, 4)?;
            if a == b {
                return Err(perr(line, format!("self-loop on node {a}")));
            }
            let k = LinkKey::new(a, b);
            if toks[1] == "link_down" { EventKind::LinkDown(k) } else { EventKind::LinkUp(k) }
        }
        Some("node_compromised") | Some("reconfigure") => {
            let n = node_field(line, "node", toks.get(2))?;
            no_extra(line, toks, 3)?;
            if toks[1] == "reconfigure" { EventKind::Reconfigure(n) } else { EventKind::NodeCompromised(n) }
        }
        Some(other) => return Err(perr(line, format!("unknown event '{other}'"))),
        None => return Err(perr(line, "missing event kind")),
    };
    Ok(TimedEvent { time_ms, kind })
}

fn parse_param(line: usize, toks: &[&str], raw: &mut Raw) -> Result<()> {
    let key = toks[0];
    let val = toks.get(1);
    let p = &mut raw.params;
    let single = |n: usize| no_extra(line, toks, n);
    let nodes = |from: usize| toks[from..].iter().map(|t| node_field(line, key, Some(t))).collect::<Result<Vec<_>>>();
    match key {
        "seed" => p.seed = field(line, key, val)?,
        "mode" => {
            let t = val.ok_or_else(|| perr(line, "missing value"))?;
            p.mode = t.parse().map_err(|e: String| perr(line, e))?;
        }
        "detection_delay_ms" => p.detection_delay_ms = field(line, key, val)?,
        "convergence_ms" => p.convergence_ms = field(line, key, val)?,
        "recompute_ms" => p.recompute_ms = field(line, key, val)?,
        "ttl" => p.ttl = field(line, key, val)?,
        "controller_sites" => {
            p.controller_sites = nodes(1)?;
            return Ok(());
        }
        "organization" => {
            let t = val.ok_or_else(|| perr(line, "missing value"))?;
            p.organization = t.parse().map_err(|e: String| perr(line, e))?;
        }
        "capacity" => p.capacity = Some(field(line, key, val)?),
        "max_sites" => p.max_sites = field(line, key, val)?,
        "budget" => p.budget = field(line, key, val)?,
        "max_hops" => p.max_hops = Some(field(line, key, val)?),
        "w_latency" => p.weights.latency = field(line, key, val)?,
        "w_sync" => p.weights.sync = field(line, key, val)?,
        "w_energy" => p.weights.energy = field(line, key, val)?,
        "energy_per_forwarder" => p.weights.energy_per_forwarder = field(line, key, val)?,
        "reconf_period_s" => p.reconf_period_s = Some(field(line, key, val)?),
        "reconf_nodes" => {
            p.reconf_nodes = nodes(1)?;
            return Ok(());
        }
        "reconf_pause_ms" => p.reconf_pause_ms = field(line, key, val)?,
        "status_period_s" => p.status_period_s = Some(field(line, key, val)?),
        "baseline_rate" => raw.energy_baseline = Some(field(line, key, val)?),
        "e_reconf" => raw.energy_reconf = Some(field(line, key, val)?),
        "e_status" => raw.energy_status = Some(field(line, key, val)?),
        "duration_s" => p.duration_s = Some(field(line, key, val)?),
        "checkpoint_ms" => p.checkpoint_ms = field(line, key, val)?,
        "jitter" => p.jitter = parse_bool(line, val)?,
        other => return Err(perr(line, format!("unknown parameter '{other}'"))),
    }
    single(2)
}

fn build(raw: Raw) -> Result<Scenario> {
    let Raw { nodes, links, teams, categories, clearances, flows, events, mut params, .. } = raw;
    let mut node_ids = BTreeSet::new();
    for (line, n) in &nodes {
        if !node_ids.insert(n.id) {
            return Err(perr(*line, format!("duplicate node {}", n.id)));
        }
        if !teams.contains_key(&n.team) {
            return Err(serr(*line, format!("node {} belongs to undeclared team {}", n.id, n.team)));
        }
    }
    let known = |line: usize, n: NodeId| {
        if node_ids.contains(&n) {
            Ok(())
        } else {
            Err(serr(line, format!("unknown node {n}")))
        }
    };
    let mut link_keys = BTreeSet::new();
    for (line, l) in &links {
        let (a, b) = l.key.endpoints();
        known(*line, a)?;
        known(*line, b)?;
        if !link_keys.insert(l.key) {
            return Err(perr(*line, format!("duplicate link {}", l.key)));
        }
    }

    let cat_ids: BTreeMap<&str, AccessId> = categories.iter().map(|(_, n, a)| (n.as_str(), *a)).collect();
    let mut clear: BTreeMap<TeamId, BTreeSet<AccessId>> = BTreeMap::new();
    for (line, team, cats) in &clearances {
        if !teams.contains_key(team) {
            return Err(serr(*line, format!("clearance for undeclared team {team}")));
        }
        let entry = clear.entry(*team).or_default();
        for c in cats {
            let a = cat_ids.get(c.as_str()).ok_or_else(|| serr(*line, format!("undeclared category '{c}'")))?;
            entry.insert(*a);
        }
    }
    let policy = NtkPolicy::new(categories.iter().map(|(_, n, a)| (n.clone(), *a)), clear).map_err(|e| {
        let line = categories.first().map_or(1, |c| c.0);
        serr(line, e.to_string())
    })?;

    for (line, f) in &flows {
        known(*line, f.src)?;
        known(*line, f.dst)?;
        if policy.access_of(&f.category).is_none() {
            return Err(serr(*line, format!("undeclared category '{}'", f.category)));
        }
    }
    for (line, e) in &events {
        match e.kind {
            EventKind::LinkDown(k) | EventKind::LinkUp(k) => {
                if !link_keys.contains(&k) {
                    let (a, b) = k.endpoints();
                    known(*line, a)?;
                    known(*line, b)?;
                    return Err(serr(*line, format!("unknown link {k}")));
                }
            }
            EventKind::NodeCompromised(n) | EventKind::Reconfigure(n) => known(*line, n)?,
        }
    }

    let mut energy = raw.energy_baseline.map_or_else(EnergyModel::default, EnergyModel::calibrated);
    if let Some(v) = raw.energy_reconf {
        energy.per_reconfiguration = v;
    }
    if let Some(v) = raw.energy_status {
        energy.per_status_update = v;
    }
    params.energy = energy;

    let topology = Topology::new(nodes.into_iter().map(|(_, n)| n).collect(), links.into_iter().map(|(_, l)| l).collect())?;
    let scenario = Scenario {
        topology,
        teams,
        policy,
        flows: flows.into_iter().map(|(_, f)| f).collect(),
        events: events.into_iter().map(|(_, e)| e).collect(),
        params,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Renders a scenario in the file format; `parse_scenario(&render(s))` reproduces `s`.
pub fn render(s: &Scenario) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "[nodes]");
    for n in s.topology.nodes() {
        let battery = match n.battery {
            Battery::Finite(b) => format!("{b}"),
            Battery::Unbounded => "inf".to_string(),
        };
        let _ = write!(w, "{} {} {} {}", n.id, n.kind.as_str(), n.team, battery);
        if n.sdn_capable {
            let _ = write!(w, " sdn");
        }
        if n.controller_candidate {
            let _ = write!(w, " candidate");
        }
        let _ = writeln!(w);
    }
    let _ = writeln!(w, "\n[links]");
    for l in s.topology.links() {
        let (a, b) = l.key.endpoints();
        let _ = writeln!(w, "{a} {b} {}{}", l.latency_ms, if l.up { "" } else { " down" });
    }
    let _ = writeln!(w, "\n[teams]");
    for (id, name) in &s.teams {
        let _ = writeln!(w, "{id} {name}");
    }
    let _ = writeln!(w, "\n[policy]");
    let mut cats: Vec<(&str, AccessId)> = s.policy.categories().collect();
    cats.sort_by_key(|(_, a)| *a);
    for (name, a) in &cats {
        let _ = writeln!(w, "category {name} {a}");
    }
    for (team, ids) in s.policy.clearances() {
        let names: Vec<&str> = ids.iter().filter_map(|a| s.policy.category_of(*a)).collect();
        let _ = writeln!(w, "clear {team} {}", names.join(" ")).map(|_| ());
    }
    let _ = writeln!(w, "\n[flows]");
    for f in &s.flows {
        let _ = writeln!(w, "{} {} {} {} {} {}", f.src, f.dst, f.category, f.rate_pps, f.start_s, f.end_s);
    }
    let _ = writeln!(w, "\n[events]");
    for e in &s.events {
        let _ = match e.kind {
            EventKind::LinkDown(k) => writeln!(w, "{} link_down {} {}", e.time_ms, k.endpoints().0, k.endpoints().1),
            EventKind::LinkUp(k) => writeln!(w, "{} link_up {} {}", e.time_ms, k.endpoints().0, k.endpoints().1),
            EventKind::NodeCompromised(n) => writeln!(w, "{} node_compromised {n}", e.time_ms),
            EventKind::Reconfigure(n) => writeln!(w, "{} reconfigure {n}", e.time_ms),
        };
    }
    let p = &s.params;
    let _ = writeln!(w, "\n[params]");
    let _ = writeln!(w, "seed {}", p.seed);
    let _ = writeln!(w, "mode {}", p.mode);
    let _ = writeln!(w, "detection_delay_ms {}", p.detection_delay_ms);
    let _ = writeln!(w, "convergence_ms {}", p.convergence_ms);
    let _ = writeln!(w, "recompute_ms {}", p.recompute_ms);
    let _ = writeln!(w, "ttl {}", p.ttl);
    if !p.controller_sites.is_empty() {
        let _ = writeln!(w, "controller_sites {}", join(&p.controller_sites));
    }
    let _ = writeln!(w, "organization {}", p.organization);
    if let Some(c) = p.capacity {
        let _ = writeln!(w, "capacity {c}");
    }
    let _ = writeln!(w, "max_sites {}", p.max_sites);
    let _ = writeln!(w, "budget {}", p.budget);
    if let Some(h) = p.max_hops {
        let _ = writeln!(w, "max_hops {h}");
    }
    let _ = writeln!(w, "w_latency {}", p.weights.latency);
    let _ = writeln!(w, "w_sync {}", p.weights.sync);
    let _ = writeln!(w, "w_energy {}", p.weights.energy);
    let _ = writeln!(w, "energy_per_forwarder {}", p.weights.energy_per_forwarder);
    if let Some(v) = p.reconf_period_s {
        let _ = writeln!(w, "reconf_period_s {v}");
    }
    if !p.reconf_nodes.is_empty() {
        let _ = writeln!(w, "reconf_nodes {}", join(&p.reconf_nodes));
    }
    let _ = writeln!(w, "reconf_pause_ms {}", p.reconf_pause_ms);
    if let Some(v) = p.status_period_s {
        let _ = writeln!(w, "status_period_s {v}");
    }
    let _ = writeln!(w, "baseline_rate {}", p.energy.baseline_rate);
    let _ = writeln!(w, "e_reconf {}", p.energy.per_reconfiguration);
    let _ = writeln!(w, "e_status {}", p.energy.per_status_update);
    if let Some(v) = p.duration_s {
        let _ = writeln!(w, "duration_s {v}");
    }
    let _ = writeln!(w, "checkpoint_ms {}", p.checkpoint_ms);
    let _ = writeln!(w, "jitter {}", p.jitter);
    out
}

fn join(ids: &[NodeId]) -> String {
    ids.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ")
}
