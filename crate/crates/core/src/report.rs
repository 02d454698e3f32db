//! Deterministic CSV and text output. Floats use six decimals; every CSV starts with its header.

use std::collections::BTreeMap;

use crate::deployment::DeploymentPlan;
use crate::netmodel::NodeId;
use crate::placement::ScoredPlacement;
use crate::policy::{describe, Action, CoverageReport, RuleTable};
use crate::sim::{Metrics, ReactionMode};

pub const METRICS_HEADER: [&str; 11] = [
    "mode",
    "injected",
    "delivered",
    "dropped_policy",
    "dropped_loss",
    "in_flight",
    "mean_delivery_delay_ms",
    "recovery_latency_ms",
    "ntk_violations",
    "controller_messages",
    "total_energy",
];

pub const LONG_HEADER: [&str; 4] = ["kind", "a", "b", "value"];

pub const TABLE_HEADER: [&str; 9] = ["node", "priority", "src", "dst", "access", "state_link", "state", "action", "next_hop"];

fn f6(v: f64) -> String {
    // adding zero turns -0.0 into 0.0
    format!("{:.6}", v + 0.0)
}

fn write_csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    // writing to a Vec cannot fail
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// One row per mode run.
pub fn metrics_csv(rows: &[(ReactionMode, Metrics)]) -> String {
    write_csv(
        &METRICS_HEADER,
        rows.iter().map(|(mode, m)| {
            let recovery: Vec<String> = m.recovery_latency_ms.iter().map(|v| f6(*v)).collect();
            vec![
                mode.to_string(),
                m.injected.to_string(),
                m.delivered.to_string(),
                m.dropped_policy.to_string(),
                m.dropped_loss.to_string(),
                m.in_flight.to_string(),
                f6(m.mean_delivery_delay_ms),
                recovery.join(";"),
                m.ntk_violations.to_string(),
                m.controller_messages.to_string(),
                f6(m.total_energy()),
            ]
        }),
    )
}

/// Per-node energy of one run, long format.
pub fn energy_csv(m: &Metrics) -> String {
    write_csv(
        &LONG_HEADER,
        m.energy.iter().map(|(n, e)| vec!["energy".into(), n.to_string(), String::new(), f6(*e)]),
    )
}

/// `objective` row, one `upgrade` row per node in greedy order (`b` is the rank), one `pair` row
/// per (src, dst).
pub fn plan_csv(plan: &DeploymentPlan) -> String {
    let mut rows = vec![vec!["objective".into(), String::new(), String::new(), plan.objective.to_string()]];
    for (i, n) in plan.order.iter().enumerate() {
        rows.push(vec!["upgrade".into(), n.to_string(), (i + 1).to_string(), String::new()]);
    }
    for ((s, d), c) in &plan.per_pair {
        rows.push(vec!["pair".into(), s.to_string(), d.to_string(), c.to_string()]);
    }
    write_csv(&LONG_HEADER, rows)
}

/// Cost terms, sites, optional root and the forwarder assignment.
pub fn placement_csv(p: &ScoredPlacement) -> String {
    let c = &p.cost;
    let mut rows: Vec<Vec<String>> = [
        ("control_latency", c.control_latency),
        ("sync_cost", c.sync_cost),
        ("energy_penalty", c.energy_penalty),
        ("total", c.total),
    ]
    .into_iter()
    .map(|(k, v)| vec![k.to_string(), String::new(), String::new(), f6(v)])
    .collect();
    rows.push(vec!["organization".into(), p.placement.organization.to_string(), String::new(), String::new()]);
    for s in &p.placement.sites {
        rows.push(vec!["site".into(), s.to_string(), String::new(), String::new()]);
    }
    if let Some(r) = p.placement.root {
        rows.push(vec!["root".into(), r.to_string(), String::new(), String::new()]);
    }
    for (f, s) in &p.placement.assignment {
        rows.push(vec!["assign".into(), f.to_string(), s.to_string(), String::new()]);
    }
    write_csv(&LONG_HEADER, rows)
}

/// One row per rule; wildcards are `*`, absent predicates are empty.
pub fn tables_csv(tables: &BTreeMap<NodeId, RuleTable>) -> String {
    let opt = |v: Option<String>| v.unwrap_or_else(|| "*".into());
    let rows = tables.iter().flat_map(|(node, t)| {
        t.rules().iter().map(move |r| {
            let m = &r.matcher;
            let (action, next) = match r.action {
                Action::Forward(n) => ("forward", n.to_string()),
                Action::Drop => ("drop", String::new()),
            };
            vec![
                node.to_string(),
                r.priority.to_string(),
                opt(m.src.map(|v| v.to_string())),
                opt(m.dst.map(|v| v.to_string())),
                opt(m.access.map(|v| v.to_string())),
                m.state.map_or(String::new(), |s| s.link.to_string()),
                m.state.map_or(String::new(), |s| s.state.as_str().to_string()),
                action.to_string(),
                next,
            ]
        })
    });
    write_csv(&TABLE_HEADER, rows)
}

/// Text dump of compiled tables followed by the coverage report.
pub fn tables_text(tables: &BTreeMap<NodeId, RuleTable>, coverage: &CoverageReport) -> String {
    let mut out = String::new();
    for (node, t) in tables {
        out.push_str(&format!("node {node} ({} rules)\n", t.len()));
        for r in t.rules() {
            out.push_str("  ");
            out.push_str(&describe(r));
            out.push('\n');
        }
    }
    for (label, flows) in [
        ("covered", &coverage.covered),
        ("unenforceable", &coverage.unenforceable),
        ("unroutable", &coverage.unroutable),
    ] {
        let list: Vec<String> = flows.iter().map(|f| f.to_string()).collect();
        out.push_str(&format!("{label}: {}\n", if list.is_empty() { "-".into() } else { list.join(" ") }));
    }
    out
}
