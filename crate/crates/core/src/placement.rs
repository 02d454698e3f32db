//! Controller placement and organization.
//!
//! A placement opens controllers at candidate sites, assigns every forwarder (every non-cloudlet
//! node) to one site and is scored by a weighted sum of three terms:
//!
//! * control latency: mean latency-weighted distance from a forwarder to its site,
//! * synchronization: flat controllers replicate state pairwise, hierarchical ones talk to a root,
//! * energy: battery-powered hosts pay a constant per forwarder they control.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::netmodel::{latency_distances, NodeId, NodeKind, Topology};

/// Default cap on site subsets scored by [`exhaustive_place`].
pub const DEFAULT_PLACEMENT_CAP: u64 = 1_000_000;

const COST_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Organization {
    Flat,
    Hierarchical,
}

impl Organization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Organization::Flat => "flat",
            Organization::Hierarchical => "hier",
        }
    }
}

impl fmt::Display for Organization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Organization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "flat" => Ok(Organization::Flat),
            "hier" | "hierarchical" => Ok(Organization::Hierarchical),
            other => Err(format!("unknown organization '{other}'")),
        }
    }
}

/// Weights of the three cost terms plus the per-forwarder control energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementWeights {
    pub latency: f64,
    pub sync: f64,
    pub energy: f64,
    pub energy_per_forwarder: f64,
}

impl Default for PlacementWeights {
    fn default() -> Self {
        PlacementWeights { latency: 1.0, sync: 0.1, energy: 1.0, energy_per_forwarder: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub sites: BTreeSet<NodeId>,
    pub organization: Organization,
    /// Global controller, present iff hierarchical.
    pub root: Option<NodeId>,
    /// Forwarder to site.
    pub assignment: BTreeMap<NodeId, NodeId>,
    pub capacity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementCost {
    pub control_latency: f64,
    pub sync_cost: f64,
    pub energy_penalty: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPlacement {
    pub placement: Placement,
    pub cost: PlacementCost,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    pub map: BTreeMap<NodeId, NodeId>,
    pub unassigned: Vec<NodeId>,
}

/// Nodes that need a controller: everything except cloudlets.
pub fn forwarders(topo: &Topology) -> Vec<NodeId> {
    topo.nodes().filter(|n| n.kind != NodeKind::Cloudlet).map(|n| n.id).collect()
}

fn site_distances(topo: &Topology, sites: &BTreeSet<NodeId>) -> Result<BTreeMap<NodeId, BTreeMap<NodeId, f64>>> {
    sites.iter().map(|s| Ok((*s, latency_distances(topo, *s)?))).collect()
}

/// Nearest-site assignment with capacity, forwarders in ascending id order, lower site id on ties.
pub fn assign_forwarders(topo: &Topology, sites: &BTreeSet<NodeId>, capacity: usize) -> Result<Assignment> {
    if sites.is_empty() {
        return Err(Error::InvalidPlacement("no controller sites".into()));
    }
    let dist = site_distances(topo, sites)?;
    Ok(assign_with(topo, &dist, capacity))
}

fn assign_with(topo: &Topology, dist: &BTreeMap<NodeId, BTreeMap<NodeId, f64>>, capacity: usize) -> Assignment {
    let mut load: BTreeMap<NodeId, usize> = dist.keys().map(|s| (*s, 0)).collect();
    let mut out = Assignment::default();
    for f in forwarders(topo) {
        let mut best: Option<(f64, NodeId)> = None;
        for (site, d) in dist {
            let Some(&lat) = d.get(&f) else { continue };
            if load[site] >= capacity {
                continue;
            }
            if best.is_none_or(|(b, _)| lat < b) {
                best = Some((lat, *site));
            }
        }
        match best {
            Some((_, site)) => {
                *load.get_mut(&site).unwrap() += 1;
                out.map.insert(f, site);
            }
            None => out.unassigned.push(f),
        }
    }
    out
}

/// Hierarchical root: the lowest-id cloudlet if any, otherwise the site with the smallest summed
/// latency to the other sites.
pub fn default_root(topo: &Topology, sites: &BTreeSet<NodeId>) -> Result<NodeId> {
    if let Some(c) = topo.nodes().find(|n| n.kind == NodeKind::Cloudlet) {
        return Ok(c.id);
    }
    let dist = site_distances(topo, sites)?;
    let mut best: Option<(f64, NodeId)> = None;
    for (s, d) in &dist {
        let sum: f64 = sites.iter().map(|o| d.get(o).copied().unwrap_or(f64::INFINITY)).sum();
        if best.is_none_or(|(b, _)| sum < b) {
            best = Some((sum, *s));
        }
    }
    best.map(|(_, s)| s).ok_or_else(|| Error::InvalidPlacement("no controller sites".into()))
}

fn validate(topo: &Topology, p: &Placement) -> Result<()> {
    if p.sites.is_empty() {
        return Err(Error::InvalidPlacement("no controller sites".into()));
    }
    for s in &p.sites {
        let rec = topo.node(*s).ok_or(Error::UnknownNode(*s))?;
        if !rec.controller_candidate {
            return Err(Error::InvalidPlacement(format!("site {s} is not a controller candidate")));
        }
    }
    match (p.organization, p.root) {
        (Organization::Flat, Some(r)) => {
            return Err(Error::InvalidPlacement(format!("flat organization with root {r}")));
        }
        (Organization::Hierarchical, None) => {
            return Err(Error::InvalidPlacement("hierarchical organization without root".into()));
        }
        (Organization::Hierarchical, Some(r)) => {
            let rec = topo.node(r).ok_or(Error::UnknownNode(r))?;
            if !p.sites.contains(&r) && rec.kind != NodeKind::Cloudlet {
                return Err(Error::InvalidPlacement(format!("root {r} is neither a site nor a cloudlet")));
            }
        }
        (Organization::Flat, None) => {}
    }
    let mut load: BTreeMap<NodeId, usize> = BTreeMap::new();
    for (f, s) in &p.assignment {
        if !p.sites.contains(s) {
            return Err(Error::InvalidPlacement(format!("forwarder {f} assigned to non-site {s}")));
        }
        *load.entry(*s).or_default() += 1;
    }
    if let Some((s, n)) = load.iter().find(|(_, n)| **n > p.capacity) {
        return Err(Error::InvalidPlacement(format!("site {s} controls {n} > capacity {}", p.capacity)));
    }
    let dist = site_distances(topo, &p.sites)?;
    for f in forwarders(topo) {
        let reachable = dist.values().any(|d| d.contains_key(&f));
        if reachable && !p.assignment.contains_key(&f) {
            return Err(Error::InvalidPlacement(format!("reachable forwarder {f} is unassigned")));
        }
    }
    Ok(())
}

/// Scores a placement.
pub fn placement_cost(topo: &Topology, p: &Placement, w: &PlacementWeights) -> Result<PlacementCost> {
    validate(topo, p)?;
    let dist = site_distances(topo, &p.sites)?;
    let lat = |a: NodeId, b: NodeId| -> Result<f64> {
        let d = match dist.get(&a) {
            Some(d) => d.get(&b).copied(),
            None => latency_distances(topo, a)?.get(&b).copied(),
        };
        d.ok_or_else(|| Error::InvalidPlacement(format!("{a} cannot reach {b}")))
    };

    let control_latency = if p.assignment.is_empty() {
        0.0
    } else {
        let mut sum = 0.0;
        for (f, s) in &p.assignment {
            sum += lat(*s, *f)?;
        }
        sum / p.assignment.len() as f64
    };

    let sites: Vec<NodeId> = p.sites.iter().copied().collect();
    let mut sync_cost = 0.0;
    match p.organization {
        Organization::Flat => {
            for (i, a) in sites.iter().enumerate() {
                for b in &sites[i + 1..] {
                    sync_cost += lat(*a, *b)?;
                }
            }
        }
        Organization::Hierarchical => {
            let root = p.root.expect("validated");
            for s in sites.iter().filter(|s| **s != root) {
                sync_cost += lat(*s, root)?;
            }
        }
    }

    let mut energy_penalty = 0.0;
    for s in &sites {
        if topo.node(*s).is_some_and(|n| n.battery.is_finite()) {
            let controlled = p.assignment.values().filter(|x| *x == s).count();
            energy_penalty += controlled as f64 * w.energy_per_forwarder;
        }
    }

    let total = w.latency * control_latency + w.sync * sync_cost + w.energy * energy_penalty;
    Ok(PlacementCost { control_latency, sync_cost, energy_penalty, total })
}

/// Shared parameters of the placement searches.
#[derive(Debug, Clone)]
pub struct PlacementProblem<'a> {
    pub topo: &'a Topology,
    pub candidates: BTreeSet<NodeId>,
    pub max_sites: usize,
    pub capacity: usize,
    pub weights: PlacementWeights,
    pub organization: Organization,
}

impl PlacementProblem<'_> {
    fn check(&self) -> Result<()> {
        for c in &self.candidates {
            let rec = self.topo.node(*c).ok_or(Error::UnknownNode(*c))?;
            if !rec.controller_candidate {
                return Err(Error::InvalidPlacement(format!("{c} is not a controller candidate")));
            }
        }
        if self.candidates.is_empty() || self.max_sites == 0 {
            return Err(Error::Infeasible("no sites can be opened".into()));
        }
        let needed = forwarders(self.topo).len();
        if self.capacity.saturating_mul(self.max_sites) < needed {
            return Err(Error::Infeasible(format!(
                "capacity {} x {} sites cannot serve {needed} forwarders",
                self.capacity, self.max_sites
            )));
        }
        Ok(())
    }

    /// Builds and scores the placement opening exactly `sites`; `None` when it violates an
    /// invariant (capacity leaves a reachable forwarder out, sites cannot reach each other).
    pub fn evaluate(&self, sites: &BTreeSet<NodeId>) -> Option<ScoredPlacement> {
        let assignment = assign_forwarders(self.topo, sites, self.capacity).ok()?;
        let root = match self.organization {
            Organization::Flat => None,
            Organization::Hierarchical => Some(default_root(self.topo, sites).ok()?),
        };
        let placement = Placement {
            sites: sites.clone(),
            organization: self.organization,
            root,
            assignment: assignment.map,
            capacity: self.capacity,
        };
        let cost = placement_cost(self.topo, &placement, &self.weights).ok()?;
        Some(ScoredPlacement { placement, cost })
    }

    /// Forwarders left without a controller by `sites`.
    fn unserved(&self, sites: &BTreeSet<NodeId>) -> usize {
        assign_forwarders(self.topo, sites, self.capacity).map_or(usize::MAX, |a| a.unassigned.len())
    }

    fn total(&self, sites: &BTreeSet<NodeId>) -> f64 {
        if sites.is_empty() {
            return f64::INFINITY;
        }
        self.evaluate(sites).map_or(f64::INFINITY, |s| s.cost.total)
    }
}

fn binomial_sum(n: u64, k_max: u64) -> u64 {
    let mut total = 0u64;
    let mut c = 1u64;
    for k in 1..=k_max.min(n) {
        c = c.saturating_mul(n - k + 1) / k;
        total = total.saturating_add(c);
    }
    total
}

/// Minimum-cost placement over every non-empty site subset of size at most `max_sites`.
pub fn exhaustive_place(problem: &PlacementProblem<'_>, cap: u64) -> Result<ScoredPlacement> {
    problem.check()?;
    let cands: Vec<NodeId> = problem.candidates.iter().copied().collect();
    let subsets = binomial_sum(cands.len() as u64, problem.max_sites as u64);
    if subsets > cap {
        return Err(Error::InstanceTooLarge(format!("{subsets} site subsets exceed the cap of {cap}")));
    }
    let mut best: Option<(Vec<NodeId>, ScoredPlacement)> = None;
    let mut stack = Vec::new();
    visit_subsets(&cands, problem.max_sites, 0, &mut stack, &mut |members| {
        let Some(scored) = problem.evaluate(&members.iter().copied().collect()) else { return };
        let better = match &best {
            None => true,
            Some((m, b)) => {
                scored.cost.total < b.cost.total - COST_EPS
                    || ((scored.cost.total - b.cost.total).abs() <= COST_EPS && members < m.as_slice())
            }
        };
        if better {
            best = Some((members.to_vec(), scored));
        }
    });
    best.map(|(_, s)| s).ok_or_else(|| Error::Infeasible("no feasible site subset".into()))
}

fn visit_subsets<F: FnMut(&[NodeId])>(items: &[NodeId], k_max: usize, start: usize, cur: &mut Vec<NodeId>, f: &mut F) {
    if !cur.is_empty() {
        f(cur);
    }
    if cur.len() == k_max {
        return;
    }
    for i in start..items.len() {
        cur.push(items[i]);
        visit_subsets(items, k_max, i + 1, cur, f);
        cur.pop();
    }
}

#[derive(Debug, Clone, Copy)]
enum Move {
    Open(NodeId),
    Close(NodeId),
    Swap { close: NodeId, open: NodeId },
}

/// Greedy site opening followed by open/close/swap local search. The seed fixes the order in
/// which moves are tried; the first improving move is taken.
pub fn local_search_place(problem: &PlacementProblem<'_>, seed: u64) -> Result<ScoredPlacement> {
    problem.check()?;
    let mut sites = BTreeSet::new();
    let mut current = f64::INFINITY;

    // while capacity still leaves forwarders out, open the site that serves the most of them
    let mut missing = usize::MAX;
    while sites.len() < problem.max_sites {
        let mut best: Option<(usize, f64, NodeId)> = None;
        for c in problem.candidates.iter().filter(|c| !sites.contains(*c)) {
            let mut trial = sites.clone();
            trial.insert(*c);
            let (m, t) = (problem.unserved(&trial), problem.total(&trial));
            let better = match best {
                None => true,
                Some((bm, bt, _)) => m < bm || (m == bm && t < bt - COST_EPS),
            };
            if better {
                best = Some((m, t, *c));
            }
        }
        match best {
            Some((m, t, c)) if m < missing || (m == missing && t < current - COST_EPS) => {
                sites.insert(c);
                missing = m;
                current = t;
            }
            _ => break,
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut moves = Vec::new();
        for c in &problem.candidates {
            if sites.contains(c) {
                if sites.len() > 1 {
                    moves.push(Move::Close(*c));
                }
                for o in problem.candidates.iter().filter(|o| !sites.contains(*o)) {
                    moves.push(Move::Swap { close: *c, open: *o });
                }
            } else if sites.len() < problem.max_sites {
                moves.push(Move::Open(*c));
            }
        }
        moves.shuffle(&mut rng);
        let improved = moves.into_iter().find_map(|m| {
            let mut trial = sites.clone();
            match m {
                Move::Open(o) => {
                    trial.insert(o);
                }
                Move::Close(c) => {
                    trial.remove(&c);
                }
                Move::Swap { close, open } => {
                    trial.remove(&close);
                    trial.insert(open);
                }
            }
            let t = problem.total(&trial);
            (t < current - COST_EPS).then_some((trial, t))
        });
        match improved {
            Some((trial, t)) => {
                sites = trial;
                current = t;
            }
            None => break,
        }
    }

    if sites.is_empty() {
        return Err(Error::Infeasible("no feasible site subset".into()));
    }
    problem.evaluate(&sites).ok_or_else(|| Error::Infeasible("no feasible site subset".into()))
}

/// Runs the local search under both organizations and returns the cheaper result
/// (flat on a tie).
pub fn choose_organization(problem: &PlacementProblem<'_>, seed: u64) -> Result<ScoredPlacement> {
    let flat = local_search_place(&PlacementProblem { organization: Organization::Flat, ..problem.clone() }, seed)?;
    let hier =
        local_search_place(&PlacementProblem { organization: Organization::Hierarchical, ..problem.clone() }, seed)?;
    Ok(if hier.cost.total < flat.cost.total - COST_EPS { hier } else { flat })
}
