//! Hybrid SDN deployment: which nodes to upgrade so that as many routing paths as possible become
//! selectable.
//!
//! A path is selectable under an upgrade set `S` when every legacy node on it (every non-terminal
//! node outside `S`) forwards to exactly the successor that legacy routing would pick anyway.
//! Upgraded nodes may override their next hop with any neighbor. The objective `f(S)` counts, over
//! a set of ordered pairs, the simple paths of bounded length that are selectable.
//!
//! `f` is monotone. It is not submodular in general: a path that detours at two consecutive
//! legacy hops only becomes selectable once both are upgraded.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::netmodel::{diameter, enumerate_simple_paths, LegacyRouting, NodeId, Path, Topology};

/// Set of nodes upgraded to SDN forwarding.
pub type UpgradeSet = BTreeSet<NodeId>;

/// Ordered (source, destination) pair.
pub type Pair = (NodeId, NodeId);

/// Default cap on the number of subsets [`brute_force_deploy`] is willing to score.
pub const DEFAULT_ENUMERATION_CAP: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeploymentPlan {
    pub upgrades: UpgradeSet,
    /// Nodes in the order the optimizer added them.
    pub order: Vec<NodeId>,
    pub objective: usize,
    pub per_pair: BTreeMap<Pair, usize>,
}

/// Whether `path` can be realized when only the nodes in `upgrades` may override legacy routing.
pub fn is_selectable(topo: &Topology, path: &Path, upgrades: &UpgradeSet) -> Result<bool> {
    path.validate(topo)?;
    let routing = LegacyRouting::new(topo);
    Ok(overriding_nodes(&routing, path).iter().all(|v| upgrades.contains(v)))
}

/// Non-terminal nodes of `path` whose successor differs from their legacy next hop.
fn overriding_nodes(routing: &LegacyRouting, path: &Path) -> Vec<NodeId> {
    let dst = path.dst().expect("validated path");
    path.nodes()
        .windows(2)
        .filter(|w| routing.next_hop(w[0], dst) != Some(w[1]))
        .map(|w| w[0])
        .collect()
}

/// Default path-length bound: diameter + 2.
pub fn default_max_hops(topo: &Topology) -> usize {
    diameter(topo).map_or(1, |d| d as usize + 2)
}

/// Precomputed override requirements for every enumerated path of every pair.
///
/// A path counts towards `f(S)` iff its requirement set is contained in `S`, which turns each
/// evaluation into a subset test instead of a fresh enumeration.
#[derive(Debug, Clone)]
pub struct SelectabilityIndex {
    nodes: Vec<NodeId>,
    pairs: Vec<(Pair, Vec<Vec<NodeId>>)>,
}

impl SelectabilityIndex {
    pub fn new(topo: &Topology, pairs: &[Pair], max_hops: usize) -> Self {
        let routing = LegacyRouting::new(topo);
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &(s, d) in pairs {
            if !seen.insert((s, d)) {
                continue;
            }
            let reqs = enumerate_simple_paths(topo, s, d, max_hops)
                .iter()
                .map(|p| overriding_nodes(&routing, p))
                .collect();
            out.push(((s, d), reqs));
        }
        SelectabilityIndex { nodes: topo.node_ids().collect(), pairs: out }
    }

    pub fn per_pair(&self, upgrades: &UpgradeSet) -> BTreeMap<Pair, usize> {
        self.pairs
            .iter()
            .map(|(pair, reqs)| {
                let n = reqs.iter().filter(|r| r.iter().all(|v| upgrades.contains(v))).count();
                (*pair, n)
            })
            .collect()
    }

    pub fn value(&self, upgrades: &UpgradeSet) -> usize {
        self.per_pair(upgrades).values().sum()
    }

    /// Total number of enumerated paths (the value with every node upgraded).
    pub fn total_paths(&self) -> usize {
        self.pairs.iter().map(|(_, r)| r.len()).sum()
    }

    fn plan(&self, upgrades: UpgradeSet, order: Vec<NodeId>) -> DeploymentPlan {
        let per_pair = self.per_pair(&upgrades);
        DeploymentPlan { objective: per_pair.values().sum(), upgrades, order, per_pair }
    }
}

/// `f(S)`: number of selectable simple paths, bounded by `max_hops`, summed over `pairs`.
pub fn selectable_count(topo: &Topology, upgrades: &UpgradeSet, pairs: &[Pair], max_hops: usize) -> usize {
    SelectabilityIndex::new(topo, pairs, max_hops).value(upgrades)
}

/// Greedy upgrade selection: repeatedly add the node with the largest marginal gain (lowest id
/// on ties) until the budget is spent or no node improves the objective.
pub fn greedy_deploy(topo: &Topology, budget: usize, pairs: &[Pair], max_hops: usize) -> DeploymentPlan {
    let index = SelectabilityIndex::new(topo, pairs, max_hops);
    let mut chosen = UpgradeSet::new();
    let mut order = Vec::new();
    let mut current = index.value(&chosen);
    while chosen.len() < budget {
        let mut best: Option<(usize, NodeId)> = None;
        let open: Vec<NodeId> = index.nodes.iter().filter(|v| !chosen.contains(v)).copied().collect();
        for v in open {
            chosen.insert(v);
            let gain = index.value(&chosen) - current;
            chosen.remove(&v);
            // strict comparison keeps the lowest id among equal gains
            if gain > 0 && best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, v));
            }
        }
        let Some((gain, v)) = best else { break };
        chosen.insert(v);
        order.push(v);
        current += gain;
    }
    index.plan(chosen, order)
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Exact optimum over all upgrade sets of size at most `budget`. Ties go to the lexicographically
/// smallest member list.
pub fn brute_force_deploy(
    topo: &Topology,
    budget: usize,
    pairs: &[Pair],
    max_hops: usize,
    cap: u64,
) -> Result<DeploymentPlan> {
    let n = topo.node_count() as u64;
    let k_max = (budget as u64).min(n);
    let subsets = (0..=k_max).fold(0u64, |acc, k| acc.saturating_add(binomial(n, k)));
    if subsets > cap {
        return Err(Error::InstanceTooLarge(format!(
            "{subsets} candidate subsets exceed the cap of {cap}"
        )));
    }
    let index = SelectabilityIndex::new(topo, pairs, max_hops);
    let nodes = index.nodes.clone();
    let mut best: Option<(usize, Vec<NodeId>)> = None;
    let mut current = Vec::new();
    for_each_subset(&nodes, k_max as usize, 0, &mut current, &mut |members| {
        let set: UpgradeSet = members.iter().copied().collect();
        let value = index.value(&set);
        let better = match &best {
            None => true,
            Some((v, m)) => value > *v || (value == *v && members < m.as_slice()),
        };
        if better {
            best = Some((value, members.to_vec()));
        }
    });
    let (_, members) = best.unwrap_or_default();
    Ok(index.plan(members.iter().copied().collect(), members))
}

fn for_each_subset<F: FnMut(&[NodeId])>(
    items: &[NodeId],
    k_max: usize,
    start: usize,
    current: &mut Vec<NodeId>,
    visit: &mut F,
) {
    visit(current);
    if current.len() == k_max {
        return;
    }
    for i in start..items.len() {
        current.push(items[i]);
        for_each_subset(items, k_max, i + 1, current, visit);
        current.pop();
    }
}

/// Every ordered pair of distinct nodes.
pub fn all_pairs(topo: &Topology) -> Vec<Pair> {
    let ids: Vec<NodeId> = topo.node_ids().collect();
    ids.iter()
        .flat_map(|s| ids.iter().filter(move |d| *d != s).map(move |d| (*s, *d)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::fig4;

    fn set(ids: &[u32]) -> UpgradeSet {
        ids.iter().map(|x| NodeId(*x)).collect()
    }

    fn pair(s: u32, d: u32) -> Pair {
        (NodeId(s), NodeId(d))
    }

    #[test]
    fn override_examples() {
        let t = fig4();
        let secure = Path::from_ids(&[2, 4, 6, 7, 8]);
        assert!(!is_selectable(&t, &secure, &set(&[2])).unwrap());
        assert!(is_selectable(&t, &secure, &set(&[2, 4])).unwrap());
        assert!(is_selectable(&t, &Path::from_ids(&[2, 4, 5, 8]), &set(&[2])).unwrap());
        assert!(is_selectable(&t, &Path::from_ids(&[2, 5, 8]), &set(&[])).unwrap());
        assert!(matches!(
            is_selectable(&t, &Path::from_ids(&[2, 8]), &set(&[])),
            Err(Error::InvalidPath(_))
        ));
    }

    // Paths 2->8 within 4 hops: (2,1,3,5,8) needs {1,2}; (2,4,5,8) needs {2};
    // (2,4,6,7,8) needs {2,4}; (2,5,8) needs nothing.
    #[test]
    fn counts_on_fig4() {
        let t = fig4();
        let p = [pair(2, 8)];
        assert_eq!(enumerate_simple_paths(&t, NodeId(2), NodeId(8), 4).len(), 4);
        assert_eq!(selectable_count(&t, &set(&[]), &p, 4), 1);
        assert_eq!(selectable_count(&t, &set(&[2]), &p, 4), 2);
        assert_eq!(selectable_count(&t, &set(&[2, 4]), &p, 4), 3);
        assert_eq!(selectable_count(&t, &set(&[1, 2, 4]), &p, 4), 4);
        let all: UpgradeSet = t.node_ids().collect();
        assert_eq!(selectable_count(&t, &all, &p, 4), 4);
    }

    #[test]
    fn greedy_and_brute_force_on_fig4() {
        let t = fig4();
        let p = [pair(2, 8)];
        let g = greedy_deploy(&t, 2, &p, 4);
        // after 2, nodes 1 and 4 both gain one path; 1 wins the tie
        assert_eq!(g.order, vec![NodeId(2), NodeId(1)]);
        assert_eq!(g.objective, 3);
        let b = brute_force_deploy(&t, 2, &p, 4, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(b.objective, 3);
        assert_eq!(b.upgrades, set(&[1, 2]));
        assert!(b.objective >= selectable_count(&t, &set(&[2, 4]), &p, 4));
    }

    #[test]
    fn zero_budget_is_baseline() {
        let t = fig4();
        let pairs = all_pairs(&t);
        let g = greedy_deploy(&t, 0, &pairs, 5);
        assert!(g.upgrades.is_empty());
        assert_eq!(g.objective, pairs.len());
        let b = brute_force_deploy(&t, 0, &pairs, 5, 10).unwrap();
        assert!(b.upgrades.is_empty());
        assert_eq!(b.objective, pairs.len());
    }

    #[test]
    fn saturation_reaches_all_upgraded_maximum() {
        let t = fig4();
        let pairs = [pair(1, 8), pair(2, 8)];
        let g = greedy_deploy(&t, 100, &pairs, 5);
        let index = SelectabilityIndex::new(&t, &pairs, 5);
        assert_eq!(g.objective, index.total_paths());
    }

    #[test]
    fn enumeration_cap() {
        let t = fig4();
        assert!(matches!(
            brute_force_deploy(&t, 3, &[pair(1, 8)], 4, 10),
            Err(Error::InstanceTooLarge(_))
        ));
    }

    #[test]
    fn single_node_graph() {
        let t = Topology::new(vec![crate::netmodel::NodeRecord::soldier(1)], vec![]).unwrap();
        let b = brute_force_deploy(&t, 1, &[], 3, 10).unwrap();
        assert!(b.upgrades.is_empty());
        assert_eq!(b.objective, 0);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 3), 120);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(5, 5), 1);
        assert_eq!(binomial(3, 5), 0);
    }
}
