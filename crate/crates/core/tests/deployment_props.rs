mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smanet::deployment::{
    all_pairs, brute_force_deploy, greedy_deploy, is_selectable, selectable_count, SelectabilityIndex,
};
use smanet::netmodel::{enumerate_simple_paths, LegacyRouting};
use smanet::{NodeId, Topology};

fn graph(seed: u64, n: u32) -> Topology {
    common::random_connected(&mut ChaCha8Rng::seed_from_u64(seed), n, 0.3)
}

fn subset(mask: u32, n: u32) -> BTreeSet<NodeId> {
    (1..=n).filter(|i| mask & (1 << (i - 1)) != 0).map(NodeId).collect()
}

#[test]
fn fig4_pairs_budget_two() {
    let t = smanet::netmodel::fig4();
    let pairs = [(NodeId(1), NodeId(8)), (NodeId(2), NodeId(8))];
    let g = greedy_deploy(&t, 2, &pairs, 5);
    let b = brute_force_deploy(&t, 2, &pairs, 5, 1_000_000).unwrap();
    assert!(g.objective as f64 >= (1.0 - (-1.0f64).exp()) * b.objective as f64);
    assert!(b.objective >= selectable_count(&t, &common::ids(&[2, 4]), &pairs, 5));
}

#[test]
fn single_node_graph() {
    let t = Topology::new(vec![smanet::netmodel::NodeRecord::soldier(1)], vec![]).unwrap();
    let b = brute_force_deploy(&t, 1, &all_pairs(&t), 3, 100).unwrap();
    assert!(b.upgrades.is_empty());
    assert_eq!(b.objective, 0);
}

#[test]
fn cap_is_enforced() {
    let t = smanet::netmodel::fig4();
    assert!(brute_force_deploy(&t, 4, &all_pairs(&t), 3, 10).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn index_agrees_with_direct_count(seed in any::<u64>(), n in 2u32..=7, mask in any::<u32>(), hops in 1usize..=5) {
        let t = graph(seed, n);
        let pairs = all_pairs(&t);
        let s = subset(mask, n);
        let mut direct = 0;
        for (src, dst) in &pairs {
            for p in enumerate_simple_paths(&t, *src, *dst, hops) {
                if is_selectable(&t, &p, &s).unwrap() {
                    direct += 1;
                }
            }
        }
        prop_assert_eq!(SelectabilityIndex::new(&t, &pairs, hops).value(&s), direct);
    }

    #[test]
    fn monotone_in_upgrades(seed in any::<u64>(), n in 2u32..=8, a in any::<u32>(), b in any::<u32>()) {
        let t = graph(seed, n);
        let idx = SelectabilityIndex::new(&t, &all_pairs(&t), 5);
        let small = subset(a & b, n);
        let large = subset(a, n);
        prop_assert!(idx.value(&small) <= idx.value(&large));
    }

    #[test]
    fn plans_are_consistent(seed in any::<u64>(), n in 2u32..=8, budget in 0usize..=4) {
        let t = graph(seed, n);
        let pairs = all_pairs(&t);
        let idx = SelectabilityIndex::new(&t, &pairs, 5);
        let g = greedy_deploy(&t, budget, &pairs, 5);
        prop_assert!(g.upgrades.len() <= budget);
        prop_assert_eq!(g.objective, g.per_pair.values().sum::<usize>());
        // every connected pair keeps its legacy path
        let r = LegacyRouting::new(&t);
        let connected = pairs.iter().filter(|(s, d)| r.path(*s, *d).is_some_and(|p| p.hops() <= 5)).count();
        prop_assert!(g.objective >= connected);
        if budget == 0 {
            prop_assert_eq!(g.objective, idx.value(&BTreeSet::new()));
        }
        let all: BTreeSet<NodeId> = t.node_ids().collect();
        prop_assert_eq!(idx.value(&all), idx.total_paths());
    }

    #[test]
    fn greedy_saturates_with_full_budget(seed in any::<u64>(), n in 2u32..=7) {
        let t = graph(seed, n);
        let pairs = all_pairs(&t);
        let g = greedy_deploy(&t, n as usize, &pairs, 4);
        let idx = SelectabilityIndex::new(&t, &pairs, 4);
        prop_assert_eq!(g.objective, idx.total_paths());
    }
}
