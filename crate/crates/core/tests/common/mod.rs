#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use smanet::netmodel::{LinkRecord, NodeRecord};
use smanet::{NodeId, Topology};

/// Connected graph on nodes 1..=n: a random spanning tree plus each other pair with `extra`
/// probability. Latencies are whole milliseconds in 1..=20.
pub fn random_connected(rng: &mut ChaCha8Rng, n: u32, extra: f64) -> Topology {
    let mut edges = BTreeSet::new();
    for v in 2..=n {
        let u = rng.gen_range(1..v);
        edges.insert((u, v));
    }
    for u in 1..=n {
        for v in u + 1..=n {
            if rng.gen_bool(extra) {
                edges.insert((u, v));
            }
        }
    }
    let nodes = (1..=n).map(NodeRecord::soldier).collect();
    let links = edges.into_iter().map(|(a, b)| LinkRecord::new(a, b, rng.gen_range(1..=20) as f64)).collect();
    Topology::new(nodes, links).expect("generated topology is valid")
}

pub fn random_subset(rng: &mut ChaCha8Rng, ids: &[NodeId], max: usize) -> BTreeSet<NodeId> {
    let k = rng.gen_range(0..=max.min(ids.len()));
    ids.choose_multiple(rng, k).copied().collect()
}

pub fn ids(v: &[u32]) -> BTreeSet<NodeId> {
    v.iter().map(|x| NodeId(*x)).collect()
}
