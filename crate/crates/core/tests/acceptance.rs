//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its criterion and then asserts.
//!
//! Run with `cargo test --test acceptance -- --nocapture --test-threads=1` to see the lines in
//! order.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smanet::bundled;
use smanet::dataplane::{backup_tables, check_loop_free, BACKUP_PRIORITY};
use smanet::deployment::{all_pairs, brute_force_deploy, default_max_hops, greedy_deploy, is_selectable, SelectabilityIndex, DEFAULT_ENUMERATION_CAP};
use smanet::netmodel::{Battery, LinkRecord, NodeKind, NodeRecord};
use smanet::placement::{
    exhaustive_place, forwarders, local_search_place, placement_cost, Organization, Placement, PlacementProblem,
    PlacementWeights, DEFAULT_PLACEMENT_CAP,
};
use smanet::policy::{
    compile_policy, enforcement_coverage, verify_ntk, AccessId, Action, Flow, FlowRule, LinkState, Match, NtkPolicy,
    RuleTable, StatePredicate,
};
use smanet::sim::energy::{periodic_count, EnergyModel};
use smanet::sim::{self, delay_overhead, ReactionMode, Scenario};
use smanet::{LinkKey, NodeId, Path, TeamId, Topology};

use common::{ids, random_connected, random_subset};

fn report(n: u32, name: &str, pass: bool, detail: impl std::fmt::Display) {
    println!("criterion {n:>2} [{name}]: {} ({detail})", if pass { "PASS" } else { "FAIL" });
}

fn fig4() -> Topology {
    smanet::netmodel::fig4()
}

#[test]
fn criterion_01_fig4_selectability() {
    let start = Instant::now();
    let t = fig4();
    let secure = Path::from_ids(&[2, 4, 6, 7, 8]);
    let via4 = Path::from_ids(&[2, 4, 5, 8]);
    let got = [
        is_selectable(&t, &secure, &ids(&[2])).unwrap(),
        is_selectable(&t, &secure, &ids(&[2, 4])).unwrap(),
        is_selectable(&t, &via4, &ids(&[2])).unwrap(),
    ];
    let elapsed = start.elapsed();
    let pass = got == [false, true, true] && elapsed < Duration::from_secs(1);
    report(1, "fig4 selectability", pass, format_args!("got {got:?}, expected [false, true, true], {elapsed:?}"));
    assert!(pass);
}

#[test]
fn criterion_02_greedy_quality() {
    let start = Instant::now();
    let bound = 1.0 - (-1.0f64).exp();
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    let mut instances = 0;
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(4..=10);
        let t = random_connected(&mut rng, n, 0.25);
        let budget = rng.gen_range(1..=3);
        let max_hops = rng.gen_range(3..=6);
        let pairs = all_pairs(&t);
        let greedy = greedy_deploy(&t, budget, &pairs, max_hops);
        let exact = brute_force_deploy(&t, budget, &pairs, max_hops, DEFAULT_ENUMERATION_CAP).unwrap();
        let ratio = greedy.objective as f64 / exact.objective as f64;
        worst = worst.min(ratio);
        if (greedy.objective as f64) < bound * exact.objective as f64 {
            failures.push((seed, greedy.objective, exact.objective));
        }
        instances += 1;
    }
    let elapsed = start.elapsed();
    let pass = instances >= 30 && failures.is_empty() && elapsed < Duration::from_secs(60);
    report(
        2,
        "greedy quality",
        pass,
        format_args!("{instances} instances, worst greedy/optimum {worst:.4} vs bound {bound:.4}, {elapsed:?}, failures {failures:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_03_monotone_and_submodular() {
    let mut triples = 0;
    let mut monotone_violations = 0;
    let mut submodular_violations = Vec::new();
    let mut seed = 0u64;
    while triples < 1200 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        seed += 1;
        let n = rng.gen_range(4..=8);
        let t = random_connected(&mut rng, n, 0.3);
        let max_hops = default_max_hops(&t).min(6);
        let index = SelectabilityIndex::new(&t, &all_pairs(&t), max_hops);
        let nodes: Vec<NodeId> = t.node_ids().collect();
        for _ in 0..40 {
            let tset = random_subset(&mut rng, &nodes, nodes.len() - 1);
            let tvec: Vec<NodeId> = tset.iter().copied().collect();
            let sset = random_subset(&mut rng, &tvec, tvec.len());
            let outside: Vec<NodeId> = nodes.iter().filter(|x| !tset.contains(x)).copied().collect();
            let v = *outside.choose(&mut rng).unwrap();
            let with = |s: &BTreeSet<NodeId>| {
                let mut s = s.clone();
                s.insert(v);
                s
            };
            let (fs, ft, fsv, ftv) =
                (index.value(&sset), index.value(&tset), index.value(&with(&sset)), index.value(&with(&tset)));
            if fs > ft || fs > fsv || ft > ftv {
                monotone_violations += 1;
            }
            if fsv - fs < ftv - ft {
                submodular_violations.push((seed - 1, sset.clone(), tset.clone(), v, fsv - fs, ftv - ft));
            }
            triples += 1;
        }
    }
    // f is not submodular in general: fig4's (2,4,6,7,8) needs both 2 and 4, so adding 4 gains
    // more once 2 is present. Counterexamples are reported, never hidden.
    let t = fig4();
    let idx = SelectabilityIndex::new(&t, &[(NodeId(2), NodeId(8))], 4);
    let fig4_gain_empty = idx.value(&ids(&[4])) - idx.value(&ids(&[]));
    let fig4_gain_with2 = idx.value(&ids(&[2, 4])) - idx.value(&ids(&[2]));
    for (seed, s, t, v, small, large) in submodular_violations.iter().take(5) {
        println!("  submodularity counterexample (graph seed {seed}): S={s:?} T={t:?} v={v}: gain(S)={small} < gain(T)={large}");
    }
    println!("  fig4 pair (2,8): gain of 4 over {{}} = {fig4_gain_empty}, over {{2}} = {fig4_gain_with2}");
    let pass = triples >= 1000 && monotone_violations == 0;
    report(
        3,
        "monotonicity/submodularity",
        pass,
        format_args!(
            "{triples} triples, {monotone_violations} monotonicity violations, {} submodularity violations reported",
            submodular_violations.len()
        ),
    );
    assert!(pass);
}

struct NtkCase {
    topo: Topology,
    upgrades: BTreeSet<NodeId>,
    policy: NtkPolicy,
    flows: Vec<Flow>,
}

fn random_ntk_case(seed: u64) -> NtkCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=10);
    let base = random_connected(&mut rng, n, 0.3);
    let nodes: Vec<NodeRecord> = base
        .nodes()
        .map(|r| NodeRecord { team: TeamId(rng.gen_range(1..=2)), ..r.clone() })
        .collect();
    let topo = Topology::new(nodes, base.links().cloned().collect()).unwrap();
    let cats = ["identity", "location", "imagery"];
    let mut clear = BTreeMap::new();
    for team in [TeamId(1), TeamId(2)] {
        let set: BTreeSet<AccessId> = (1..=3).filter(|_| rng.gen_bool(0.5)).map(AccessId).collect();
        clear.insert(team, set);
    }
    let policy = NtkPolicy::new(cats.iter().enumerate().map(|(i, c)| (c.to_string(), AccessId(i as u32 + 1))), clear).unwrap();
    let ids: Vec<NodeId> = topo.node_ids().collect();
    let mut upgrades = random_subset(&mut rng, &ids, ids.len());
    if upgrades.is_empty() {
        upgrades.insert(ids[0]);
    }
    let mut flows = BTreeSet::new();
    for _ in 0..rng.gen_range(1..=20) {
        let src = *ids.choose(&mut rng).unwrap();
        let dst = *ids.iter().filter(|d| **d != src).collect::<Vec<_>>().choose(&mut rng).unwrap().to_owned();
        flows.insert(Flow { src, dst, category: cats.choose(&mut rng).unwrap().to_string() });
    }
    let (covered, _) = enforcement_coverage(&topo, &upgrades, &flows.into_iter().collect::<Vec<_>>());
    NtkCase { topo, upgrades, policy, flows: covered }
}

#[test]
fn criterion_04_ntk_soundness_and_mutation() {
    let mut scenarios = 0;
    let mut violations = 0;
    let mut mutations = 0;
    let mut undetected = Vec::new();
    let mut seed = 0;
    while scenarios < 20 {
        let case = random_ntk_case(500 + seed);
        seed += 1;
        if case.flows.is_empty() {
            continue;
        }
        scenarios += 1;
        let compiled = compile_policy(&case.policy, &case.topo, &case.upgrades, &case.flows).unwrap();
        assert!(compiled.coverage.unenforceable.is_empty());
        violations += verify_ntk(&case.topo, &case.upgrades, &case.policy, &case.flows, &compiled.tables).len();
        for (node, table) in &compiled.tables {
            for (i, rule) in table.rules().iter().enumerate() {
                if rule.action != Action::Drop {
                    continue;
                }
                mutations += 1;
                let mut mutated = compiled.tables.clone();
                mutated.insert(*node, table.without(i));
                if verify_ntk(&case.topo, &case.upgrades, &case.policy, &case.flows, &mutated).is_empty() {
                    undetected.push((seed - 1, *node, i));
                }
            }
        }
    }
    let pass = violations == 0 && mutations > 0 && undetected.is_empty();
    report(
        4,
        "NTK soundness + mutation",
        pass,
        format_args!(
            "{scenarios} scenarios, {violations} violations on compiled tables, {mutations} drop-rule deletions, {} undetected",
            undetected.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_failover_contract() {
    let s = bundled::parse(bundled::FIG5).unwrap();
    let runs = sim::compare_modes(&s).unwrap();
    let get = |m: ReactionMode| runs.iter().find(|r| r.0 == m).unwrap();
    let (_, trace, delegated) = get(ReactionMode::Delegated);
    let (_, _, manet) = get(ReactionMode::ManetBackup);
    let failure = trace.failures[0];
    let window = trace.controller_messages_between(failure.time_us, failure.recovered_us.unwrap());
    let detection = s.params.detection_delay_ms;
    let pass = delegated.recovery_latency_ms == vec![detection]
        && window == 0
        && delegated.dropped_loss < manet.dropped_loss;
    report(
        5,
        "failover contract",
        pass,
        format_args!(
            "delegated recovery {:?} ms vs detection {detection} ms, {window} controller messages in window, loss delegated {} < manet-backup {}",
            delegated.recovery_latency_ms, delegated.dropped_loss, manet.dropped_loss
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_energy_calibration() {
    let m = EnergyModel::default();
    let reconf = m.overhead(periodic_count(20.0, 200.0), 0, 200.0).unwrap();
    let status = m.overhead(0, periodic_count(3.0, 200.0), 200.0).unwrap();
    let pass = (reconf - 0.20).abs() <= 0.01 && status <= 0.01;
    report(6, "energy calibration", pass, format_args!("reconfiguration overhead {reconf:.4}, status overhead {status:.4}"));
    assert!(pass);
}

fn without_reconfiguration(s: &Scenario) -> Scenario {
    let mut s = s.clone();
    s.params.reconf_period_s = None;
    s
}

#[test]
fn criterion_07_delay_calibration() {
    let s = bundled::parse(bundled::REFERENCE).unwrap();
    let (_, with) = sim::run(&s, s.params.seed).unwrap();
    let (_, without) = sim::run(&without_reconfiguration(&s), s.params.seed).unwrap();
    let overhead = delay_overhead(&with, &without).unwrap();
    let pass = (overhead - 0.25).abs() <= 0.02;
    report(
        7,
        "delay calibration",
        pass,
        format_args!(
            "overhead {overhead:.4} ({:.3} ms vs {:.3} ms)",
            with.mean_delivery_delay_ms, without.mean_delivery_delay_ms
        ),
    );
    assert!(pass);
}

fn problem_of(s: &Scenario) -> PlacementProblem<'_> {
    PlacementProblem {
        topo: &s.topology,
        candidates: s.topology.nodes().filter(|n| n.controller_candidate).map(|n| n.id).collect(),
        max_sites: s.params.max_sites,
        capacity: s.params.capacity.unwrap_or_else(|| forwarders(&s.topology).len()),
        weights: s.params.weights,
        organization: s.params.organization,
    }
}

/// Line 1-2-3-4 (5, 7, 4 ms) plus cloudlet 5 behind node 4 (3 ms); sites 2 and 3.
fn two_site_case() -> (Topology, BTreeSet<NodeId>) {
    let mut nodes: Vec<NodeRecord> = (1..=4).map(NodeRecord::soldier).collect();
    for n in &mut nodes[1..3] {
        n.controller_candidate = true;
    }
    nodes.push(NodeRecord { kind: NodeKind::Cloudlet, battery: Battery::Unbounded, ..NodeRecord::soldier(5) });
    let links = vec![
        LinkRecord::new(1, 2, 5.0),
        LinkRecord::new(2, 3, 7.0),
        LinkRecord::new(3, 4, 4.0),
        LinkRecord::new(4, 5, 3.0),
    ];
    (Topology::new(nodes, links).unwrap(), ids(&[2, 3]))
}

#[test]
fn criterion_08_placement_oracle() {
    let mut mismatches = Vec::new();
    let mut lines = Vec::new();
    for (i, text) in bundled::PLACEMENT_SEEDS.iter().enumerate() {
        let s = bundled::parse(text).unwrap();
        let p = problem_of(&s);
        assert!(p.candidates.len() <= 3);
        let exact = exhaustive_place(&p, DEFAULT_PLACEMENT_CAP).unwrap();
        let local = local_search_place(&p, i as u64 + 1).unwrap();
        lines.push(format!("s{}={:.6}/{:.6}", i + 1, exact.cost.total, local.cost.total));
        if (exact.cost.total - local.cost.total).abs() > 1e-9 {
            mismatches.push(i + 1);
        }
    }

    // hand evaluation: assignment 1,2 -> 2 and 3,4 -> 3; control latency (5+0+0+4)/4;
    // flat sync = d(2,3) = 7; hierarchical root is the cloudlet: d(2,5) + d(3,5) = 14 + 7;
    // energy = 4 forwarders x 0.5 on battery-powered sites
    let (topo, sites) = two_site_case();
    let w = PlacementWeights { latency: 1.0, sync: 0.1, energy: 1.0, energy_per_forwarder: 0.5 };
    let assignment: BTreeMap<NodeId, NodeId> =
        [(1, 2), (2, 2), (3, 3), (4, 3)].into_iter().map(|(f, s)| (NodeId(f), NodeId(s))).collect();
    let flat = Placement { sites: sites.clone(), organization: Organization::Flat, root: None, assignment: assignment.clone(), capacity: 4 };
    let hier = Placement { organization: Organization::Hierarchical, root: Some(NodeId(5)), ..flat.clone() };
    let cf = placement_cost(&topo, &flat, &w).unwrap();
    let ch = placement_cost(&topo, &hier, &w).unwrap();
    let formulas = cf.control_latency == 2.25
        && cf.sync_cost == 7.0
        && ch.sync_cost == 21.0
        && cf.energy_penalty == 2.0
        && ch.energy_penalty == 2.0
        && (cf.total - (2.25 + 0.7 + 2.0)).abs() < 1e-12
        && (ch.total - (2.25 + 2.1 + 2.0)).abs() < 1e-12;
    let pass = mismatches.is_empty() && formulas;
    report(
        8,
        "placement oracle",
        pass,
        format_args!(
            "exhaustive/local {}; two-site flat sync {} hier sync {}, totals {:.6}/{:.6}",
            lines.join(" "),
            cf.sync_cost,
            ch.sync_cost,
            cf.total,
            ch.total
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_determinism_and_conservation() {
    let mut runs = 0;
    let mut checkpoints = 0;
    let mut nondeterministic = Vec::new();
    let mut unconserved = Vec::new();
    for (name, text) in bundled::all() {
        let s = bundled::parse(text).unwrap();
        for mode in ReactionMode::ALL {
            let s = s.with_mode(mode);
            let (t1, m1) = sim::run(&s, s.params.seed).unwrap();
            let (t2, m2) = sim::run(&s, s.params.seed).unwrap();
            runs += 1;
            if t1.text() != t2.text() || m1 != m2 {
                nondeterministic.push(format!("{name}/{mode}"));
            }
            checkpoints += t1.checkpoints.len();
            if !t1.checkpoints.iter().all(|c| c.is_conserved()) || !m1.is_conserved() {
                unconserved.push(format!("{name}/{mode}"));
            }
        }
    }
    let pass = nondeterministic.is_empty() && unconserved.is_empty();
    report(
        9,
        "determinism + conservation",
        pass,
        format_args!(
            "{runs} runs, {checkpoints} checkpoints, differing traces {nondeterministic:?}, conservation breaks {unconserved:?}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_loop_freedom() {
    let t = fig4();
    let all: BTreeSet<NodeId> = t.node_ids().collect();
    let (tables, _) = backup_tables(&t, &all).unwrap();
    let mut looping = Vec::new();
    let links: Vec<LinkKey> = t.links().map(|l| l.key).collect();
    for k in &links {
        let check = check_loop_free(&t, &tables, &[*k]).unwrap();
        if !check.loop_free {
            looping.push((*k, check.cycle));
        }
    }

    let rule = |mon: (u32, u32), to: u32| FlowRule {
        matcher: Match {
            dst: Some(NodeId(5)),
            state: Some(StatePredicate { link: LinkKey::between(mon.0, mon.1), state: LinkState::Down }),
            ..Match::default()
        },
        action: Action::Forward(NodeId(to)),
        priority: BACKUP_PRIORITY,
    };
    let mutual = BTreeMap::from([
        (NodeId(1), RuleTable::new(NodeId(1), vec![rule((1, 3), 2)]).unwrap()),
        (NodeId(2), RuleTable::new(NodeId(2), vec![rule((2, 5), 1)]).unwrap()),
    ]);
    let counter = check_loop_free(&t, &mutual, &[LinkKey::between(1, 3), LinkKey::between(2, 5)]).unwrap();
    let cycle: BTreeSet<NodeId> = counter.cycle.clone().unwrap_or_default().into_iter().collect();
    let pass = looping.is_empty() && !counter.loop_free && cycle == ids(&[1, 2]);
    report(
        10,
        "loop freedom",
        pass,
        format_args!(
            "{} single-link failures loop-free, looping {looping:?}; mutual backup cycle {:?}",
            links.len() - looping.len(),
            counter.cycle
        ),
    );
    assert!(pass);
}
