use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use smanet::deployment::{all_pairs, default_max_hops, greedy_deploy, Pair};
use smanet::placement::{exhaustive_place, forwarders, local_search_place, Organization, PlacementProblem};
use smanet::policy::compile_policy;
use smanet::report;
use smanet::scenario_file::parse_scenario;
use smanet::sim::{self, ReactionMode, Scenario};
use smanet::Error;

#[derive(Parser)]
#[command(name = "smanet", version, about = "SDN deployment, controller placement, NTK compilation and failover simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Path length cap for selectable-path counting.
    #[arg(long)]
    max_hops: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Greedy SDN upgrade plan.
    Deploy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Controller placement.
    Place {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_sites: Option<usize>,
        #[arg(long)]
        organization: Option<Organization>,
    },
    /// Compile the NTK policy for the scenario's SDN nodes.
    Compile {
        #[command(flatten)]
        common: Common,
    },
    /// Run one simulation.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<ReactionMode>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run all three reaction modes.
    Compare {
        #[command(flatten)]
        common: Common,
    },
}

fn load(c: &Common) -> Result<Scenario> {
    let text = fs::read_to_string(&c.scenario).with_context(|| format!("reading {}", c.scenario.display()))?;
    parse_scenario(&text).with_context(|| format!("in {}", c.scenario.display()))
}

fn emit(c: &Common, text: &str) -> Result<()> {
    match &c.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn max_hops(c: &Common, s: &Scenario) -> usize {
    c.max_hops.or(s.params.max_hops).unwrap_or_else(|| default_max_hops(&s.topology))
}

fn deploy_pairs(s: &Scenario) -> Vec<Pair> {
    let mut pairs: Vec<Pair> = s.flows.iter().map(|f| (f.src, f.dst)).collect();
    pairs.sort();
    pairs.dedup();
    if pairs.is_empty() {
        all_pairs(&s.topology)
    } else {
        pairs
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Deploy { common, budget } => {
            let s = load(&common)?;
            let plan = greedy_deploy(
                &s.topology,
                budget.unwrap_or(s.params.budget),
                &deploy_pairs(&s),
                max_hops(&common, &s),
            );
            emit(&common, &report::plan_csv(&plan))
        }
        Command::Place { common, max_sites, organization } => {
            let s = load(&common)?;
            let problem = PlacementProblem {
                topo: &s.topology,
                candidates: s.topology.nodes().filter(|n| n.controller_candidate).map(|n| n.id).collect(),
                max_sites: max_sites.unwrap_or(s.params.max_sites),
                capacity: s.params.capacity.unwrap_or_else(|| forwarders(&s.topology).len()),
                weights: s.params.weights,
                organization: organization.unwrap_or(s.params.organization),
            };
            let best = match exhaustive_place(&problem, smanet::placement::DEFAULT_PLACEMENT_CAP) {
                Err(Error::InstanceTooLarge(_)) => local_search_place(&problem, s.params.seed)?,
                r => r?,
            };
            emit(&common, &report::placement_csv(&best))
        }
        Command::Compile { common } => {
            let s = load(&common)?;
            let compiled = compile_policy(&s.policy, &s.topology, &s.deployment(), &s.ntk_flows())?;
            match &common.out {
                Some(_) => emit(&common, &report::tables_csv(&compiled.tables)),
                None => emit(&common, &report::tables_text(&compiled.tables, &compiled.coverage)),
            }
        }
        Command::Simulate { common, mode, seed } => {
            let mut s = load(&common)?;
            if let Some(m) = mode {
                s.params.mode = m;
            }
            let (trace, metrics) = sim::run(&s, seed.unwrap_or(s.params.seed))?;
            if let Some(out) = &common.out {
                let mut p = out.clone().into_os_string();
                p.push(".trace");
                fs::write(&p, trace.text()).context("writing trace")?;
            }
            emit(&common, &report::metrics_csv(&[(s.params.mode, metrics)]))
        }
        Command::Compare { common } => {
            let s = load(&common)?;
            if !s.events.iter().any(|e| matches!(e.kind, sim::EventKind::LinkDown(_))) {
                bail!("compare needs at least one link_down event");
            }
            let rows: Vec<_> = sim::compare_modes(&s)?.into_iter().map(|(m, _, metrics)| (m, metrics)).collect();
            emit(&common, &report::metrics_csv(&rows))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
