//! Command-line surface: `simulate`, `check` and `potential`.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on bad input.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use stabilis_core::algorithm::is_legitimate;
use stabilis_core::checker::{check_network, explore, verify_convergence, worst_case_steps, CheckOutcome};
use stabilis_core::checker::{monitor_graph, Limits};
use stabilis_core::daemons::{run_execution, validate_trace, Outcome, StrategyKind};
use stabilis_core::topology::{enumerate_networks, generate};
use stabilis_core::{Configuration, Network, Shape, StepGraph};

use crate::formats::{parse_config, parse_network, parse_plan, parse_trace, TraceJson};
use crate::report::{dot, potential_report, NetworkCheckJson};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Input(format!("{context}: {e}"))
}

#[derive(Parser, Debug)]
#[command(name = "stabilis", version, about = "Self-stabilizing BFS spanning tree simulator and checker")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one execution under a daemon strategy and write its trace.
    Simulate(SimulateArgs),
    /// Explore every execution from every initial configuration and run the
    /// potential monitors on every step.
    Check(CheckArgs),
    /// Dump every potential of a configuration.
    Potential(PotentialArgs),
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct NetworkSource {
    /// Network JSON file.
    #[arg(long)]
    pub net: Option<PathBuf>,
    /// Generated network: `path:N`, `cycle:N`, `star:N`, `complete:N` or
    /// `random:N:SEED`.
    #[arg(long = "gen")]
    pub generator: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub network: NetworkSource,
    /// Initial configuration: `zeros`, `random:SEED`, `enumerate` or a JSON file.
    #[arg(long, default_value = "zeros")]
    pub init: String,
    /// Upper bound on initial `d` values for `random:` and `enumerate`.
    #[arg(long, default_value_t = 10)]
    pub dmax: u64,
    /// `synchronous`, `central_first`, `central_random`, `random_subset[:P]`,
    /// `greedy_adversary` or `scripted` (with `--plan`).
    #[arg(long, default_value = "synchronous")]
    pub strategy: String,
    /// Activation plan for the scripted strategy.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub max_steps: usize,
    /// Where to write the trace JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Network JSON file.
    #[arg(long, conflicts_with_all = ["generator", "all_graphs"])]
    pub net: Option<PathBuf>,
    /// Generated network, as for `simulate`.
    #[arg(long = "gen", conflicts_with = "all_graphs")]
    pub generator: Option<String>,
    /// Check every connected labeled network with up to N nodes.
    #[arg(long)]
    pub all_graphs: Option<usize>,
    /// Upper bound on initial `d` values.
    #[arg(long, default_value_t = 2)]
    pub dmax: u64,
    /// Start from this configuration only instead of enumerating.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Validate a recorded trace instead of exploring.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    #[arg(long, default_value_t = Limits::DEFAULT_MAX_STATES)]
    pub max_states: usize,
    /// Worker threads for multi-network checks (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Where to write the report JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write a Graphviz dump of the step graph (single network only).
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PotentialArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(input(path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(input(path.display()))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn parse_generator(text: &str) -> Result<Network, CliError> {
    let bad = || CliError::Input(format!("bad generator {text:?}; expected KIND:N or random:N:SEED"));
    let parts: Vec<&str> = text.split(':').collect();
    let n: usize = parts.get(1).and_then(|n| n.parse().ok()).ok_or_else(bad)?;
    let shape = match (parts[0], parts.len()) {
        ("path", 2) => Shape::Path,
        ("cycle", 2) => Shape::Cycle,
        ("star", 2) => Shape::Star,
        ("complete", 2) => Shape::Complete,
        ("random", 3) => Shape::Random {
            seed: parts[2].parse().map_err(|_| bad())?,
        },
        ("random", 2) => return Err(CliError::Input("random networks need a seed: random:N:SEED".into())),
        _ => return Err(bad()),
    };
    generate(shape, n).map_err(input(text))
}

fn load_network(src: &NetworkSource) -> Result<Network, CliError> {
    match (&src.net, &src.generator) {
        (Some(path), _) => parse_network(&read(path)?).map_err(input(path.display())),
        (None, Some(text)) => parse_generator(text),
        (None, None) => Err(CliError::Input("no network given".into())),
    }
}

pub fn parse_strategy(name: &str, plan: Option<&Path>) -> Result<StrategyKind, CliError> {
    let (base, arg) = name.split_once(':').map_or((name, None), |(b, a)| (b, Some(a)));
    Ok(match (base, arg) {
        ("synchronous", None) => StrategyKind::Synchronous,
        ("central_first", None) => StrategyKind::CentralFirst,
        ("central_random", None) => StrategyKind::CentralRandom,
        ("greedy_adversary", None) => StrategyKind::GreedyAdversary,
        ("random_subset", p) => {
            let p: f64 = p.unwrap_or("0.5").parse().map_err(input("random_subset probability"))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::Input(format!("probability {p} is not in [0, 1]")));
            }
            StrategyKind::RandomSubset(p)
        }
        ("scripted", None) => {
            let path = plan.ok_or_else(|| CliError::Input("scripted strategy needs --plan".into()))?;
            StrategyKind::Scripted(parse_plan(&read(path)?).map_err(input(path.display()))?)
        }
        _ => return Err(CliError::Input(format!("unknown strategy {name:?}"))),
    })
}

enum InitialSource {
    One(Configuration),
    Enumerate,
}

fn initial_source(net: &Network, init: &str, d_max: u64) -> Result<InitialSource, CliError> {
    if init == "zeros" {
        let zeros = vec![0; net.node_count()];
        return Ok(InitialSource::One(
            Configuration::with_first_parents(net, &zeros).map_err(input("zeros"))?,
        ));
    }
    if init == "enumerate" {
        return Ok(InitialSource::Enumerate);
    }
    if let Some(seed) = init.strip_prefix("random:") {
        let seed: u64 = seed.parse().map_err(input("random seed"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return Ok(InitialSource::One(Configuration::random(net, d_max, &mut rng)));
    }
    let path = Path::new(init);
    Ok(InitialSource::One(
        parse_config(net, &read(path)?).map_err(input(path.display()))?,
    ))
}

fn class_tally(t: [usize; 3]) -> Value {
    json!({"Root": t[0], "D": t[1], "Par": t[2]})
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let net = load_network(&args.network)?;
    let kind = parse_strategy(&args.strategy, args.plan.as_deref())?;
    let run = |cfg: &Configuration| {
        let mut strategy = kind.build();
        run_execution(&net, cfg, strategy.as_mut(), args.max_steps, args.seed)
            .map_err(|e| CliError::Verification(format!("execution aborted: {e}")))
    };
    match initial_source(&net, &args.init, args.dmax)? {
        InitialSource::One(cfg) => {
            let trace = run(&cfg)?;
            if let Some(out) = &args.out {
                write(out, &to_json(&TraceJson(&trace)))?;
            }
            let legitimate = is_legitimate(&net, trace.last());
            let terminated = trace.outcome == Outcome::Terminated;
            info!("{} steps, terminated={terminated}, legitimate={legitimate}", trace.steps.len());
            let summary = json!({
                "strategy": kind.build().name(),
                "seed": args.seed,
                "steps": trace.steps.len(),
                "outcome": if terminated { "terminated" } else { "truncated" },
                "final_legitimate": legitimate,
                "classes": class_tally(trace.class_tally()),
            });
            if terminated && !legitimate {
                return Err(CliError::Verification(format!(
                    "terminal configuration is not legitimate: {}",
                    to_json(&summary)
                )));
            }
            Ok(to_json(&summary))
        }
        InitialSource::Enumerate => {
            if args.out.is_some() {
                return Err(CliError::Input("--out needs a single initial configuration".into()));
            }
            let mut runs = 0u64;
            let mut longest = 0usize;
            let mut tally = [0usize; 3];
            let mut truncated = 0u64;
            let mut bad = 0u64;
            for cfg in stabilis_core::checker::enumerate_initial_configs(&net, args.dmax) {
                let trace = run(&cfg)?;
                runs += 1;
                longest = longest.max(trace.steps.len());
                for (t, x) in tally.iter_mut().zip(trace.class_tally()) {
                    *t += x;
                }
                match trace.outcome {
                    Outcome::Terminated if !is_legitimate(&net, trace.last()) => bad += 1,
                    Outcome::Terminated => {}
                    Outcome::Truncated(_) => truncated += 1,
                }
            }
            let summary = json!({
                "strategy": kind.build().name(),
                "seed": args.seed,
                "runs": runs,
                "longest_run": longest,
                "truncated_runs": truncated,
                "non_legitimate_terminals": bad,
                "classes": class_tally(tally),
            });
            if bad > 0 {
                return Err(CliError::Verification(to_json(&summary)));
            }
            Ok(to_json(&summary))
        }
    }
}

fn check_one(
    net: &Network,
    d_max: u64,
    init: Option<&Configuration>,
    max_states: usize,
) -> Result<(StepGraph, CheckOutcome), CliError> {
    let mut limits = Limits::for_instance(net, d_max);
    limits.max_states = max_states;
    let breach = |e| CliError::Verification(format!("exploration failed: {e}"));
    match init {
        None => check_network(net, d_max, limits).map_err(breach),
        Some(cfg) => {
            let max_d = cfg.d_values().max().unwrap_or(0);
            limits.max_d = limits.max_d.max(2 * max_d + net.node_count() as u64);
            let g = explore(net, [cfg.clone()], limits).map_err(breach)?;
            let outcome = CheckOutcome {
                initial_count: 1,
                states: g.vertices().len(),
                edges: g.edges().len(),
                convergence: verify_convergence(net, &g),
                worst_case_steps: worst_case_steps(&g).ok(),
                monitors: monitor_graph(net, &g),
            };
            Ok((g, outcome))
        }
    }
}

pub fn cmd_check(args: &CheckArgs) -> Result<String, CliError> {
    let networks: Vec<Network> = match (&args.net, &args.generator, args.all_graphs) {
        (Some(path), _, _) => vec![parse_network(&read(path)?).map_err(input(path.display()))?],
        (None, Some(text), _) => vec![parse_generator(text)?],
        (None, None, Some(n)) if n >= 1 => enumerate_networks(n),
        (None, None, Some(_)) => return Err(CliError::Input("--all-graphs needs N >= 1".into())),
        (None, None, None) => return Err(CliError::Input("give --net, --gen or --all-graphs".into())),
    };

    if let Some(path) = &args.replay {
        let [net] = networks.as_slice() else {
            return Err(CliError::Input("--replay needs a single network".into()));
        };
        let trace = parse_trace(net, &read(path)?).map_err(input(path.display()))?;
        return match validate_trace(net, &trace) {
            Ok(()) => Ok(to_json(&json!({"valid": true, "steps": trace.steps.len()}))),
            Err(e) => Err(CliError::Verification(to_json(
                &json!({"valid": false, "error": e.to_string()}),
            ))),
        };
    }
    if args.dot.is_some() && networks.len() != 1 {
        return Err(CliError::Input("--dot needs a single network".into()));
    }
    let init = match &args.init {
        Some(path) if networks.len() == 1 => {
            Some(parse_config(&networks[0], &read(path)?).map_err(input(path.display()))?)
        }
        Some(_) => return Err(CliError::Input("--init needs a single network".into())),
        None => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(input("thread pool"))?;
    let results: Vec<Result<(Option<StepGraph>, CheckOutcome), CliError>> = pool.install(|| {
        networks
            .par_iter()
            .map(|net| {
                debug!("checking network with {} nodes", net.node_count());
                let (g, o) = check_one(net, args.dmax, init.as_ref(), args.max_states)?;
                Ok((args.dot.is_some().then_some(g), o))
            })
            .collect()
    });
    let mut outcomes = Vec::with_capacity(results.len());
    for r in results {
        outcomes.push(r?);
    }
    if let (Some(path), Some((Some(g), _))) = (&args.dot, outcomes.first()) {
        write(path, &dot(g))?;
    }

    let entries: Vec<NetworkCheckJson<'_>> = networks
        .iter()
        .zip(&outcomes)
        .map(|(network, (_, outcome))| NetworkCheckJson { network, outcome })
        .collect();
    let verified = outcomes.iter().all(|(_, o)| o.verified());
    let summary = json!({
        "networks": outcomes.len(),
        "states": outcomes.iter().map(|(_, o)| o.states as u64).sum::<u64>(),
        "edges": outcomes.iter().map(|(_, o)| o.edges as u64).sum::<u64>(),
        "violations": outcomes.iter().map(|(_, o)| o.monitors.total_violations()).sum::<u64>(),
        "max_worst_case_steps": outcomes.iter().filter_map(|(_, o)| o.worst_case_steps).max(),
        "verified": verified,
    });
    let report = json!({
        "d_max": args.dmax,
        "initial": if init.is_some() { "file" } else { "enumerate" },
        "networks": serde_json::to_value(&entries).expect("report serializes"),
        "summary": summary,
    });
    let text = to_json(&report);
    let stdout = match &args.out {
        Some(path) => {
            write(path, &text)?;
            to_json(&summary)
        }
        None => text,
    };
    if verified {
        Ok(stdout)
    } else {
        Err(CliError::Verification(stdout))
    }
}

pub fn cmd_potential(args: &PotentialArgs) -> Result<String, CliError> {
    let net = parse_network(&read(&args.net)?).map_err(input(args.net.display()))?;
    let cfg = parse_config(&net, &read(&args.config)?).map_err(input(args.config.display()))?;
    Ok(to_json(&potential_report(&net, &cfg)))
}

pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Check(a) => cmd_check(a),
        Command::Potential(a) => cmd_potential(a),
    }
}
