use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use ecocache::energy::{EnergyParams, Mode};
use ecocache::exact::SolveLimits;
use ecocache::gsac::{SaParams, ServerPolicy};
use ecocache::harness::{
    emit_results, iteration_instance, render_results, run_algorithm, run_experiment, Algorithm,
    ExperimentConfig, Format, SolveBundle, Sweep, SweepAxis, SweepPoint, TopologySource,
};
use ecocache::model::build_model;
use ecocache::scalar::rational_from_f64;
use ecocache::scenario::ScenarioDoc;
use ecocache::topology::{load_network, TopologyKind};
use ecocache::{Error, Result};

#[derive(Parser)]
#[command(name = "ecocache", version, about = "Energy-aware proactive caching with multipath delivery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one generated or pinned instance with one algorithm.
    Solve(SolveArgs),
    /// Run a Monte Carlo sweep and write the aggregated table.
    Sweep(SweepArgs),
    /// Topology utilities.
    Topology {
        #[command(subcommand)]
        command: TopologyCommand,
    },
    /// Re-check a solution bundle written by `solve`.
    Verify {
        bundle: PathBuf,
    },
}

#[derive(Subcommand)]
enum TopologyCommand {
    /// Write a topology as JSON.
    Export {
        #[arg(long, default_value = "original10")]
        topology: String,
        /// Storage per caching node in GB.
        #[arg(long)]
        space: Option<f64>,
        /// Capacity per link in Gbps.
        #[arg(long)]
        bandwidth: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "p1")]
    mode: Mode,
    /// tree10, original10, mesh10 or a topology JSON file.
    #[arg(long, default_value = "original10")]
    topology: String,
    #[arg(long, default_value_t = 100)]
    requests: usize,
    #[arg(long, default_value_t = 100)]
    contents: usize,
    /// Storage per caching node in GB (default: the topology's own).
    #[arg(long)]
    space: Option<f64>,
    /// Capacity per link in Gbps (default: the topology's own).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Probability that a user asks for its predicted content.
    #[arg(long, default_value_t = 1.0)]
    accuracy: f64,
    #[arg(long, default_value_t = 3)]
    k_paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds per exact solve; 0 removes the limit.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    /// Search nodes per exact solve.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Charge server-path flows against link capacity in GSAC (default).
    #[arg(long, conflicts_with = "literal")]
    strict: bool,
    /// Leave server-path flows unchecked in GSAC.
    #[arg(long)]
    literal: bool,
    /// Power density of caching, W/bit.
    #[arg(long)]
    alpha: Option<f64>,
    /// Energy per bit per hop, J/bit.
    #[arg(long)]
    beta: Option<f64>,
    /// Caching epoch in seconds.
    #[arg(long)]
    epoch: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Proposals per temperature level.
    #[arg(long)]
    chain_length: Option<u32>,
    /// Keep one catalog for the whole experiment instead of redrawing it.
    #[arg(long)]
    fixed_catalog: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, alias = "algorithms", default_value = "exact")]
    algorithm: Algorithm,
    /// Pinned scenario JSON instead of a generated one.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Which Monte Carlo iteration's instance to generate.
    #[arg(long, default_value_t = 0)]
    iteration: usize,
    /// Also write the ILP in LP format.
    #[arg(long)]
    lp: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "none")]
    axis: SweepAxis,
    /// Comma-separated values; the axis default otherwise.
    #[arg(long)]
    values: Option<String>,
    #[arg(long, default_value = "exact,gsac,greedy,random,nocache")]
    algorithms: String,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    #[arg(long)]
    threads: Option<usize>,
    /// Fill the solve time column.
    #[arg(long)]
    timing: bool,
    #[arg(long, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve(args) => solve(args),
        Command::Sweep(args) => sweep(args),
        Command::Topology { command: TopologyCommand::Export { topology, space, bandwidth, out } } => {
            let config = ExperimentConfig {
                topology: topology_source(&topology)?,
                storage_gb: space,
                bandwidth_gbps: bandwidth,
                ..ExperimentConfig::default()
            };
            config.validate()?;
            let (_, network) = config.network_at(&SweepPoint::Base)?;
            write_output(out.as_deref(), &network.to_json()?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { bundle } => {
            let bundle = SolveBundle::parse(&std::fs::read_to_string(&bundle)?)?;
            let report = bundle.verify()?;
            print!("{report}");
            let ok = report.passes_with_flagged_overload(&bundle.solution);
            if bundle.solution.overloaded_flows > 0 {
                println!("flagged server overloads: {}", bundle.solution.overloaded_flows);
            }
            println!("{}", if ok { "verified" } else { "FAILED" });
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let mut config = config_from(&args.common)?;
    if let Some(path) = &args.scenario {
        config.pinned = Some(ScenarioDoc::parse(&std::fs::read_to_string(path)?)?);
    }
    config.validate()?;
    let instance = iteration_instance(&config, &SweepPoint::Base, args.iteration)?;
    if let Some(path) = &args.lp {
        std::fs::write(path, build_model(&instance, config.mode)?.to_lp())?;
    }
    let solution = run_algorithm(&config, &instance, args.algorithm, args.iteration, &[])?;
    eprintln!(
        "{} {}: {:?}, {:.6} J (caching {:.6} J, transmission {:.6} J), overloaded flows {}",
        args.algorithm,
        config.mode,
        solution.status,
        solution.total_joules(),
        solution.energy.to_f64().caching,
        solution.energy.to_f64().transmission,
        solution.overloaded_flows,
    );
    let bundle = SolveBundle::new(&instance, config.k_paths, args.algorithm, solution);
    write_output(args.out.as_deref(), &bundle.to_json()?)?;
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let mut config = config_from(&args.common)?;
    config.algorithms = Algorithm::parse_list(&args.algorithms)?;
    config.iterations = args.iterations;
    config.threads = args.threads;
    config.timing = args.timing;
    config.sweep = match &args.values {
        Some(values) => Sweep::with_points(args.axis, args.axis.parse_points(values)?),
        None => Sweep::over(args.axis),
    };
    let rows = run_experiment(&config)?;
    match &args.out {
        Some(path) => emit_results(&rows, args.format, path)?,
        None => print!("{}", render_results(&rows, args.format)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn config_from(common: &Common) -> Result<ExperimentConfig> {
    let defaults = ExperimentConfig::default();
    let sa = SaParams::new(
        common.t0.unwrap_or(defaults.sa.t0),
        common.t_end.unwrap_or(defaults.sa.t_end),
        common.gamma.unwrap_or(defaults.sa.gamma),
        common.chain_length.unwrap_or(defaults.sa.chain_length),
    )?;
    let override_with = |value: Option<f64>, fallback| value.map(rational_from_f64).unwrap_or(Ok(fallback));
    let params = EnergyParams {
        alpha: override_with(common.alpha, defaults.params.alpha)?,
        beta: override_with(common.beta, defaults.params.beta)?,
        epoch: override_with(common.epoch, defaults.params.epoch)?,
    };
    if !(common.time_limit.is_finite() && common.time_limit >= 0.0) {
        return Err(Error::InvalidParameter(format!("time limit {} is not a duration", common.time_limit)));
    }
    let limits = SolveLimits {
        time: (common.time_limit > 0.0).then(|| Duration::from_secs_f64(common.time_limit)),
        nodes: common.node_limit,
    };
    Ok(ExperimentConfig {
        topology: topology_source(&common.topology)?,
        mode: common.mode,
        seed: common.seed,
        k_paths: common.k_paths,
        contents: common.contents,
        requests: common.requests,
        storage_gb: common.space,
        bandwidth_gbps: common.bandwidth,
        accuracy: common.accuracy,
        params,
        sa,
        policy: if common.literal { ServerPolicy::Unchecked } else { ServerPolicy::Strict },
        limits,
        redraw_catalog: !common.fixed_catalog,
        ..defaults
    })
}

fn topology_source(text: &str) -> Result<TopologySource> {
    if let Ok(kind) = text.parse::<TopologyKind>() {
        return Ok(TopologySource::Builtin(kind));
    }
    let path = Path::new(text);
    if !path.exists() {
        return Err(Error::Parse(format!("{text:?} is neither a built-in topology nor a file")));
    }
    let network = load_network(&std::fs::read_to_string(path)?)?;
    let name = path.file_stem().map_or_else(|| text.to_string(), |s| s.to_string_lossy().into_owned());
    Ok(TopologySource::Custom { name, network })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
