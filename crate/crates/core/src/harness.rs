//! Monte Carlo experiments: sweep definitions, paired runs of every
//! algorithm on identical instances, aggregation and CSV/JSON output.
//!
//! Iteration `i` of an experiment with base seed `s` draws all of its
//! randomness from streams hashed out of `s + i`, whatever the sweep point.
//! Neighbouring sweep points therefore see the same catalog and the same
//! users (a request sweep grows one user sequence), which keeps trends
//! across a sweep free of sampling noise between points.

use std::fmt;
use std::path::Path as FsPath;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{deliver, greedy_caching, no_caching_routing, random_caching};
use crate::energy::{energy_breakdown, energy_gain, cache_hit_ratio, Mode, Placement, Routing};
use crate::exact::{solve_exact_with_hints, SolveLimits};
use crate::gsac::{gsac_solve_with, SaParams, ServerPolicy};
use crate::model::{build_model, verify, Solution, VerifyReport};
use crate::scenario::{
    generate_catalog, generate_demand, perturb_prediction, stream_seed, Demand, Instance, ScenarioDoc,
    UserProfile, DEFAULT_BANDWIDTH_RANGE, DEFAULT_CONTENTS, DEFAULT_REQUESTS, DEFAULT_SIZE_RANGE,
};
use crate::topology::{build_path_table, builtin_topology, Network, NetworkDoc, PathTable, TopologyKind};
use crate::units::{gb_to_bits, gbps_to_bps};
use crate::{Error, ExactParams, Result};

const TAG_CATALOG: u64 = 1;
const TAG_DEMAND: u64 = 2;
const TAG_ACCURACY: u64 = 3;
const TAG_GSAC: u64 = 4;
const TAG_RANDOM: u64 = 5;

/// Algorithms the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "gsac")]
    Gsac,
    #[serde(rename = "greedy")]
    Greedy,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "nocache")]
    NoCaching,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Exact, Algorithm::Gsac, Algorithm::Greedy, Algorithm::Random, Algorithm::NoCaching];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Exact => "exact",
            Algorithm::Gsac => "gsac",
            Algorithm::Greedy => "greedy",
            Algorithm::Random => "random",
            Algorithm::NoCaching => "nocache",
        }
    }

    /// Comma-separated names; duplicates are dropped, `all` expands to
    /// every algorithm.
    pub fn parse_list(text: &str) -> Result<Vec<Algorithm>> {
        let mut list = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let add: Vec<Algorithm> =
                if item == "all" { Algorithm::ALL.to_vec() } else { vec![item.parse()?] };
            for a in add {
                if !list.contains(&a) {
                    list.push(a);
                }
            }
        }
        if list.is_empty() {
            return Err(Error::Parse("empty algorithm list".into()));
        }
        Ok(list)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Algorithm::Exact),
            "gsac" => Ok(Algorithm::Gsac),
            "greedy" => Ok(Algorithm::Greedy),
            "random" => Ok(Algorithm::Random),
            "nocache" | "no-caching" => Ok(Algorithm::NoCaching),
            other => Err(Error::Parse(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Where the network comes from.
#[derive(Debug, Clone)]
pub enum TopologySource {
    Builtin(TopologyKind),
    Custom { name: String, network: Network },
}

impl TopologySource {
    pub fn name(&self) -> &str {
        match self {
            TopologySource::Builtin(kind) => kind.name(),
            TopologySource::Custom { name, .. } => name,
        }
    }

    pub fn network(&self) -> Network {
        match self {
            TopologySource::Builtin(kind) => builtin_topology(*kind),
            TopologySource::Custom { network, .. } => network.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    None,
    Requests,
    Space,
    Bandwidth,
    Accuracy,
    Topology,
    /// Storage and bandwidth together, every pair of the given values.
    Grid,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::None => "none",
            SweepAxis::Requests => "requests",
            SweepAxis::Space => "space",
            SweepAxis::Bandwidth => "bandwidth",
            SweepAxis::Accuracy => "accuracy",
            SweepAxis::Topology => "topology",
            SweepAxis::Grid => "grid",
        }
    }

    /// The sweep run when no values are given.
    pub fn default_points(self) -> Vec<SweepPoint> {
        let quarters = [0.25, 0.5, 0.75, 1.0];
        match self {
            SweepAxis::None => vec![SweepPoint::Base],
            SweepAxis::Requests => (1..=8).map(|i| SweepPoint::Requests(20 * i)).collect(),
            SweepAxis::Space => quarters.iter().map(|&v| SweepPoint::Space(v)).collect(),
            SweepAxis::Bandwidth => quarters.iter().map(|&v| SweepPoint::Bandwidth(v)).collect(),
            SweepAxis::Accuracy => {
                [1.0, 0.8, 0.6, 0.4, 0.2, 0.0].iter().map(|&v| SweepPoint::Accuracy(v)).collect()
            }
            SweepAxis::Topology => TopologyKind::ALL.iter().map(|&k| SweepPoint::Topology(k)).collect(),
            SweepAxis::Grid => quarters
                .iter()
                .flat_map(|&w| quarters.iter().map(move |&c| SweepPoint::Grid(w, c)))
                .collect(),
        }
    }

    /// Points from a comma-separated value list.
    pub fn parse_points(self, text: &str) -> Result<Vec<SweepPoint>> {
        let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if items.is_empty() {
            return Err(Error::Parse(format!("no values given for the {} sweep", self.name())));
        }
        let number = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse(format!("bad sweep value {s:?}")))
        };
        match self {
            SweepAxis::None => Err(Error::Parse("the none axis takes no values".into())),
            SweepAxis::Requests => items
                .iter()
                .map(|s| {
                    s.parse::<usize>()
                        .map(SweepPoint::Requests)
                        .map_err(|_| Error::Parse(format!("bad request count {s:?}")))
                })
                .collect(),
            SweepAxis::Space => items.iter().map(|s| number(s).map(SweepPoint::Space)).collect(),
            SweepAxis::Bandwidth => items.iter().map(|s| number(s).map(SweepPoint::Bandwidth)).collect(),
            SweepAxis::Accuracy => items.iter().map(|s| number(s).map(SweepPoint::Accuracy)).collect(),
            SweepAxis::Topology => items.iter().map(|s| s.parse().map(SweepPoint::Topology)).collect(),
            SweepAxis::Grid => {
                let values = items.iter().map(|s| number(s)).collect::<Result<Vec<f64>>>()?;
                Ok(values
                    .iter()
                    .flat_map(|&w| values.iter().map(move |&c| SweepPoint::Grid(w, c)))
                    .collect())
            }
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(SweepAxis::None),
            "requests" => Ok(SweepAxis::Requests),
            "space" => Ok(SweepAxis::Space),
            "bandwidth" => Ok(SweepAxis::Bandwidth),
            "accuracy" => Ok(SweepAxis::Accuracy),
            "topology" => Ok(SweepAxis::Topology),
            "grid" => Ok(SweepAxis::Grid),
            other => Err(Error::Parse(format!("unknown sweep axis {other:?}"))),
        }
    }
}

/// One setting of the swept quantity. Space is in GB per caching node,
/// bandwidth in Gbps per link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepPoint {
    Base,
    Requests(usize),
    Space(f64),
    Bandwidth(f64),
    Accuracy(f64),
    Topology(TopologyKind),
    Grid(f64, f64),
}

impl SweepPoint {
    pub fn label(&self) -> String {
        match self {
            SweepPoint::Base => "-".into(),
            SweepPoint::Requests(r) => r.to_string(),
            SweepPoint::Space(v) | SweepPoint::Bandwidth(v) | SweepPoint::Accuracy(v) => v.to_string(),
            SweepPoint::Topology(kind) => kind.name().into(),
            SweepPoint::Grid(w, c) => format!("{w}x{c}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

impl Sweep {
    pub fn single() -> Self {
        Sweep { axis: SweepAxis::None, points: vec![SweepPoint::Base] }
    }

    pub fn over(axis: SweepAxis) -> Self {
        Sweep { axis, points: axis.default_points() }
    }

    pub fn with_points(axis: SweepAxis, points: Vec<SweepPoint>) -> Self {
        Sweep { axis, points }
    }
}

/// Everything that defines an experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub topology: TopologySource,
    pub mode: Mode,
    pub algorithms: Vec<Algorithm>,
    pub iterations: usize,
    pub seed: u64,
    pub k_paths: usize,
    pub contents: usize,
    pub requests: usize,
    /// Storage per caching node in GB; `None` keeps the topology's own.
    pub storage_gb: Option<f64>,
    /// Capacity per link in Gbps; `None` keeps the topology's own.
    pub bandwidth_gbps: Option<f64>,
    pub accuracy: f64,
    pub size_range: (u64, u64),
    pub bandwidth_range: (u64, u64),
    pub params: ExactParams,
    pub sa: SaParams,
    pub policy: ServerPolicy,
    pub limits: SolveLimits,
    /// Draw a fresh catalog every iteration instead of one per experiment.
    pub redraw_catalog: bool,
    /// Report wall-clock solve times. Off by default so that output files
    /// depend on the seed alone.
    pub timing: bool,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    /// Fixed catalog and demand used by every iteration instead of drawn ones.
    pub pinned: Option<ScenarioDoc>,
    pub sweep: Sweep,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology: TopologySource::Builtin(TopologyKind::Original10),
            mode: Mode::P1,
            algorithms: Algorithm::ALL.to_vec(),
            iterations: 100,
            seed: 0,
            k_paths: 3,
            contents: DEFAULT_CONTENTS,
            requests: DEFAULT_REQUESTS,
            storage_gb: None,
            bandwidth_gbps: None,
            accuracy: 1.0,
            size_range: DEFAULT_SIZE_RANGE,
            bandwidth_range: DEFAULT_BANDWIDTH_RANGE,
            params: ExactParams::default(),
            sa: SaParams::default(),
            policy: ServerPolicy::Strict,
            limits: SolveLimits::default(),
            redraw_catalog: true,
            timing: false,
            threads: None,
            pinned: None,
            sweep: Sweep::single(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.k_paths == 0 {
            return bad("k must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("no algorithm selected".into());
        }
        if self.threads == Some(0) {
            return bad("thread count must be positive".into());
        }
        if self.sweep.points.is_empty() {
            return bad("sweep has no points".into());
        }
        self.sa.validate()?;
        check_resource("space", self.storage_gb)?;
        check_resource("bandwidth", self.bandwidth_gbps)?;
        check_accuracy(self.accuracy)?;
        if self.pinned.is_none() && self.contents == 0 {
            return bad("catalog must contain at least one content".into());
        }
        for point in &self.sweep.points {
            match *point {
                SweepPoint::Requests(_) if self.pinned.is_some() => {
                    return bad("a pinned scenario cannot be swept over request counts".into())
                }
                SweepPoint::Topology(_) if matches!(self.topology, TopologySource::Custom { .. }) => {
                    return bad("a topology sweep uses the built-in topologies only".into())
                }
                SweepPoint::Space(v) => check_resource("space", Some(v))?,
                SweepPoint::Bandwidth(v) => check_resource("bandwidth", Some(v))?,
                SweepPoint::Grid(w, c) => {
                    check_resource("space", Some(w))?;
                    check_resource("bandwidth", Some(c))?;
                }
                SweepPoint::Accuracy(v) => check_accuracy(v)?,
                _ => {}
            }
        }
        Ok(())
    }

    /// Topology name and network at `point`, with resource overrides applied.
    pub fn network_at(&self, point: &SweepPoint) -> Result<(String, Network)> {
        let (mut storage, mut bandwidth) = (self.storage_gb, self.bandwidth_gbps);
        let mut source = self.topology.clone();
        match *point {
            SweepPoint::Space(v) => storage = Some(v),
            SweepPoint::Bandwidth(v) => bandwidth = Some(v),
            SweepPoint::Topology(kind) => source = TopologySource::Builtin(kind),
            SweepPoint::Grid(w, c) => {
                storage = Some(w);
                bandwidth = Some(c);
            }
            _ => {}
        }
        let mut network = source.network();
        if let Some(gb) = storage {
            let bits = gb_to_bits(gb);
            for e in 1..network.node_count() {
                network = network.with_storage(e, bits);
            }
        }
        if let Some(gbps) = bandwidth {
            let bps = gbps_to_bps(gbps);
            for l in 0..network.link_count() {
                network = network.with_capacity(l, bps)?;
            }
        }
        Ok((source.name().to_string(), network))
    }

    fn setup(&self, point: &SweepPoint) -> Result<PointSetup> {
        let (topology, network) = self.network_at(point)?;
        let requests = if let SweepPoint::Requests(r) = *point { r } else { self.requests };
        let accuracy = if let SweepPoint::Accuracy(v) = *point { v } else { self.accuracy };
        let paths = Arc::new(build_path_table(&network, self.k_paths));
        Ok(PointSetup { label: point.label(), topology, network: Arc::new(network), paths, requests, accuracy })
    }
}

fn check_resource(what: &str, value: Option<f64>) -> Result<()> {
    match value {
        Some(v) if !(v.is_finite() && v > 0.0) => {
            Err(Error::InvalidParameter(format!("{what} must be positive and finite, got {v}")))
        }
        _ => Ok(()),
    }
}

fn check_accuracy(value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("accuracy {value} outside [0, 1]")))
    }
}

/// A sweep point resolved against the base configuration.
#[derive(Debug, Clone)]
struct PointSetup {
    label: String,
    topology: String,
    network: Arc<Network>,
    paths: Arc<PathTable>,
    requests: usize,
    accuracy: f64,
}

/// Seed of one randomness stream of one iteration.
pub fn iteration_seed(base: u64, iteration: usize, tag: u64) -> u64 {
    stream_seed(base.wrapping_add(iteration as u64), &[tag])
}

/// The instance iteration `iteration` plans and delivers at `point`.
pub fn iteration_instance(config: &ExperimentConfig, point: &SweepPoint, iteration: usize) -> Result<Instance> {
    let setup = config.setup(point)?;
    build_instance(config, &setup, iteration)
}

fn build_instance(config: &ExperimentConfig, setup: &PointSetup, iteration: usize) -> Result<Instance> {
    let nodes = setup.network.node_count();
    let (catalog, profiles, params) = match &config.pinned {
        Some(doc) => {
            let demand = doc.demand(nodes)?;
            (doc.catalog.clone(), expand_profiles(&demand), doc.params()?)
        }
        None => {
            let catalog_seed = if config.redraw_catalog {
                iteration_seed(config.seed, iteration, TAG_CATALOG)
            } else {
                stream_seed(config.seed, &[TAG_CATALOG])
            };
            let catalog =
                generate_catalog(config.contents, config.size_range, config.bandwidth_range, catalog_seed)?;
            let (profiles, _) = generate_demand(
                catalog.len(),
                &setup.network.ars(),
                nodes,
                setup.requests,
                iteration_seed(config.seed, iteration, TAG_DEMAND),
            )?;
            (catalog, profiles, config.params)
        }
    };
    let predicted = Demand::from_profiles(&profiles, catalog.len(), nodes);
    let (_, actual) = perturb_prediction(
        &profiles,
        catalog.len(),
        nodes,
        setup.accuracy,
        iteration_seed(config.seed, iteration, TAG_ACCURACY),
    )?;
    Instance::new(setup.network.clone(), setup.paths.clone(), catalog, predicted, actual, params)
}

/// One user per unit of demand, in content then AR order.
fn expand_profiles(demand: &Demand) -> Vec<UserProfile> {
    demand
        .entries()
        .flat_map(|(content, ar, count)| (0..count).map(move |_| UserProfile { ar, content }))
        .collect()
}

/// Plan with one algorithm on the predicted demand of `instance`.
///
/// `hints` are earlier solutions of the same instance; the exact search
/// starts from the cheapest feasible one (greedy is always tried).
pub fn run_algorithm(
    config: &ExperimentConfig,
    instance: &Instance,
    algorithm: Algorithm,
    iteration: usize,
    hints: &[Solution],
) -> Result<Solution> {
    let mode = config.mode;
    match algorithm {
        Algorithm::Exact => {
            let model = build_model(instance, mode)?;
            let mut starts = vec![greedy_caching(instance, mode)];
            starts.extend(hints.iter().cloned());
            solve_exact_with_hints(&model, &config.limits, &starts)
        }
        Algorithm::Gsac => gsac_solve_with(
            instance,
            mode,
            &config.sa,
            iteration_seed(config.seed, iteration, TAG_GSAC),
            config.policy,
        ),
        Algorithm::Greedy => Ok(greedy_caching(instance, mode)),
        Algorithm::Random => {
            Ok(random_caching(instance, mode, iteration_seed(config.seed, iteration, TAG_RANDOM)))
        }
        Algorithm::NoCaching => Ok(crate::baselines::no_caching(instance, mode)),
    }
}

/// Metrics of one algorithm on one iteration, measured on actual demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub energy: f64,
    pub caching: f64,
    pub transmission: f64,
    pub gain: Option<f64>,
    pub hit_ratio: f64,
    pub solve_time: f64,
    pub overloaded: u32,
    pub gap: Option<f64>,
}

/// Result of one algorithm on one iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Sample(Sample),
    /// Infeasible, unresolved within limits, or the solver failed.
    Dropped { reason: String },
}

/// Run every configured algorithm on one iteration's instance, in the
/// configured order.
pub fn run_iteration(config: &ExperimentConfig, point: &SweepPoint, iteration: usize) -> Result<Vec<Outcome>> {
    let setup = config.setup(point)?;
    Ok(iterate(config, &[&setup], iteration)?.remove(0))
}

/// A planned solution with its solve time, or why there is none.
type Plan = std::result::Result<(Solution, f64), String>;

/// Plan once on the shared predicted demand of `setups` (which differ at
/// most in accuracy), then deliver at every setup. Returns outcomes per
/// setup, algorithms in configured order.
fn iterate(config: &ExperimentConfig, setups: &[&PointSetup], iteration: usize) -> Result<Vec<Vec<Outcome>>> {
    let instances =
        setups.iter().map(|s| build_instance(config, s, iteration)).collect::<Result<Vec<Instance>>>()?;
    let planned = &instances[0];
    debug_assert!(instances.iter().all(|i| i.predicted == planned.predicted));
    let mode = config.mode;

    // heuristics first so their solutions can warm-start the exact search
    let mut order = config.algorithms.clone();
    order.sort_by_key(|a| a == &Algorithm::Exact);
    let mut hints = Vec::new();
    let mut plans: Vec<(Algorithm, Plan)> = Vec::new();
    for algorithm in order {
        if algorithm == Algorithm::NoCaching {
            plans.push((algorithm, Err(String::new())));
            continue;
        }
        let started = Instant::now();
        let plan = match run_algorithm(config, planned, algorithm, iteration, &hints) {
            Err(e) => Err(e.to_string()),
            Ok(solution) if !solution.status.has_solution() => Err(format!("{:?}", solution.status)),
            Ok(solution) => {
                let elapsed = started.elapsed().as_secs_f64();
                if algorithm != Algorithm::Exact {
                    hints.push(solution.clone());
                }
                Ok((solution, elapsed))
            }
        };
        plans.push((algorithm, plan));
    }

    Ok(instances
        .iter()
        .map(|instance| {
            let (ref_routing, ref_overloaded) = no_caching_routing(instance, &instance.actual, mode);
            let empty = Placement::empty(instance.catalog.len(), instance.network.node_count());
            let reference =
                energy_breakdown(&empty, &ref_routing, &instance.catalog, &instance.paths, &instance.params);
            let delivered_as_planned = instance.actual == instance.predicted;
            config
                .algorithms
                .iter()
                .map(|algorithm| {
                    if *algorithm == Algorithm::NoCaching {
                        let energy = reference.to_f64();
                        return Outcome::Sample(Sample {
                            energy: energy.total,
                            caching: 0.0,
                            transmission: energy.transmission,
                            gain: Some(1.0),
                            hit_ratio: cache_hit_ratio(&ref_routing, &instance.actual),
                            solve_time: 0.0,
                            overloaded: ref_overloaded,
                            gap: None,
                        });
                    }
                    let plan = &plans.iter().find(|(a, _)| a == algorithm).expect("every algorithm planned").1;
                    match plan {
                        Err(reason) => Outcome::Dropped { reason: reason.clone() },
                        Ok((solution, solve_time)) => {
                            let (routing, overloaded) = if delivered_as_planned {
                                (solution.routing.clone(), solution.overloaded_flows)
                            } else {
                                deliver(instance, &solution.placement, &instance.actual, mode)
                            };
                            Outcome::Sample(measure(
                                instance,
                                solution,
                                &routing,
                                overloaded,
                                reference.total,
                                *solve_time,
                            ))
                        }
                    }
                })
                .collect()
        })
        .collect())
}

fn measure(
    instance: &Instance,
    solution: &Solution,
    routing: &Routing,
    overloaded: u32,
    reference: crate::Rational,
    solve_time: f64,
) -> Sample {
    let exact = energy_breakdown(&solution.placement, routing, &instance.catalog, &instance.paths, &instance.params);
    let energy = exact.to_f64();
    Sample {
        energy: energy.total,
        caching: energy.caching,
        transmission: energy.transmission,
        gain: energy_gain(reference, exact.total).ok().map(crate::Scalar::to_joules),
        hit_ratio: cache_hit_ratio(routing, &instance.actual),
        solve_time,
        overloaded,
        gap: solution.gap,
    }
}

/// Aggregated metrics of one algorithm at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_axis: String,
    pub sweep_value: String,
    pub mode: Mode,
    pub topology: String,
    pub algorithm: Algorithm,
    /// Iterations attempted; kept samples are this minus `infeasible_count`.
    pub iterations: usize,
    #[serde(rename = "mean_energy_J")]
    pub mean_energy_j: Option<f64>,
    #[serde(rename = "std_energy_J")]
    pub std_energy_j: Option<f64>,
    #[serde(rename = "mean_EC_J")]
    pub mean_ec_j: Option<f64>,
    #[serde(rename = "mean_ET_J")]
    pub mean_et_j: Option<f64>,
    pub mean_gain: Option<f64>,
    pub std_gain: Option<f64>,
    pub mean_hit_ratio: Option<f64>,
    pub std_hit_ratio: Option<f64>,
    pub mean_solve_time_s: Option<f64>,
    pub infeasible_count: usize,
    pub overload_count: u64,
    pub gap_mean: Option<f64>,
}

/// Column order of emitted tables.
pub const COLUMNS: [&str; 18] = [
    "sweep_axis",
    "sweep_value",
    "mode",
    "topology",
    "algorithm",
    "iterations",
    "mean_energy_J",
    "std_energy_J",
    "mean_EC_J",
    "mean_ET_J",
    "mean_gain",
    "std_gain",
    "mean_hit_ratio",
    "std_hit_ratio",
    "mean_solve_time_s",
    "infeasible_count",
    "overload_count",
    "gap_mean",
];

/// Mean and sample standard deviation; the deviation of one value is 0.
pub fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (Some(mean), Some(std))
}

/// Fold per-iteration outcomes into one row.
pub fn aggregate(
    config: &ExperimentConfig,
    axis: SweepAxis,
    label: &str,
    topology: &str,
    algorithm: Algorithm,
    outcomes: &[Outcome],
) -> ResultRow {
    let samples: Vec<&Sample> = outcomes
        .iter()
        .filter_map(|o| match o {
            Outcome::Sample(s) => Some(s),
            Outcome::Dropped { .. } => None,
        })
        .collect();
    let column = |f: &dyn Fn(&Sample) -> Option<f64>| samples.iter().filter_map(|s| f(s)).collect::<Vec<f64>>();
    let (mean_energy, std_energy) = mean_std(&column(&|s| Some(s.energy)));
    let (mean_gain, std_gain) = mean_std(&column(&|s| s.gain));
    let (mean_hit, std_hit) = mean_std(&column(&|s| Some(s.hit_ratio)));
    ResultRow {
        sweep_axis: axis.name().into(),
        sweep_value: label.into(),
        mode: config.mode,
        topology: topology.into(),
        algorithm,
        iterations: outcomes.len(),
        mean_energy_j: mean_energy,
        std_energy_j: std_energy,
        mean_ec_j: mean_std(&column(&|s| Some(s.caching))).0,
        mean_et_j: mean_std(&column(&|s| Some(s.transmission))).0,
        mean_gain,
        std_gain,
        mean_hit_ratio: mean_hit,
        std_hit_ratio: std_hit,
        mean_solve_time_s: if config.timing { mean_std(&column(&|s| Some(s.solve_time))).0 } else { None },
        infeasible_count: outcomes.len() - samples.len(),
        overload_count: samples.iter().map(|s| u64::from(s.overloaded)).sum(),
        gap_mean: mean_std(&column(&|s| s.gap)).0,
    }
}

/// Per-iteration outcomes of a whole experiment, indexed
/// `[point][iteration][algorithm]`.
#[derive(Debug, Clone)]
pub struct RawResults {
    pub labels: Vec<String>,
    pub topologies: Vec<String>,
    pub outcomes: Vec<Vec<Vec<Outcome>>>,
}

/// Run every sweep point and iteration on a bounded worker pool.
pub fn run_raw(config: &ExperimentConfig) -> Result<RawResults> {
    config.validate()?;
    let setups = config.sweep.points.iter().map(|p| config.setup(p)).collect::<Result<Vec<_>>>()?;
    // accuracy points plan identically and only deliver differently
    let groups: Vec<Vec<usize>> = if config.sweep.axis == SweepAxis::Accuracy {
        vec![(0..setups.len()).collect()]
    } else {
        (0..setups.len()).map(|p| vec![p]).collect()
    };
    let units: Vec<(usize, usize)> =
        (0..groups.len()).flat_map(|g| (0..config.iterations).map(move |i| (g, i))).collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = config.threads {
        builder = builder.num_threads(threads);
    }
    let pool = builder.build().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let flat: Vec<Vec<Vec<Outcome>>> = pool.install(|| {
        units
            .par_iter()
            .map(|&(g, i)| {
                let members: Vec<&PointSetup> = groups[g].iter().map(|&p| &setups[p]).collect();
                iterate(config, &members, i)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut outcomes: Vec<Vec<Vec<Outcome>>> = vec![Vec::with_capacity(config.iterations); setups.len()];
    for ((g, _), per_member) in units.into_iter().zip(flat) {
        for (&p, per_algorithm) in groups[g].iter().zip(per_member) {
            outcomes[p].push(per_algorithm);
        }
    }
    Ok(RawResults {
        labels: setups.iter().map(|s| s.label.clone()).collect(),
        topologies: setups.iter().map(|s| s.topology.clone()).collect(),
        outcomes,
    })
}

/// Run an experiment and aggregate it into rows, ordered by sweep point
/// then by algorithm.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let raw = run_raw(config)?;
    Ok(rows_from_raw(config, &raw))
}

pub fn rows_from_raw(config: &ExperimentConfig, raw: &RawResults) -> Vec<ResultRow> {
    let mut algorithms = config.algorithms.clone();
    algorithms.sort();
    let mut rows = Vec::new();
    for (p, per_iteration) in raw.outcomes.iter().enumerate() {
        for &algorithm in &algorithms {
            let slot = config.algorithms.iter().position(|a| *a == algorithm).expect("configured");
            let outcomes: Vec<Outcome> = per_iteration.iter().map(|o| o[slot].clone()).collect();
            rows.push(aggregate(config, config.sweep.axis, &raw.labels[p], &raw.topologies[p], algorithm, &outcomes));
        }
    }
    rows
}

/// A solve result together with everything needed to check it again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveBundle {
    pub topology: NetworkDoc,
    pub scenario: ScenarioDoc,
    pub k_paths: usize,
    pub mode: Mode,
    pub algorithm: Algorithm,
    pub solution: Solution,
}

impl SolveBundle {
    pub fn new(instance: &Instance, k_paths: usize, algorithm: Algorithm, solution: Solution) -> Self {
        SolveBundle {
            topology: instance.network.to_document(),
            scenario: instance.to_scenario_doc(),
            k_paths,
            mode: solution.mode,
            algorithm,
            solution,
        }
    }

    pub fn parse(text: &str) -> Result<SolveBundle> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Rebuild the planned instance the solution was computed for.
    pub fn instance(&self) -> Result<Instance> {
        let network = Network::try_from(self.topology.clone())?;
        self.scenario.instantiate(network, self.k_paths)
    }

    pub fn verify(&self) -> Result<VerifyReport> {
        if self.solution.mode != self.mode {
            return Err(Error::InvalidScenario(format!(
                "bundle mode {} does not match solution mode {}",
                self.mode, self.solution.mode
            )));
        }
        verify(&self.solution, &self.instance()?, self.mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Parse(format!("unknown format {other:?}"))),
        }
    }
}

pub fn render_results(rows: &[ResultRow], format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(rows)? + "\n"),
        Format::Csv => {
            let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            writer.write_record(COLUMNS)?;
            for row in rows {
                writer.serialize(row)?;
            }
            let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
        }
    }
}

pub fn parse_results(text: &str, format: Format) -> Result<Vec<ResultRow>> {
    match format {
        Format::Json => serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string())),
        Format::Csv => {
            let mut reader = csv::Reader::from_reader(text.as_bytes());
            let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
            if header != COLUMNS {
                return Err(Error::Parse(format!("unexpected columns {header:?}")));
            }
            reader.deserialize().map(|r| r.map_err(Error::from)).collect()
        }
    }
}

pub fn emit_results(rows: &[ResultRow], format: Format, path: &FsPath) -> Result<()> {
    std::fs::write(path, render_results(rows, format)?)?;
    Ok(())
}
