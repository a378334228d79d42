//! Placement/routing decision types, the caching and transmission energy
//! model, and the evaluation metrics (energy gain, cache-hit ratio).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{parse_decimal, Rational, Scalar};
use crate::scenario::{Content, Demand};
use crate::topology::{NodeId, PathTable, SERVER};

/// Delivery mode: shared multicast flows (P1) or one flow per request (P2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    P1,
    P2,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::P1 => "p1",
            Mode::P2 => "p2",
        }
    }

    /// Number of flows a request count turns into.
    pub fn flows_for(self, requests: u32) -> u32 {
        match self {
            Mode::P1 => u32::from(requests > 0),
            Mode::P2 => requests,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1" | "multicast" => Ok(Mode::P1),
            "p2" | "unicast" => Ok(Mode::P2),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }
}

/// Energy coefficients: caching power per bit (W/bit), transmission energy
/// per bit per hop (J/bit/hop) and epoch length (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams<S> {
    pub alpha: S,
    pub beta: S,
    pub epoch: S,
}

impl Default for EnergyParams<Rational> {
    fn default() -> Self {
        EnergyParams {
            alpha: parse_decimal("2.5e-9").expect("literal"),
            beta: parse_decimal("4e-8").expect("literal"),
            epoch: Rational::from_integer(10),
        }
    }
}

impl EnergyParams<Rational> {
    pub fn convert<S: Scalar>(&self) -> EnergyParams<S> {
        EnergyParams {
            alpha: S::from_rational(self.alpha),
            beta: S::from_rational(self.beta),
            epoch: S::from_rational(self.epoch),
        }
    }
}

/// Binary cache matrix `x[n][e]`; the server column is never set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Placement {
    contents: usize,
    nodes: usize,
    bits: Vec<bool>,
}

impl Placement {
    pub fn empty(contents: usize, nodes: usize) -> Self {
        Placement { contents, nodes, bits: vec![false; contents * nodes] }
    }

    pub fn contents(&self) -> usize {
        self.contents
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn get(&self, content: usize, node: NodeId) -> bool {
        self.bits[content * self.nodes + node]
    }

    /// Set `x[content][node]`. Panics if `node` is the server.
    pub fn set(&mut self, content: usize, node: NodeId, cached: bool) {
        assert_ne!(node, SERVER, "the server cannot cache");
        self.bits[content * self.nodes + node] = cached;
    }

    pub fn nodes_for(&self, content: usize) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes).filter(move |&e| self.get(content, e))
    }

    pub fn copies(&self, content: usize) -> usize {
        self.nodes_for(content).count()
    }

    pub fn is_cached(&self, content: usize) -> bool {
        self.nodes_for(content).next().is_some()
    }

    /// Cached `(content, node)` pairs in index order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, NodeId)> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i / self.nodes, i % self.nodes))
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }
}

#[derive(Serialize, Deserialize)]
struct PlacementDoc {
    contents: usize,
    nodes: usize,
    cached: Vec<(usize, NodeId)>,
}

impl Serialize for Placement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PlacementDoc { contents: self.contents, nodes: self.nodes, cached: self.pairs().collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Placement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = PlacementDoc::deserialize(d)?;
        let mut placement = Placement::empty(doc.contents, doc.nodes);
        for (n, e) in doc.cached {
            if n >= doc.contents || e >= doc.nodes || e == SERVER {
                return Err(serde::de::Error::custom(format!("invalid cache entry ({n}, {e})")));
            }
            placement.set(n, e, true);
        }
        Ok(placement)
    }
}

/// Key of a routing variable `y[n][a][e][p]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowKey {
    pub content: usize,
    pub ar: NodeId,
    pub node: NodeId,
    pub path: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct FlowDoc {
    content: usize,
    ar: NodeId,
    node: NodeId,
    path: usize,
    count: u32,
}

/// Sparse routing assignment. In P1 every value is 0/1, in P2 it counts
/// flows. Zero entries are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Routing {
    pub mode: Mode,
    flows: BTreeMap<FlowKey, u32>,
}

impl Routing {
    pub fn new(mode: Mode) -> Self {
        Routing { mode, flows: BTreeMap::new() }
    }

    pub fn add(&mut self, key: FlowKey, count: u32) {
        if count > 0 {
            *self.flows.entry(key).or_insert(0) += count;
        }
    }

    pub fn get(&self, key: &FlowKey) -> u32 {
        self.flows.get(key).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FlowKey, u32)> + '_ {
        self.flows.iter().map(|(k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    /// Flows delivering `content` to `ar`.
    pub fn flows_for(&self, content: usize, ar: NodeId) -> impl Iterator<Item = (&FlowKey, u32)> {
        let lo = FlowKey { content, ar, node: 0, path: 0 };
        let hi = FlowKey { content, ar, node: usize::MAX, path: usize::MAX };
        self.flows.range(lo..=hi).map(|(k, &v)| (k, v))
    }

    pub fn merge(&mut self, other: &Routing) {
        for (key, count) in other.iter() {
            self.add(*key, count);
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RoutingDoc {
    mode: Mode,
    flows: Vec<FlowDoc>,
}

impl Serialize for Routing {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RoutingDoc {
            mode: self.mode,
            flows: self
                .iter()
                .map(|(k, count)| FlowDoc {
                    content: k.content,
                    ar: k.ar,
                    node: k.node,
                    path: k.path,
                    count,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Routing {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = RoutingDoc::deserialize(d)?;
        let mut routing = Routing::new(doc.mode);
        for f in doc.flows {
            routing.add(FlowKey { content: f.content, ar: f.ar, node: f.node, path: f.path }, f.count);
        }
        Ok(routing)
    }
}

/// Caching, transmission and total energy in joules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown<S> {
    pub caching: S,
    pub transmission: S,
    pub total: S,
}

impl<S: Scalar> EnergyBreakdown<S> {
    pub fn new(caching: S, transmission: S) -> Self {
        EnergyBreakdown { caching, transmission, total: caching + transmission }
    }

    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero())
    }

    pub fn to_f64(&self) -> EnergyBreakdown<f64> {
        EnergyBreakdown {
            caching: self.caching.to_joules(),
            transmission: self.transmission.to_joules(),
            total: self.total.to_joules(),
        }
    }
}

/// `sum_n sum_e alpha * s_n * x_ne * T`.
pub fn caching_energy<S: Scalar>(
    placement: &Placement,
    catalog: &[Content],
    params: &EnergyParams<S>,
) -> S {
    let bits: u64 = placement.pairs().map(|(n, _)| catalog[n].size_bits).sum();
    params.alpha * S::from_count(bits) * params.epoch
}

/// `sum beta * N_aep * s_n * y_naep`; in P2 `y` is the flow count.
///
/// Panics if a flow references a path missing from the table.
pub fn transmission_energy<S: Scalar>(
    routing: &Routing,
    catalog: &[Content],
    table: &PathTable,
    params: &EnergyParams<S>,
) -> S {
    let bit_hops: u64 = routing
        .iter()
        .map(|(key, count)| {
            let path = table
                .path(key.ar, key.node, key.path)
                .unwrap_or_else(|| panic!("routing references a missing path {key:?}"));
            path.hops() as u64 * catalog[key.content].size_bits * u64::from(count)
        })
        .sum();
    params.beta * S::from_count(bit_hops)
}

pub fn energy_breakdown<S: Scalar>(
    placement: &Placement,
    routing: &Routing,
    catalog: &[Content],
    table: &PathTable,
    params: &EnergyParams<S>,
) -> EnergyBreakdown<S> {
    EnergyBreakdown::new(
        caching_energy(placement, catalog, params),
        transmission_energy(routing, catalog, table, params),
    )
}

/// No-caching energy over algorithm energy; 1 when both are zero.
pub fn energy_gain<S: Scalar>(no_caching: S, algorithm: S) -> Result<S> {
    if algorithm.is_zero() {
        if no_caching.is_zero() {
            return Ok(S::one());
        }
        return Err(Error::UndefinedGain { reference: no_caching.to_joules() });
    }
    Ok(no_caching / algorithm)
}

/// Share of requests served from a caching node rather than the server.
///
/// Every request behind a shared (P1) flow counts individually. Requests
/// without any flow count as misses. With no requests at all the ratio is 1.
pub fn cache_hit_ratio(routing: &Routing, demand: &Demand) -> f64 {
    let total = demand.total();
    if total == 0 {
        return 1.0;
    }
    let hits: f64 = demand
        .entries()
        .map(|(n, a, requests)| {
            let (mut cached, mut all) = (0u64, 0u64);
            for (key, count) in routing.flows_for(n, a) {
                all += u64::from(count);
                if key.node != SERVER {
                    cached += u64::from(count);
                }
            }
            if all == 0 {
                0.0
            } else {
                f64::from(requests) * cached as f64 / all as f64
            }
        })
        .sum();
    (hits / total as f64).clamp(0.0, 1.0)
}
