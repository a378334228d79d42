//! Greedy simulated annealing caching (GSAC).
//!
//! Contents are handled one at a time in descending order of demand. For
//! each content a simulated-annealing chain searches over its cache set;
//! every candidate set is scored by deriving the delivery it implies
//! (nearest bandwidth-feasible copy, else the server) against the storage
//! and capacity left over by earlier contents. The best set found is then
//! committed and the residuals are updated.

use std::collections::HashMap;

use rand::Rng;

use crate::energy::{FlowKey, Mode, Placement, Routing};
use crate::error::{Error, Result};
use crate::model::{CostWeights, Solution, Status};
use crate::scenario::{rng_from_seed, Content, Instance};
use crate::topology::{Network, NodeId, Path, PathTable, SERVER};

/// Annealing schedule: start at `t0`, multiply by `gamma` after every
/// chain of `chain_length` proposals, stop once below `t_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaParams {
    pub t0: f64,
    pub t_end: f64,
    pub gamma: f64,
    pub chain_length: u32,
}

impl Default for SaParams {
    fn default() -> Self {
        SaParams { t0: 1e3, t_end: 1e-3, gamma: 0.8, chain_length: 200 }
    }
}

impl SaParams {
    pub fn new(t0: f64, t_end: f64, gamma: f64, chain_length: u32) -> Result<Self> {
        let params = SaParams { t0, t_end, gamma, chain_length };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t0 > self.t_end && self.t0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperatures must satisfy T0 > Tend > 0, got T0={} Tend={}",
                self.t0, self.t_end
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if self.chain_length == 0 {
            return Err(Error::InvalidParameter("chain length L must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of temperature levels the schedule visits.
    pub fn levels(&self) -> u32 {
        let mut t = self.t0;
        let mut levels = 0;
        while t >= self.t_end {
            levels += 1;
            t *= self.gamma;
        }
        levels
    }
}

/// How flows that fall back to the content server treat link capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ServerPolicy {
    /// Charge server flows against residual capacity, try every server
    /// path, and overcommit the first one (flagged) only when none fits.
    #[default]
    Strict,
    /// Send every server flow over the first server path without a
    /// capacity check; violations are still counted.
    Unchecked,
}

/// Storage and capacity not yet committed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualState {
    pub storage: Vec<i64>,
    pub capacity: Vec<i64>,
}

impl ResidualState {
    pub fn new(network: &Network) -> Self {
        ResidualState {
            storage: network.nodes().iter().map(|n| n.storage_bits as i64).collect(),
            capacity: network.links().iter().map(|l| l.capacity_bps as i64).collect(),
        }
    }

    pub fn can_store(&self, node: NodeId, size_bits: u64) -> bool {
        node != SERVER && self.storage[node] >= size_bits as i64
    }

    pub fn store(&mut self, node: NodeId, size_bits: u64) {
        self.storage[node] -= size_bits as i64;
    }

    pub fn fits(&self, path: &Path, bandwidth: u64) -> bool {
        path.links.iter().all(|&l| self.capacity[l] >= bandwidth as i64)
    }

    /// Flows of `bandwidth` the path can still carry (`u32::MAX` for a
    /// zero-hop path).
    pub fn max_flows(&self, path: &Path, bandwidth: u64) -> u32 {
        path.links
            .iter()
            .map(|&l| (self.capacity[l].max(0) / bandwidth as i64).min(u32::MAX as i64) as u32)
            .min()
            .unwrap_or(u32::MAX)
    }

    pub fn charge(&mut self, path: &Path, bandwidth: u64, flows: u32) {
        for &l in &path.links {
            self.capacity[l] -= bandwidth as i64 * i64::from(flows);
        }
    }

    pub fn overcommitted_links(&self) -> usize {
        self.capacity.iter().filter(|&&c| c < 0).count()
    }
}

/// Delivery candidates of every AR, nearest first: ascending hops, then
/// node id, then path index.
#[derive(Debug, Clone)]
pub struct DeliveryOrder {
    by_ar: Vec<Vec<(usize, NodeId, usize)>>,
}

impl DeliveryOrder {
    pub fn new(table: &PathTable) -> Self {
        let by_ar = table
            .ars()
            .iter()
            .map(|&a| {
                let mut options: Vec<(usize, NodeId, usize)> = (0..table.node_count())
                    .flat_map(|e| table.paths(a, e).iter().enumerate().map(move |(p, path)| (path.hops(), e, p)))
                    .collect();
                options.sort_unstable();
                options
            })
            .collect();
        DeliveryOrder { by_ar }
    }

    /// `(hops, node, path)` candidates for AR `a`.
    pub fn candidates(&self, table: &PathTable, a: NodeId) -> &[(usize, NodeId, usize)] {
        let slot = table.ar_index(a).expect("delivery order requested for a non-AR node");
        &self.by_ar[slot]
    }
}

/// Flows derived for one content, plus how many of them overcommit links.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DerivedRouting {
    pub flows: Vec<(FlowKey, u32)>,
    pub overloaded: u32,
}

impl DerivedRouting {
    pub fn transmission_units(&self, weights: &CostWeights, size_bits: u64, table: &PathTable) -> i128 {
        self.flows
            .iter()
            .map(|(k, c)| {
                let hops = table.paths(k.ar, k.node)[k.path].hops();
                i128::from(*c) * weights.transmission(size_bits, hops)
            })
            .sum()
    }
}

/// Route `flows` requests of a content from AR `a` to the server.
#[allow(clippy::too_many_arguments)]
pub fn route_to_server(
    table: &PathTable,
    content: usize,
    item: Content,
    a: NodeId,
    flows: u32,
    residual: &mut ResidualState,
    policy: ServerPolicy,
    out: &mut DerivedRouting,
) {
    let paths = table.paths(a, SERVER);
    let mut remaining = flows;
    if policy == ServerPolicy::Strict {
        for (p, path) in paths.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            let take = residual.max_flows(path, item.bandwidth_bps).min(remaining);
            if take > 0 {
                residual.charge(path, item.bandwidth_bps, take);
                out.flows.push((FlowKey { content, ar: a, node: SERVER, path: p }, take));
                remaining -= take;
            }
        }
    }
    if remaining > 0 {
        let path = &paths[0];
        let short = remaining.saturating_sub(residual.max_flows(path, item.bandwidth_bps));
        residual.charge(path, item.bandwidth_bps, remaining);
        out.flows.push((FlowKey { content, ar: a, node: SERVER, path: 0 }, remaining));
        out.overloaded += short;
    }
}

/// Serve `flows` requests of a content at AR `a` from the cached copies
/// marked in `cached`, nearest first, filling each path up to its residual
/// bandwidth; whatever does not fit goes to the server.
#[allow(clippy::too_many_arguments)]
pub fn route_ar(
    table: &PathTable,
    order: &DeliveryOrder,
    cached: &[bool],
    content: usize,
    item: Content,
    a: NodeId,
    flows: u32,
    residual: &mut ResidualState,
    policy: ServerPolicy,
    out: &mut DerivedRouting,
) {
    let mut remaining = flows;
    for &(_, e, p) in order.candidates(table, a) {
        if remaining == 0 {
            break;
        }
        if e == SERVER || !cached[e] {
            continue;
        }
        let path = &table.paths(a, e)[p];
        let take = residual.max_flows(path, item.bandwidth_bps).min(remaining);
        if take > 0 {
            residual.charge(path, item.bandwidth_bps, take);
            out.flows.push((FlowKey { content, ar: a, node: e, path: p }, take));
            remaining -= take;
        }
    }
    if remaining > 0 {
        route_to_server(table, content, item, a, remaining, residual, policy, out);
    }
}

#[allow(clippy::too_many_arguments)]
fn derive(
    mode: Mode,
    cached: &[bool],
    content: usize,
    item: Content,
    demand_row: &[u32],
    residual: &ResidualState,
    table: &PathTable,
    order: &DeliveryOrder,
    policy: ServerPolicy,
) -> (DerivedRouting, ResidualState) {
    let mut local = residual.clone();
    let mut out = DerivedRouting::default();
    for &a in table.ars() {
        let lambda = demand_row[a];
        if lambda > 0 {
            route_ar(table, order, cached, content, item, a, mode.flows_for(lambda), &mut local, policy, &mut out);
        }
    }
    (out, local)
}

/// Multicast delivery for one content given its cache set: each AR with
/// demand gets one flow from the nearest copy reachable over a path with
/// enough residual bandwidth, else from the server.
pub fn derive_routing_p1(
    cached: &[bool],
    content: usize,
    item: Content,
    demand_row: &[u32],
    residual: &ResidualState,
    table: &PathTable,
    policy: ServerPolicy,
) -> DerivedRouting {
    let order = DeliveryOrder::new(table);
    derive(Mode::P1, cached, content, item, demand_row, residual, table, &order, policy).0
}

/// Unicast delivery for one content: each AR fills paths to cached copies
/// nearest first, as many flows as the path's tightest link allows, and
/// sends the remainder to the server.
pub fn derive_routing_p2(
    cached: &[bool],
    content: usize,
    item: Content,
    demand_row: &[u32],
    residual: &ResidualState,
    table: &PathTable,
    policy: ServerPolicy,
) -> DerivedRouting {
    let order = DeliveryOrder::new(table);
    derive(Mode::P2, cached, content, item, demand_row, residual, table, &order, policy).0
}

/// Metropolis rule: improvements always pass, a worsening of `delta`
/// passes with probability `exp(-delta / temperature)`.
pub fn accept<R: Rng + ?Sized>(delta: f64, temperature: f64, rng: &mut R) -> bool {
    if delta < 0.0 {
        return true;
    }
    rng.gen::<f64>() < (-delta / temperature).exp()
}

/// GSAC with strict server accounting.
pub fn gsac_solve(instance: &Instance, mode: Mode, params: &SaParams, seed: u64) -> Result<Solution> {
    gsac_solve_with(instance, mode, params, seed, ServerPolicy::Strict)
}

pub fn gsac_solve_with(
    instance: &Instance,
    mode: Mode,
    params: &SaParams,
    seed: u64,
    policy: ServerPolicy,
) -> Result<Solution> {
    params.validate()?;
    let weights = CostWeights::from_instance(instance)?;
    let net = &instance.network;
    let table = &instance.paths;
    let order = DeliveryOrder::new(table);
    let demand = &instance.predicted;
    let mut rng = rng_from_seed(seed);
    let mut residual = ResidualState::new(net);
    let mut placement = Placement::empty(instance.catalog.len(), net.node_count());
    let mut routing = Routing::new(mode);
    let mut overloaded = 0;
    let mut proposals = 0u64;

    for n in demand.contents_by_demand() {
        let item = instance.catalog[n];
        let row = demand.row(n);
        let allowed: Vec<NodeId> = net.caching_nodes().filter(|&e| residual.can_store(e, item.size_bits)).collect();
        let cache_units = weights.caching(item.size_bits);
        let mut memo: HashMap<Vec<bool>, i128> = HashMap::new();
        let mut evaluate = |x: &[bool]| -> i128 {
            if let Some(&units) = memo.get(x) {
                return units;
            }
            let (derived, _) = derive(mode, x, n, item, row, &residual, table, &order, policy);
            let copies = x.iter().filter(|&&b| b).count() as i128;
            let units = copies * cache_units + derived.transmission_units(&weights, item.size_bits, table);
            memo.insert(x.to_vec(), units);
            units
        };

        let mut x = vec![false; net.node_count()];
        for &e in &allowed {
            x[e] = rng.gen_bool(0.5);
        }
        let mut cost = evaluate(&x);
        let mut best = (x.clone(), cost);
        if !allowed.is_empty() {
            let mut temperature = params.t0;
            while temperature >= params.t_end {
                for _ in 0..params.chain_length {
                    proposals += 1;
                    let e = allowed[rng.gen_range(0..allowed.len())];
                    x[e] = !x[e];
                    let candidate = evaluate(&x);
                    let delta = weights.to_joules_f64(candidate - cost);
                    if accept(delta, temperature, &mut rng) {
                        cost = candidate;
                        if cost < best.1 {
                            best = (x.clone(), cost);
                        }
                    } else {
                        x[e] = !x[e];
                    }
                }
                temperature *= params.gamma;
            }
        }

        let (best_x, _) = best;
        let (derived, after) = derive(mode, &best_x, n, item, row, &residual, table, &order, policy);
        residual.capacity = after.capacity;
        for e in net.caching_nodes().filter(|&e| best_x[e]) {
            residual.store(e, item.size_bits);
            placement.set(n, e, true);
        }
        for (key, count) in derived.flows {
            routing.add(key, count);
        }
        overloaded += derived.overloaded;
    }

    let mut solution = Solution::new(instance, placement, routing, Status::FeasibleWithGap);
    solution.overloaded_flows = overloaded;
    solution.work = proposals;
    Ok(solution)
}
