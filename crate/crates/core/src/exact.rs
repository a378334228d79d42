//! Certified-optimal search for P1/P2 and an exhaustive oracle.
//!
//! [`solve_exact`] is a depth-first branch and bound. Contents are decided
//! most-requested first: first the set of nodes caching the content, then
//! one delivery option per flow. Bounds come from a Lagrangian relaxation
//! of the storage and link-capacity rows: with fixed multipliers the
//! problem splits per content, and each per-content problem (choose a
//! cache set, route every AR to its cheapest open source) is solved exactly
//! by enumerating cache sets.

use std::time::{Duration, Instant};

use num_traits::Zero;

use crate::energy::{energy_breakdown, FlowKey, Mode, Placement, Routing};
use crate::error::{Error, Result};
use crate::baselines::greedy_caching;
use crate::model::{verify, CostWeights, IlpModel, Solution, Status};
use crate::scalar::Rational;
use crate::scenario::Instance;
use crate::topology::{LinkId, NodeId, SERVER};

/// Upper bound on caching nodes the exact search enumerates cache sets over.
pub const MAX_EXACT_CACHING_NODES: usize = 16;

/// Upper bound on placement candidates the brute-force oracle enumerates.
pub const BRUTEFORCE_PLACEMENT_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveLimits {
    pub time: Option<Duration>,
    /// Maximum search nodes; unlike the time limit this is deterministic.
    pub nodes: Option<u64>,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits { time: Some(Duration::from_secs(60)), nodes: None }
    }
}

impl SolveLimits {
    pub fn unlimited() -> Self {
        SolveLimits { time: None, nodes: None }
    }
}

#[derive(Debug, Clone)]
struct RouteOption {
    node: NodeId,
    path: usize,
    links: Vec<LinkId>,
    actual: i128,
    adjusted: f64,
}

#[derive(Debug, Clone)]
struct ArDemand {
    ar: NodeId,
    flows: u32,
    /// Sorted by adjusted cost, then actual cost, node and path.
    options: Vec<RouteOption>,
}

#[derive(Debug, Clone)]
struct ContentPlan {
    content: usize,
    size: u64,
    bandwidth: u64,
    cache_actual: i128,
    ars: Vec<ArDemand>,
    /// Caching nodes (bit `c` is node `c + 1`) whose full budget fits the content.
    storable: u32,
    /// `(value, mask)` sorted ascending; only storable masks.
    subsets: Vec<(f64, u32)>,
    min_value: f64,
}

/// Multipliers: cost units per bit of storage and per bit/s of capacity.
#[derive(Debug, Clone)]
struct Multipliers {
    storage: Vec<f64>,
    capacity: Vec<f64>,
}

fn plans_for(instance: &Instance, mode: Mode, weights: &CostWeights) -> Vec<ContentPlan> {
    let net = &instance.network;
    let table = &instance.paths;
    let demand = &instance.predicted;
    demand
        .contents_by_demand()
        .into_iter()
        .map(|n| {
            let content = instance.catalog[n];
            let ars = table
                .ars()
                .iter()
                .filter_map(|&a| {
                    let lambda = demand.get(n, a);
                    (lambda > 0).then(|| {
                        let mut options = Vec::new();
                        for e in 0..net.node_count() {
                            for (p, path) in table.paths(a, e).iter().enumerate() {
                                options.push(RouteOption {
                                    node: e,
                                    path: p,
                                    links: path.links.clone(),
                                    actual: weights.transmission(content.size_bits, path.hops()),
                                    adjusted: 0.0,
                                });
                            }
                        }
                        ArDemand { ar: a, flows: mode.flows_for(lambda), options }
                    })
                })
                .collect();
            let storable = net
                .caching_nodes()
                .filter(|&e| net.storage(e) >= content.size_bits)
                .fold(0u32, |m, e| m | 1 << (e - 1));
            ContentPlan {
                content: n,
                size: content.size_bits,
                bandwidth: content.bandwidth_bps,
                cache_actual: weights.caching(content.size_bits),
                ars,
                storable,
                subsets: Vec::new(),
                min_value: 0.0,
            }
        })
        .collect()
}

/// Per-content Lagrangian subproblem over every storable cache set.
struct Subproblem {
    /// Value per mask, `INFINITY` for masks that are not storable.
    values: Vec<f64>,
    best_mask: u32,
    best_value: f64,
}

fn reprice(plan: &mut ContentPlan, mult: &Multipliers) {
    let bw = plan.bandwidth as f64;
    for ar in &mut plan.ars {
        for o in &mut ar.options {
            o.adjusted = o.actual as f64 + bw * o.links.iter().map(|&l| mult.capacity[l]).sum::<f64>();
        }
        ar.options.sort_by(|x, y| {
            x.adjusted
                .total_cmp(&y.adjusted)
                .then(x.actual.cmp(&y.actual))
                .then(x.node.cmp(&y.node))
                .then(x.path.cmp(&y.path))
        });
    }
}

fn solve_subproblem(plan: &ContentPlan, caching: usize, mult: &Multipliers, buffer: &mut Vec<f64>) -> Subproblem {
    let size = 1usize << caching;
    let mut values = vec![f64::INFINITY; size];
    // cache cost per mask
    let mut cache_sum = vec![0.0f64; size];
    for mask in 1..size {
        let low = mask.trailing_zeros() as usize;
        cache_sum[mask] = cache_sum[mask & (mask - 1)]
            + plan.cache_actual as f64
            + mult.storage[low + 1] * plan.size as f64;
    }
    for (mask, v) in values.iter_mut().enumerate() {
        if mask as u32 & !plan.storable == 0 {
            *v = cache_sum[mask];
        }
    }
    buffer.resize(size, 0.0);
    let mut node_min = vec![f64::INFINITY; caching + 1];
    for ar in &plan.ars {
        node_min.iter_mut().for_each(|v| *v = f64::INFINITY);
        for o in &ar.options {
            if o.adjusted < node_min[o.node] {
                node_min[o.node] = o.adjusted;
            }
        }
        buffer[0] = node_min[SERVER];
        for mask in 1..size {
            let low = mask.trailing_zeros() as usize;
            buffer[mask] = buffer[mask & (mask - 1)].min(node_min[low + 1]);
        }
        let flows = f64::from(ar.flows);
        for (v, b) in values.iter_mut().zip(buffer.iter()) {
            *v += flows * b;
        }
    }
    let (best_mask, best_value) = values
        .iter()
        .enumerate()
        .fold((0u32, f64::INFINITY), |acc, (m, &v)| if v < acc.1 { (m as u32, v) } else { acc });
    Subproblem { values, best_mask, best_value }
}

/// Maximise the Lagrangian dual by projected subgradient steps.
fn optimise_multipliers(
    plans: &mut [ContentPlan],
    instance: &Instance,
    caching: usize,
    target_hint: Option<f64>,
) -> (Multipliers, f64) {
    let net = &instance.network;
    let mut mult = Multipliers { storage: vec![0.0; net.node_count()], capacity: vec![0.0; net.link_count()] };
    let mut best = mult.clone();
    let mut best_value = f64::NEG_INFINITY;
    let mut theta = 2.0;
    let mut stall = 0;
    let mut buffer = Vec::new();
    for _ in 0..400 {
        let mut value = 0.0;
        let mut storage_use = vec![0.0f64; net.node_count()];
        let mut link_use = vec![0.0f64; net.link_count()];
        for plan in plans.iter_mut() {
            reprice(plan, &mult);
            let sub = solve_subproblem(plan, caching, &mult, &mut buffer);
            value += sub.best_value;
            for c in 0..caching {
                if sub.best_mask & (1 << c) != 0 {
                    storage_use[c + 1] += plan.size as f64;
                }
            }
            for ar in &plan.ars {
                let chosen = ar
                    .options
                    .iter()
                    .find(|o| o.node == SERVER || sub.best_mask & (1 << (o.node - 1)) != 0)
                    .expect("server options always exist");
                for &l in &chosen.links {
                    link_use[l] += f64::from(ar.flows) * plan.bandwidth as f64;
                }
            }
        }
        for e in net.caching_nodes() {
            value -= mult.storage[e] * net.storage(e) as f64;
        }
        for (l, link) in net.links().iter().enumerate() {
            value -= mult.capacity[l] * link.capacity_bps as f64;
        }
        if value > best_value + 1e-12 * value.abs() {
            best_value = value;
            best = mult.clone();
            stall = 0;
        } else {
            stall += 1;
            if stall >= 8 {
                theta /= 2.0;
                stall = 0;
            }
        }
        if theta < 1e-4 {
            break;
        }
        let mut grad_storage = vec![0.0; net.node_count()];
        for e in net.caching_nodes() {
            let g = storage_use[e] - net.storage(e) as f64;
            grad_storage[e] = if mult.storage[e] <= 0.0 && g < 0.0 { 0.0 } else { g };
        }
        let grad_link: Vec<f64> = net
            .links()
            .iter()
            .enumerate()
            .map(|(l, link)| {
                let g = link_use[l] - link.capacity_bps as f64;
                if mult.capacity[l] <= 0.0 && g < 0.0 {
                    0.0
                } else {
                    g
                }
            })
            .collect();
        let norm2: f64 = grad_storage.iter().chain(&grad_link).map(|g| g * g).sum();
        if norm2 == 0.0 {
            break;
        }
        let target = match target_hint {
            Some(t) if t > best_value => t,
            _ => best_value + 0.05 * best_value.abs().max(1.0),
        };
        let step = theta * (target - value).max(1e-9 * value.abs().max(1.0)) / norm2;
        for e in net.caching_nodes() {
            mult.storage[e] = (mult.storage[e] + step * grad_storage[e]).max(0.0);
        }
        for (l, g) in grad_link.iter().enumerate() {
            mult.capacity[l] = (mult.capacity[l] + step * g).max(0.0);
        }
    }
    (best, best_value)
}

/// Decision taken for one flow: AR slot and option index within it.
#[derive(Debug, Clone, Copy)]
struct FlowChoice {
    ar_slot: usize,
    option: usize,
}

#[derive(Debug, Clone)]
struct Incumbent {
    cost: i128,
    masks: Vec<u32>,
    flows: Vec<Vec<FlowChoice>>,
}

struct Search<'a> {
    plans: &'a [ContentPlan],
    mult: Multipliers,
    /// `suffix[i]` = sum of per-content minima for contents `i..`.
    suffix: Vec<f64>,
    storage: Vec<i128>,
    capacity: Vec<i128>,
    /// Committed actual cost minus multiplier-weighted residual resources.
    base: f64,
    committed: i128,
    masks: Vec<u32>,
    flows: Vec<Vec<FlowChoice>>,
    /// Flows per content level and serving node.
    node_use: Vec<Vec<u32>>,
    /// `frontier[i][j]`: index of the cheapest cache set of content `j`
    /// that still fits once contents before `i` are placed.
    frontier: Vec<Vec<usize>>,
    /// `later[i]`: bound on all contents after `i` given storage after `i`.
    later: Vec<f64>,
    /// Per content level: lower bound of routing the ARs after slot `j`.
    rest: Vec<Vec<f64>>,
    /// Per content level: per-AR cheapest adjusted option given the mask.
    ar_min: Vec<Vec<f64>>,
    incumbent: Option<Incumbent>,
    /// Cost of the best known solution, found here or supplied up front.
    incumbent_cost: i128,
    tolerance: f64,
    nodes: u64,
    limits: SolveLimits,
    started: Instant,
    aborted: bool,
    open_bound: f64,
}

impl<'a> Search<'a> {
    fn prunes(&self, bound: f64) -> bool {
        // Costs are integers: a strictly better leaf needs cost <= incumbent - 1.
        self.incumbent_cost < i128::MAX && bound > (self.incumbent_cost - 1) as f64 + self.tolerance
    }

    fn out_of_budget(&mut self) -> bool {
        if self.aborted {
            return true;
        }
        self.nodes += 1;
        if let Some(max) = self.limits.nodes {
            if self.nodes > max {
                self.aborted = true;
            }
        }
        if self.nodes.is_multiple_of(512) {
            if let Some(limit) = self.limits.time {
                if self.started.elapsed() > limit {
                    self.aborted = true;
                }
            }
        }
        self.aborted
    }

    fn record_open(&mut self, bound: f64) {
        if bound < self.open_bound {
            self.open_bound = bound;
        }
    }

    fn mask_allowed(&self, plan: &ContentPlan, mask: u32) -> bool {
        let mut bits = mask;
        while bits != 0 {
            let c = bits.trailing_zeros() as usize;
            if self.storage[c + 1] < plan.size as i128 {
                return false;
            }
            bits &= bits - 1;
        }
        true
    }

    fn visit_content(&mut self, i: usize, bound: f64) {
        if self.out_of_budget() {
            self.record_open(bound);
            return;
        }
        if i == self.plans.len() {
            if self.committed < self.incumbent_cost {
                self.incumbent_cost = self.committed;
                self.incumbent = Some(Incumbent {
                    cost: self.committed,
                    masks: self.masks.clone(),
                    flows: self.flows.clone(),
                });
            }
            return;
        }
        let plans = self.plans;
        let plan = &plans[i];
        let rest_after = self.suffix[i + 1];
        for s in self.frontier[i][i]..plan.subsets.len() {
            let (value, mask) = plan.subsets[s];
            if !self.mask_allowed(plan, mask) {
                continue;
            }
            let child_bound = self.base + value + rest_after;
            if self.prunes(child_bound) {
                break;
            }
            if self.aborted {
                self.record_open(child_bound);
                return;
            }
            self.place(i, mask, true);
            self.advance_frontier(i);
            self.prepare_routing(i, mask);
            let route_bound = self.base + self.rest[i][0];
            if !self.prunes(route_bound) {
                self.visit_route(i, 0, 0, 0, route_bound);
            }
            self.place(i, mask, false);
        }
    }

    /// After placing content `i`, move every later content's frontier past
    /// cache sets that no longer fit and refresh `later[i]`.
    fn advance_frontier(&mut self, i: usize) {
        let plans = self.plans;
        let mut total = 0.0;
        for j in i + 1..plans.len() {
            let mut idx = self.frontier[i][j];
            while !self.mask_allowed(&plans[j], plans[j].subsets[idx].1) {
                idx += 1;
            }
            self.frontier[i + 1][j] = idx;
            total += plans[j].subsets[idx].0;
        }
        self.later[i] = total;
    }

    fn place(&mut self, i: usize, mask: u32, apply: bool) {
        let plan = &self.plans[i];
        let sign: i128 = if apply { 1 } else { -1 };
        let mut bits = mask;
        while bits != 0 {
            let c = bits.trailing_zeros() as usize;
            let e = c + 1;
            self.storage[e] -= sign * plan.size as i128;
            self.committed += sign * plan.cache_actual;
            self.base += sign as f64 * (plan.cache_actual as f64 + self.mult.storage[e] * plan.size as f64);
            bits &= bits - 1;
        }
        self.masks[i] = if apply { mask } else { 0 };
    }

    /// Fill `ar_min[i]` and `rest[i]` for a chosen mask: `rest[i][j]` bounds
    /// the cost of routing AR slots `j..` plus all later contents.
    fn prepare_routing(&mut self, i: usize, mask: u32) {
        let plan = &self.plans[i];
        let count = plan.ars.len();
        let mut rest = vec![0.0; count + 1];
        let mut mins = vec![0.0; count];
        rest[count] = self.later[i];
        for j in (0..count).rev() {
            let ar = &plan.ars[j];
            let min = ar
                .options
                .iter()
                .find(|o| open(mask, o.node))
                .map(|o| o.adjusted)
                .unwrap_or(f64::INFINITY);
            mins[j] = min;
            rest[j] = rest[j + 1] + f64::from(ar.flows) * min;
        }
        self.rest[i] = rest;
        self.ar_min[i] = mins;
    }

    fn fits(&self, option: &RouteOption, bandwidth: i128) -> bool {
        option.links.iter().all(|&l| self.capacity[l] >= bandwidth)
    }

    fn route(&mut self, i: usize, j: usize, o: usize, apply: bool) {
        let plan = &self.plans[i];
        let option = &plan.ars[j].options[o];
        let sign: i128 = if apply { 1 } else { -1 };
        let bw = plan.bandwidth as i128;
        for &l in &option.links {
            self.capacity[l] -= sign * bw;
        }
        self.committed += sign * option.actual;
        self.base += sign as f64 * option.adjusted;
        if apply {
            self.node_use[i][option.node] += 1;
        } else {
            self.node_use[i][option.node] -= 1;
        }
        if apply {
            self.flows[i].push(FlowChoice { ar_slot: j, option: o });
        } else {
            self.flows[i].pop();
        }
    }

    /// Route flow `k` of AR slot `j` of content `i`, using option indices
    /// `>= first` so flow multisets are enumerated once.
    fn visit_route(&mut self, i: usize, j: usize, k: u32, first: usize, bound: f64) {
        if self.out_of_budget() {
            self.record_open(bound);
            return;
        }
        let plan = &self.plans[i];
        let mask = self.masks[i];
        if j == plan.ars.len() {
            // A cache copy serving nobody is dominated by the same solution without it.
            let mut bits = mask;
            while bits != 0 {
                let c = bits.trailing_zeros() as usize;
                if self.node_use[i][c + 1] == 0 {
                    return;
                }
                bits &= bits - 1;
            }
            let next_bound = self.base + self.later[i];
            self.visit_content(i + 1, next_bound);
            return;
        }
        let ar = &plan.ars[j];
        let remaining_here = f64::from(ar.flows - k - 1);
        let rest_after = self.rest[i][j + 1];
        let bw = plan.bandwidth as i128;
        for o in first..ar.options.len() {
            let option = &ar.options[o];
            if !open(mask, option.node) || !self.fits(option, bw) {
                continue;
            }
            let child_bound = self.base + option.adjusted * (1.0 + remaining_here) + rest_after;
            if self.prunes(child_bound) {
                break;
            }
            if self.aborted {
                self.record_open(child_bound);
                return;
            }
            self.route(i, j, o, true);
            if k + 1 < ar.flows {
                self.visit_route(i, j, k + 1, o, child_bound);
            } else {
                let next = self.base + rest_after;
                self.visit_route(i, j + 1, 0, 0, next);
            }
            self.route(i, j, o, false);
        }
    }
}

fn open(mask: u32, node: NodeId) -> bool {
    node == SERVER || mask & (1 << (node - 1)) != 0
}

/// Branch-and-bound optimum of a P1/P2 model.
///
/// Completes with `Optimal` (certified minimum) or `Infeasible`; when a
/// limit is hit first, returns the incumbent as `FeasibleWithGap` with a
/// valid lower bound, or `Unknown` if nothing feasible was found.
///
/// The greedy baseline's solution, when it satisfies every constraint,
/// serves as the initial incumbent.
pub fn solve_exact(model: &IlpModel, limits: &SolveLimits) -> Result<Solution> {
    let start = greedy_caching(&model.instance, model.mode);
    solve_exact_with_hints(model, limits, &[start])
}

/// As [`solve_exact`], starting from the cheapest of `hints` that is
/// feasible for the model; infeasible or mismatched hints are ignored.
pub fn solve_exact_with_hints(model: &IlpModel, limits: &SolveLimits, hints: &[Solution]) -> Result<Solution> {
    let instance = &model.instance;
    let net = &instance.network;
    let caching = net.node_count() - 1;
    if caching > MAX_EXACT_CACHING_NODES {
        return Err(Error::TooLarge(format!(
            "exact search supports at most {MAX_EXACT_CACHING_NODES} caching nodes, found {caching}"
        )));
    }
    if model.weights != CostWeights::from_instance(instance)? {
        return Err(Error::MalformedModel("model weights do not match its instance".into()));
    }
    let started = Instant::now();
    let mode = model.mode;
    let mut hint: Option<(i128, &Solution)> = None;
    for candidate in hints {
        if candidate.mode != mode || !candidate.status.has_solution() || candidate.overloaded_flows > 0 {
            continue;
        }
        if !verify(candidate, instance, mode)?.all_passed() {
            continue;
        }
        let (values, _) = model.values_of(&candidate.placement, &candidate.routing);
        let units = model.objective_units(&values);
        if hint.is_none_or(|(best, _)| units < best) {
            hint = Some((units, candidate));
        }
    }
    let mut plans = plans_for(instance, mode, &model.weights);

    let (mult, root_bound) = if plans.is_empty() {
        (
            Multipliers { storage: vec![0.0; net.node_count()], capacity: vec![0.0; net.link_count()] },
            0.0,
        )
    } else {
        optimise_multipliers(&mut plans, instance, caching, hint.map(|(u, _)| u as f64))
    };
    let mut buffer = Vec::new();
    for plan in plans.iter_mut() {
        reprice(plan, &mult);
        let sub = solve_subproblem(plan, caching, &mult, &mut buffer);
        let mut subsets: Vec<(f64, u32)> = sub
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(m, &v)| (v, m as u32))
            .collect();
        subsets.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        plan.min_value = sub.best_value;
        plan.subsets = subsets;
    }
    let mut suffix = vec![0.0; plans.len() + 1];
    for i in (0..plans.len()).rev() {
        suffix[i] = suffix[i + 1] + plans[i].min_value;
    }
    let storage: Vec<i128> = (0..net.node_count()).map(|e| net.storage(e) as i128).collect();
    let capacity: Vec<i128> = net.links().iter().map(|l| l.capacity_bps as i128).collect();
    let base = -(net.caching_nodes().map(|e| mult.storage[e] * net.storage(e) as f64).sum::<f64>())
        - net
            .links()
            .iter()
            .enumerate()
            .map(|(l, link)| mult.capacity[l] * link.capacity_bps as f64)
            .sum::<f64>();
    let magnitude: f64 = plans
        .iter()
        .map(|p| {
            p.cache_actual as f64 * caching as f64
                + p.ars.iter().map(|a| f64::from(a.flows) * a.options.iter().map(|o| o.actual).max().unwrap_or(0) as f64).sum::<f64>()
        })
        .sum::<f64>()
        + base.abs();
    let count = plans.len();
    let mut search = Search {
        plans: &plans,
        mult,
        suffix,
        storage,
        capacity,
        base,
        committed: 0,
        masks: vec![0; count],
        flows: vec![Vec::new(); count],
        node_use: vec![vec![0; net.node_count()]; count],
        frontier: vec![vec![0; count]; count + 1],
        later: vec![0.0; count],
        rest: vec![Vec::new(); count],
        ar_min: vec![Vec::new(); count],
        incumbent: None,
        incumbent_cost: hint.map_or(i128::MAX, |(u, _)| u),
        tolerance: 1e-9 * magnitude + 1e-6,
        nodes: 0,
        limits: *limits,
        started,
        aborted: false,
        open_bound: f64::INFINITY,
    };
    let root = search.base + search.suffix[0];
    search.visit_content(0, root);

    let work = search.nodes;
    let aborted = search.aborted;
    let open_bound = search.open_bound;
    let status = if aborted { Status::FeasibleWithGap } else { Status::Optimal };
    let Some(best) = search.incumbent else {
        if let Some((units, start)) = hint {
            let solution = Solution::new(instance, start.placement.clone(), start.routing.clone(), status);
            return Ok(finish(solution, model, units, work, aborted, open_bound, root_bound));
        }
        let status = if aborted { Status::Unknown } else { Status::Infeasible };
        let mut solution = Solution::without_assignment(instance, mode, status);
        solution.work = work;
        if aborted && root_bound.is_finite() {
            solution.lower_bound = Some(units_to_joules(&model.weights, open_bound.min(f64::MAX).max(root_bound)));
        }
        return Ok(solution);
    };

    let mut placement = Placement::empty(instance.catalog.len(), net.node_count());
    let mut routing = Routing::new(mode);
    for (i, plan) in plans.iter().enumerate() {
        for c in 0..caching {
            if best.masks[i] & (1 << c) != 0 {
                placement.set(plan.content, c + 1, true);
            }
        }
        for choice in &best.flows[i] {
            let ar = &plan.ars[choice.ar_slot];
            let option = &ar.options[choice.option];
            routing.add(
                FlowKey { content: plan.content, ar: ar.ar, node: option.node, path: option.path },
                1,
            );
        }
    }
    let solution = Solution::new(instance, placement, routing, status);
    debug_assert_eq!(model.weights.to_joules(best.cost), solution.energy.total);
    Ok(finish(solution, model, best.cost, work, aborted, open_bound, root_bound))
}

/// Attach the work count, and for an interrupted search the lower bound
/// and relative gap.
fn finish(
    mut solution: Solution,
    model: &IlpModel,
    cost: i128,
    work: u64,
    aborted: bool,
    open_bound: f64,
    root_bound: f64,
) -> Solution {
    solution.work = work;
    if aborted {
        let cost = cost as f64;
        let lower = units_to_joules(&model.weights, open_bound.min(cost).max(root_bound.min(cost)));
        let total = solution.energy.total;
        solution.gap = Some(if total.is_zero() {
            0.0
        } else {
            let diff = total - lower;
            (*diff.numer() as f64 / *diff.denom() as f64) / (*total.numer() as f64 / *total.denom() as f64)
        });
        solution.lower_bound = Some(lower);
    }
    solution
}

fn units_to_joules(weights: &CostWeights, units: f64) -> Rational {
    let floor = if units.is_finite() { units.floor() as i128 } else { 0 };
    weights.to_joules(floor.max(0))
}

/// Exhaustive optimum: every placement, and for each placement every
/// capacity-feasible routing. Ties keep the first assignment found, with
/// placements enumerated in increasing bitmask order.
pub fn solve_bruteforce(model: &IlpModel) -> Result<Solution> {
    let instance = &model.instance;
    let net = &instance.network;
    let table = &instance.paths;
    let mode = model.mode;
    let contents = instance.catalog.len();
    let caching = net.node_count() - 1;
    let bits = contents * caching;
    if bits as u32 >= 64 || (1u64 << bits) > BRUTEFORCE_PLACEMENT_LIMIT {
        return Err(Error::TooLarge(format!(
            "brute force over 2^{bits} placements exceeds the 2^20 guard"
        )));
    }
    let params = &instance.params;
    let cache_cost: Vec<Rational> = instance
        .catalog
        .iter()
        .map(|c| params.alpha * Rational::from_integer(c.size_bits as i128) * params.epoch)
        .collect();

    // (content, ar, flows) pairs with demand, in index order
    let pairs: Vec<(usize, NodeId, u32)> = instance
        .predicted
        .entries()
        .map(|(n, a, lambda)| (n, a, mode.flows_for(lambda)))
        .collect();

    struct Enumerator<'a> {
        instance: &'a Instance,
        pairs: &'a [(usize, NodeId, u32)],
        placement: u64,
        caching: usize,
        capacity: Vec<i128>,
        chosen: Vec<(usize, NodeId, NodeId, usize)>,
        cost: Rational,
        best: Option<(Rational, u64, Vec<(usize, NodeId, NodeId, usize)>)>,
    }

    impl Enumerator<'_> {
        fn options(&self, n: usize, a: NodeId) -> Vec<(NodeId, usize)> {
            let table = &self.instance.paths;
            (0..self.instance.network.node_count())
                .filter(|&e| e == SERVER || self.placement >> (n * self.caching + e - 1) & 1 == 1)
                .flat_map(|e| (0..table.paths(a, e).len()).map(move |p| (e, p)))
                .collect()
        }

        fn run(&mut self, pair: usize, flow: u32, first: usize) {
            if let Some((best, _, _)) = &self.best {
                if self.cost >= *best {
                    return;
                }
            }
            if pair == self.pairs.len() {
                self.best = Some((self.cost, self.placement, self.chosen.clone()));
                return;
            }
            let (n, a, flows) = self.pairs[pair];
            let content = self.instance.catalog[n];
            let bw = content.bandwidth_bps as i128;
            let options = self.options(n, a);
            for (idx, &(e, p)) in options.iter().enumerate().skip(first) {
                let path = &self.instance.paths.paths(a, e)[p];
                if path.links.iter().any(|&l| self.capacity[l] < bw) {
                    continue;
                }
                let hop_cost = self.instance.params.beta
                    * Rational::from_integer(path.hops() as i128 * content.size_bits as i128);
                for &l in &path.links {
                    self.capacity[l] -= bw;
                }
                self.cost += hop_cost;
                self.chosen.push((n, a, e, p));
                if flow + 1 < flows {
                    self.run(pair, flow + 1, idx);
                } else {
                    self.run(pair + 1, 0, 0);
                }
                self.chosen.pop();
                self.cost -= hop_cost;
                for &l in &path.links {
                    self.capacity[l] += bw;
                }
            }
        }
    }

    let mut enumerator = Enumerator {
        instance,
        pairs: &pairs,
        placement: 0,
        caching,
        capacity: net.links().iter().map(|l| l.capacity_bps as i128).collect(),
        chosen: Vec::new(),
        cost: Rational::zero(),
        best: None,
    };
    let mut explored = 0u64;
    for placement in 0..(1u64 << bits) {
        let mut used = vec![0u64; net.node_count()];
        let mut caching_cost = Rational::zero();
        for n in 0..contents {
            for c in 0..caching {
                if placement >> (n * caching + c) & 1 == 1 {
                    used[c + 1] += instance.catalog[n].size_bits;
                    caching_cost += cache_cost[n];
                }
            }
        }
        if (1..net.node_count()).any(|e| used[e] > net.storage(e)) {
            continue;
        }
        explored += 1;
        enumerator.placement = placement;
        enumerator.cost = caching_cost;
        enumerator.run(0, 0, 0);
    }

    let Some((cost, placement_bits, chosen)) = enumerator.best else {
        let mut s = Solution::without_assignment(instance, mode, Status::Infeasible);
        s.work = explored;
        return Ok(s);
    };
    let mut placement = Placement::empty(contents, net.node_count());
    for n in 0..contents {
        for c in 0..caching {
            if placement_bits >> (n * caching + c) & 1 == 1 {
                placement.set(n, c + 1, true);
            }
        }
    }
    let mut routing = Routing::new(mode);
    for (n, a, e, p) in chosen {
        routing.add(FlowKey { content: n, ar: a, node: e, path: p }, 1);
    }
    let energy = energy_breakdown(&placement, &routing, &instance.catalog, table, params);
    debug_assert_eq!(energy.total, cost);
    let mut solution = Solution::new(instance, placement, routing, Status::Optimal);
    solution.work = explored;
    Ok(solution)
}
