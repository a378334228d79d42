//! Reference policies: no caching, greedy nearest-node caching and random
//! single-copy caching, plus delivery of realised demand over a fixed
//! placement.

use rand::Rng;

use crate::energy::{Mode, Placement, Routing};
use crate::model::{Solution, Status};
use crate::scenario::{rng_from_seed, Demand, Instance};
use crate::topology::{NodeId, SERVER};
use crate::gsac::{route_ar, route_to_server, DeliveryOrder, DerivedRouting, ResidualState, ServerPolicy};

fn assemble(instance: &Instance, placement: Placement, mode: Mode, derived: DerivedRouting) -> Solution {
    let mut routing = Routing::new(mode);
    for (key, count) in derived.flows {
        routing.add(key, count);
    }
    let mut solution = Solution::new(instance, placement, routing, Status::FeasibleWithGap);
    solution.overloaded_flows = derived.overloaded;
    solution
}

/// Every demanded pair is served by the server over the shortest server
/// path with room, nothing is cached.
pub fn no_caching(instance: &Instance, mode: Mode) -> Solution {
    let (routing, overloaded) = no_caching_routing(instance, &instance.predicted, mode);
    let placement = Placement::empty(instance.catalog.len(), instance.network.node_count());
    let mut solution = Solution::new(instance, placement, routing, Status::FeasibleWithGap);
    solution.overloaded_flows = overloaded;
    solution
}

/// Server-only delivery of `demand`.
pub fn no_caching_routing(instance: &Instance, demand: &Demand, mode: Mode) -> (Routing, u32) {
    let mut residual = ResidualState::new(&instance.network);
    let mut out = DerivedRouting::default();
    for n in demand.contents_by_demand() {
        for &a in instance.paths.ars() {
            let lambda = demand.get(n, a);
            if lambda > 0 {
                let flows = mode.flows_for(lambda);
                route_to_server(
                    &instance.paths,
                    n,
                    instance.catalog[n],
                    a,
                    flows,
                    &mut residual,
                    ServerPolicy::Strict,
                    &mut out,
                );
            }
        }
    }
    let mut routing = Routing::new(mode);
    for (key, count) in out.flows {
        routing.add(key, count);
    }
    (routing, out.overloaded)
}

fn hop_distance(instance: &Instance, a: NodeId, e: NodeId) -> usize {
    instance.paths.paths(a, e)[0].hops()
}

/// For each demanded pair, heaviest first, cache the content at the
/// nearest node with free storage unless a copy already sits at least as
/// close, then route the pair to its nearest reachable copy.
pub fn greedy_caching(instance: &Instance, mode: Mode) -> Solution {
    let net = &instance.network;
    let table = &instance.paths;
    let order = DeliveryOrder::new(table);
    let mut pairs: Vec<(usize, NodeId, u32)> = instance.predicted.entries().collect();
    pairs.sort_by(|x, y| y.2.cmp(&x.2).then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)));

    let mut residual = ResidualState::new(net);
    let mut placement = Placement::empty(instance.catalog.len(), net.node_count());
    let mut out = DerivedRouting::default();
    for (n, a, lambda) in pairs {
        let item = instance.catalog[n];
        let nearest_copy = placement.nodes_for(n).map(|e| hop_distance(instance, a, e)).min();
        let host = net
            .caching_nodes()
            .filter(|&e| !placement.get(n, e) && residual.can_store(e, item.size_bits))
            .min_by_key(|&e| (hop_distance(instance, a, e), e));
        if let Some(host) = host {
            let closer = nearest_copy.is_none_or(|d| hop_distance(instance, a, host) < d);
            if closer {
                residual.store(host, item.size_bits);
                placement.set(n, host, true);
            }
        }
        let cached: Vec<bool> = (0..net.node_count()).map(|e| e != SERVER && placement.get(n, e)).collect();
        route_ar(table, &order, &cached, n, item, a, mode.flows_for(lambda), &mut residual, ServerPolicy::Strict, &mut out);
    }
    assemble(instance, placement, mode, out)
}

/// One copy per demanded content, on a caching node drawn uniformly among
/// those with enough free storage; pairs go to that copy when a path has
/// room, otherwise to the server.
pub fn random_caching(instance: &Instance, mode: Mode, seed: u64) -> Solution {
    let net = &instance.network;
    let table = &instance.paths;
    let order = DeliveryOrder::new(table);
    let mut rng = rng_from_seed(seed);
    let mut residual = ResidualState::new(net);
    let mut placement = Placement::empty(instance.catalog.len(), net.node_count());
    let mut out = DerivedRouting::default();
    for n in instance.predicted.contents_by_demand() {
        let item = instance.catalog[n];
        let hosts: Vec<NodeId> = net.caching_nodes().filter(|&e| residual.can_store(e, item.size_bits)).collect();
        if !hosts.is_empty() {
            let host = hosts[rng.gen_range(0..hosts.len())];
            residual.store(host, item.size_bits);
            placement.set(n, host, true);
        }
        let cached: Vec<bool> = (0..net.node_count()).map(|e| e != SERVER && placement.get(n, e)).collect();
        for &a in table.ars() {
            let lambda = instance.predicted.get(n, a);
            if lambda > 0 {
                route_ar(table, &order, &cached, n, item, a, mode.flows_for(lambda), &mut residual, ServerPolicy::Strict, &mut out);
            }
        }
    }
    assemble(instance, placement, mode, out)
}

/// Deliver `demand` over a fixed placement: each pair is served from the
/// nearest source (cached copy or server, fewest hops, copies before the
/// server on ties) whose path still has room, filling paths in that order;
/// flows that fit nowhere overcommit the nearest source and are counted.
pub fn deliver(instance: &Instance, placement: &Placement, demand: &Demand, mode: Mode) -> (Routing, u32) {
    let net = &instance.network;
    let table = &instance.paths;
    let mut residual = ResidualState::new(net);
    let mut routing = Routing::new(mode);
    let mut overloaded = 0;
    for n in demand.contents_by_demand() {
        let item = instance.catalog[n];
        for &a in table.ars() {
            let lambda = demand.get(n, a);
            if lambda == 0 {
                continue;
            }
            let mut options: Vec<(usize, bool, NodeId, usize)> = (0..net.node_count())
                .filter(|&e| e == SERVER || placement.get(n, e))
                .flat_map(|e| {
                    table.paths(a, e).iter().enumerate().map(move |(p, path)| (path.hops(), e == SERVER, e, p))
                })
                .collect();
            options.sort_unstable();
            let mut remaining = mode.flows_for(lambda);
            for &(_, _, e, p) in &options {
                if remaining == 0 {
                    break;
                }
                let path = &table.paths(a, e)[p];
                let take = residual.max_flows(path, item.bandwidth_bps).min(remaining);
                if take > 0 {
                    residual.charge(path, item.bandwidth_bps, take);
                    routing.add(crate::energy::FlowKey { content: n, ar: a, node: e, path: p }, take);
                    remaining -= take;
                }
            }
            if remaining > 0 {
                let (_, _, e, p) = options[0];
                residual.charge(&table.paths(a, e)[p], item.bandwidth_bps, remaining);
                routing.add(crate::energy::FlowKey { content: n, ar: a, node: e, path: p }, remaining);
                overloaded += remaining;
            }
        }
    }
    (routing, overloaded)
}
