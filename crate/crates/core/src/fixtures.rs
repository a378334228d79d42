//! Small reference instances with hand-checkable optima, and a generator
//! of random tiny instances for cross-checking solvers.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::energy::EnergyParams;
use crate::scenario::{rng_from_seed, Content, Demand, Instance};
use crate::topology::{Link, Network, Node, Role};

pub const THREE_NODE_SIZE_BITS: u64 = 800_000_000;
pub const THREE_NODE_BANDWIDTH_BPS: u64 = 100_000_000;

/// Server 0, forward router 1 and AR 2 on a line with 1 Gbit/s links and
/// 1 Gbit of storage at nodes 1 and 2; one 800 Mbit content at 100 Mbit/s.
pub fn three_node_network(storage_1: u64, storage_2: u64, capacity_l2: u64) -> Network {
    Network::new(
        vec![
            Node { role: Role::Server, storage_bits: 0 },
            Node { role: Role::Forward, storage_bits: storage_1 },
            Node { role: Role::Ar, storage_bits: storage_2 },
        ],
        vec![
            Link { u: 0, v: 1, capacity_bps: 1_000_000_000 },
            Link { u: 1, v: 2, capacity_bps: capacity_l2 },
        ],
    )
    .expect("three-node network is valid")
}

/// The three-node instance with `requests` requests for its only content at AR 2.
pub fn three_node(requests: u32) -> Instance {
    three_node_on(three_node_network(1_000_000_000, 1_000_000_000, 1_000_000_000), requests)
}

pub fn three_node_on(network: Network, requests: u32) -> Instance {
    let mut demand = Demand::zeros(1, 3);
    demand.set(0, 2, requests);
    Instance::planned(
        network,
        2,
        vec![Content { size_bits: THREE_NODE_SIZE_BITS, bandwidth_bps: THREE_NODE_BANDWIDTH_BPS }],
        demand,
        EnergyParams::default(),
    )
    .expect("three-node instance is valid")
}

/// Bounds for [`random_small`].
#[derive(Debug, Clone, Copy)]
pub struct SmallShape {
    pub max_nodes: usize,
    pub max_contents: usize,
    pub max_k: usize,
    pub max_requests: u32,
}

impl Default for SmallShape {
    fn default() -> Self {
        SmallShape { max_nodes: 5, max_contents: 3, max_k: 2, max_requests: 2 }
    }
}

/// A random connected instance within `shape`, with storage and capacities
/// drawn close to content sizes and bandwidths so constraints bind.
pub fn random_small(seed: u64, shape: SmallShape) -> Instance {
    let mut rng = rng_from_seed(seed);
    let n = rng.gen_range(3..=shape.max_nodes.max(3));
    let contents = rng.gen_range(1..=shape.max_contents.max(1));
    let k = rng.gen_range(1..=shape.max_k.max(1));

    let catalog: Vec<Content> = (0..contents)
        .map(|_| Content {
            size_bits: 100_000_000 * rng.gen_range(1..=8u64),
            bandwidth_bps: 50_000_000 * rng.gen_range(1..=3u64),
        })
        .collect();

    let mut roles: Vec<Role> = (1..n).map(|_| if rng.gen_bool(0.6) { Role::Ar } else { Role::Forward }).collect();
    if !roles.contains(&Role::Ar) {
        let i = rng.gen_range(0..roles.len());
        roles[i] = Role::Ar;
    }
    let mut nodes = vec![Node { role: Role::Server, storage_bits: 0 }];
    for role in roles {
        let storage = *[0u64, 300_000_000, 600_000_000, 900_000_000, 2_000_000_000]
            .choose(&mut rng)
            .unwrap();
        nodes.push(Node { role, storage_bits: storage });
    }

    // random spanning tree plus a few extra links
    let mut order: Vec<usize> = (1..n).collect();
    order.shuffle(&mut rng);
    let mut attached = vec![0usize];
    let mut pairs = Vec::new();
    for v in order {
        let u = *attached.choose(&mut rng).unwrap();
        pairs.push((u.min(v), u.max(v)));
        attached.push(v);
    }
    for u in 0..n {
        for v in u + 1..n {
            if !pairs.contains(&(u, v)) && rng.gen_bool(0.3) {
                pairs.push((u, v));
            }
        }
    }
    let links = pairs
        .into_iter()
        .map(|(u, v)| Link {
            u,
            v,
            capacity_bps: *[60_000_000u64, 120_000_000, 200_000_000, 400_000_000, 1_000_000_000]
                .choose(&mut rng)
                .unwrap(),
        })
        .collect();
    let network = Network::new(nodes, links).expect("generated network is valid");

    let mut demand = Demand::zeros(contents, n);
    for a in network.ars() {
        for c in 0..contents {
            demand.set(c, a, rng.gen_range(0..=shape.max_requests));
        }
    }
    Instance::planned(network, k, catalog, demand, EnergyParams::default()).expect("generated instance is valid")
}
