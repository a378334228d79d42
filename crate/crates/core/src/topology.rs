//! Network graph, canonical 10-node topologies and k-shortest-path tables.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;

pub type NodeId = usize;
pub type LinkId = usize;

/// The core content server is always node 0.
pub const SERVER: NodeId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Server,
    Forward,
    Ar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub role: Role,
    /// Caching budget in bits; always 0 for the server.
    pub storage_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub u: NodeId,
    pub v: NodeId,
    pub capacity_bps: u64,
}

impl Link {
    pub fn other(&self, node: NodeId) -> NodeId {
        if node == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Validated undirected network with a single server at node 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    nodes: Vec<Node>,
    links: Vec<Link>,
    /// Per node: `(neighbor, link)` sorted by neighbor id.
    adjacency: Vec<Vec<(NodeId, LinkId)>>,
}

impl Network {
    /// Build and validate a network from parts.
    pub fn new(nodes: Vec<Node>, links: Vec<Link>) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidNetwork(msg));
        if nodes.is_empty() {
            return invalid("no nodes".into());
        }
        let servers: Vec<_> = (0..nodes.len()).filter(|&i| nodes[i].role == Role::Server).collect();
        match servers.as_slice() {
            [] => return invalid("no server node".into()),
            [SERVER] => {}
            [other] => return invalid(format!("server must be node 0, found node {other}")),
            _ => return invalid(format!("more than one server node: {servers:?}")),
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut seen = BTreeSet::new();
        for (id, link) in links.iter().enumerate() {
            if link.u >= nodes.len() || link.v >= nodes.len() {
                return invalid(format!("link {id} references an unknown node"));
            }
            if link.u == link.v {
                return invalid(format!("self-loop on node {}", link.u));
            }
            if link.capacity_bps == 0 {
                return invalid(format!("link {id} ({}-{}) has zero capacity", link.u, link.v));
            }
            let key = (link.u.min(link.v), link.u.max(link.v));
            if !seen.insert(key) {
                return invalid(format!("duplicate link {}-{}", key.0, key.1));
            }
            adjacency[link.u].push((link.v, id));
            adjacency[link.v].push((link.u, id));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let mut nodes = nodes;
        nodes[SERVER].storage_bits = 0;
        let net = Network { nodes, links, adjacency };
        if net.distances_from(SERVER).iter().any(|d| d.is_none()) {
            return invalid("disconnected".into());
        }
        Ok(net)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id]
    }

    pub fn role(&self, node: NodeId) -> Role {
        self.nodes[node].role
    }

    pub fn storage(&self, node: NodeId) -> u64 {
        self.nodes[node].storage_bits
    }

    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, LinkId)] {
        &self.adjacency[node]
    }

    /// Access routers in ascending id order.
    pub fn ars(&self) -> Vec<NodeId> {
        (0..self.nodes.len()).filter(|&n| self.nodes[n].role == Role::Ar).collect()
    }

    /// Caching candidates: every node except the server.
    pub fn caching_nodes(&self) -> impl Iterator<Item = NodeId> {
        1..self.nodes.len()
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn distances_from(&self, source: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.nodes.len()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &(v, _) in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Same graph with every caching node given `storage_bits` and every
    /// link given `capacity_bps`.
    pub fn with_uniform_resources(&self, storage_bits: u64, capacity_bps: u64) -> Result<Network> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node {
                role: n.role,
                storage_bits: if n.role == Role::Server { 0 } else { storage_bits },
            })
            .collect();
        let links = self
            .links
            .iter()
            .map(|l| Link { capacity_bps, ..l.clone() })
            .collect();
        Network::new(nodes, links)
    }

    pub fn with_storage(&self, node: NodeId, storage_bits: u64) -> Network {
        let mut net = self.clone();
        if node != SERVER {
            net.nodes[node].storage_bits = storage_bits;
        }
        net
    }

    pub fn with_capacity(&self, link: LinkId, capacity_bps: u64) -> Result<Network> {
        let mut links = self.links.clone();
        links[link].capacity_bps = capacity_bps;
        Network::new(self.nodes.clone(), links)
    }

    pub fn to_document(&self) -> NetworkDoc {
        NetworkDoc {
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(id, n)| NodeDoc { id, role: n.role, storage_bits: n.storage_bits })
                .collect(),
            links: self
                .links
                .iter()
                .map(|l| LinkDoc { u: l.u, v: l.v, capacity_bps: l.capacity_bps })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }
}

/// Serialized topology document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDoc {
    pub nodes: Vec<NodeDoc>,
    pub links: Vec<LinkDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: usize,
    pub role: Role,
    #[serde(default, with = "count")]
    pub storage_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDoc {
    pub u: usize,
    pub v: usize,
    #[serde(with = "count")]
    pub capacity_bps: u64,
}

/// Accepts integral JSON numbers written either as integers or in
/// exponent form (`4e9`).
pub(crate) mod count {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*value)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let number = serde_json::Number::deserialize(d)?;
        if let Some(v) = number.as_u64() {
            return Ok(v);
        }
        match number.as_f64() {
            Some(v) if v < 0.0 => Err(de::Error::custom(format!("negative quantity {v}"))),
            Some(v) if v.fract() == 0.0 && v <= u64::MAX as f64 => Ok(v as u64),
            _ => Err(de::Error::custom(format!("expected a nonnegative integer, found {number}"))),
        }
    }
}

impl TryFrom<NetworkDoc> for Network {
    type Error = Error;

    fn try_from(doc: NetworkDoc) -> Result<Network> {
        let n = doc.nodes.len();
        let mut slots: Vec<Option<Node>> = vec![None; n];
        for node in doc.nodes {
            if node.id >= n {
                return Err(Error::InvalidNetwork(format!(
                    "node ids must be 0..{n}, found {}",
                    node.id
                )));
            }
            if slots[node.id].is_some() {
                return Err(Error::InvalidNetwork(format!("duplicate node id {}", node.id)));
            }
            slots[node.id] = Some(Node { role: node.role, storage_bits: node.storage_bits });
        }
        let nodes = slots.into_iter().map(|s| s.expect("ids are a permutation of 0..n")).collect();
        let links = doc
            .links
            .into_iter()
            .map(|l| Link { u: l.u, v: l.v, capacity_bps: l.capacity_bps })
            .collect();
        Network::new(nodes, links)
    }
}

/// Parse and validate a JSON topology document.
pub fn load_network(document: &str) -> Result<Network> {
    let doc: NetworkDoc =
        serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    Network::try_from(doc)
}

/// Canonical 10-node topologies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Tree10,
    Original10,
    Mesh10,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 3] =
        [TopologyKind::Tree10, TopologyKind::Original10, TopologyKind::Mesh10];

    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Tree10 => "tree10",
            TopologyKind::Original10 => "original10",
            TopologyKind::Mesh10 => "mesh10",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree10" => Ok(TopologyKind::Tree10),
            "original10" => Ok(TopologyKind::Original10),
            "mesh10" => Ok(TopologyKind::Mesh10),
            other => Err(Error::Parse(format!("unknown topology kind {other:?}"))),
        }
    }
}

pub const DEFAULT_STORAGE_BITS: u64 = units::BITS_PER_GB / 2;
pub const DEFAULT_CAPACITY_BPS: u64 = units::BPS_PER_GBPS / 2;

const TREE_LINKS: [(NodeId, NodeId); 9] =
    [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (2, 6), (2, 7), (3, 8), (3, 9)];
const ORIGINAL_EXTRA_LINKS: [(NodeId, NodeId); 7] =
    [(1, 2), (1, 3), (2, 3), (4, 5), (6, 7), (8, 9), (5, 6)];

/// Node 0 is the server, 1-3 forward routers, 4-9 access routers. Caching
/// nodes get 0.5 GB and links 0.5 Gbps.
pub fn builtin_topology(kind: TopologyKind) -> Network {
    let pairs: Vec<(NodeId, NodeId)> = match kind {
        TopologyKind::Tree10 => TREE_LINKS.to_vec(),
        TopologyKind::Original10 => {
            let mut pairs = TREE_LINKS.to_vec();
            pairs.extend(ORIGINAL_EXTRA_LINKS);
            pairs.sort_unstable();
            pairs
        }
        TopologyKind::Mesh10 => {
            (0..10).flat_map(|u| (u + 1..10).map(move |v| (u, v))).collect()
        }
    };
    let nodes = (0..10)
        .map(|id| match id {
            0 => Node { role: Role::Server, storage_bits: 0 },
            1..=3 => Node { role: Role::Forward, storage_bits: DEFAULT_STORAGE_BITS },
            _ => Node { role: Role::Ar, storage_bits: DEFAULT_STORAGE_BITS },
        })
        .collect();
    let links = pairs
        .into_iter()
        .map(|(u, v)| Link { u, v, capacity_bps: DEFAULT_CAPACITY_BPS })
        .collect();
    Network::new(nodes, links).expect("builtin topologies are valid")
}

/// Loop-free route from an access router to a node, stored as visited nodes
/// and traversed links. The trivial path (`a == e`) has one node, no links.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
}

impl Path {
    pub fn trivial(node: NodeId) -> Self {
        Path { nodes: vec![node], links: Vec::new() }
    }

    pub fn hops(&self) -> usize {
        self.links.len()
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn target(&self) -> NodeId {
        *self.nodes.last().expect("paths have at least one node")
    }

    pub fn uses_link(&self, link: LinkId) -> bool {
        self.links.contains(&link)
    }

    fn from_nodes(net: &Network, nodes: Vec<NodeId>) -> Self {
        let links = nodes
            .windows(2)
            .map(|w| {
                net.neighbors(w[0])
                    .iter()
                    .find(|&&(v, _)| v == w[1])
                    .map(|&(_, l)| l)
                    .expect("consecutive path nodes are adjacent")
            })
            .collect();
        Path { nodes, links }
    }
}

/// Hop-shortest path from `source` to `target` avoiding banned nodes and
/// links, choosing the lexicographically smallest node sequence among ties.
fn shortest_lex(
    net: &Network,
    source: NodeId,
    target: NodeId,
    banned_nodes: &[bool],
    banned_links: &[bool],
) -> Option<Vec<NodeId>> {
    let mut dist = vec![usize::MAX; net.node_count()];
    dist[target] = 0;
    let mut queue = VecDeque::from([target]);
    while let Some(u) = queue.pop_front() {
        for &(v, l) in net.neighbors(u) {
            if banned_links[l] || banned_nodes[v] || dist[v] != usize::MAX {
                continue;
            }
            dist[v] = dist[u] + 1;
            queue.push_back(v);
        }
    }
    if dist[source] == usize::MAX {
        return None;
    }
    let mut nodes = vec![source];
    let mut current = source;
    while current != target {
        let next = net
            .neighbors(current)
            .iter()
            .find(|&&(v, l)| !banned_links[l] && dist[v] == dist[current] - 1)
            .map(|&(v, _)| v)?;
        nodes.push(next);
        current = next;
    }
    Some(nodes)
}

/// Up to `k` loop-free paths from `a` to `e` ordered by hop count, ties
/// broken by lexicographic node sequence (Yen's algorithm, unit weights).
pub fn yen_k_shortest(net: &Network, a: NodeId, e: NodeId, k: usize) -> Vec<Path> {
    if k == 0 {
        return Vec::new();
    }
    if a == e {
        return vec![Path::trivial(a)];
    }
    let n = net.node_count();
    let no_nodes = vec![false; n];
    let no_links = vec![false; net.link_count()];
    let Some(first) = shortest_lex(net, a, e, &no_nodes, &no_links) else {
        return Vec::new();
    };
    let mut accepted: Vec<Vec<NodeId>> = vec![first];
    let mut candidates: BTreeSet<(usize, Vec<NodeId>)> = BTreeSet::new();

    while accepted.len() < k {
        let previous = accepted.last().expect("at least one accepted path").clone();
        for spur_index in 0..previous.len() - 1 {
            let spur = previous[spur_index];
            let root = &previous[..=spur_index];
            let mut banned_links = no_links.clone();
            for path in &accepted {
                if path.len() > spur_index + 1 && &path[..=spur_index] == root {
                    let hop = Path::from_nodes(net, path[spur_index..=spur_index + 1].to_vec());
                    banned_links[hop.links[0]] = true;
                }
            }
            let mut banned_nodes = no_nodes.clone();
            for &node in &root[..spur_index] {
                banned_nodes[node] = true;
            }
            if let Some(spur_path) = shortest_lex(net, spur, e, &banned_nodes, &banned_links) {
                let mut total = root[..spur_index].to_vec();
                total.extend(spur_path);
                if !accepted.contains(&total) {
                    candidates.insert((total.len() - 1, total));
                }
            }
        }
        match candidates.pop_first() {
            Some((_, path)) => accepted.push(path),
            None => break,
        }
    }
    accepted.into_iter().map(|nodes| Path::from_nodes(net, nodes)).collect()
}

/// Candidate paths `P_ae` for every access router `a` and node `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathTable {
    k: usize,
    ars: Vec<NodeId>,
    /// `ar_slot[node]` is the index of `node` in `ars`.
    ar_slot: Vec<Option<usize>>,
    /// `paths[ar_index][e]`.
    paths: Vec<Vec<Vec<Path>>>,
}

impl PathTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ars(&self) -> &[NodeId] {
        &self.ars
    }

    pub fn ar_index(&self, a: NodeId) -> Option<usize> {
        self.ar_slot.get(a).copied().flatten()
    }

    pub fn node_count(&self) -> usize {
        self.ar_slot.len()
    }

    /// Paths from AR `a` to node `e`; empty when `a` is not an AR.
    pub fn paths(&self, a: NodeId, e: NodeId) -> &[Path] {
        match self.ar_index(a) {
            Some(i) => &self.paths[i][e],
            None => &[],
        }
    }

    pub fn path(&self, a: NodeId, e: NodeId, p: usize) -> Option<&Path> {
        self.paths(a, e).get(p)
    }
}

/// Run Yen's algorithm for every (AR, node) pair.
pub fn build_path_table(net: &Network, k: usize) -> PathTable {
    let ars = net.ars();
    let mut ar_slot = vec![None; net.node_count()];
    for (i, &a) in ars.iter().enumerate() {
        ar_slot[a] = Some(i);
    }
    let paths = ars
        .iter()
        .map(|&a| (0..net.node_count()).map(|e| yen_k_shortest(net, a, e, k)).collect())
        .collect();
    PathTable { k, ars, ar_slot, paths }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line3() -> Network {
        Network::new(
            vec![
                Node { role: Role::Server, storage_bits: 0 },
                Node { role: Role::Forward, storage_bits: 1_000_000_000 },
                Node { role: Role::Ar, storage_bits: 1_000_000_000 },
            ],
            vec![
                Link { u: 0, v: 1, capacity_bps: 1_000_000_000 },
                Link { u: 1, v: 2, capacity_bps: 1_000_000_000 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn builtin_link_counts() {
        assert_eq!(builtin_topology(TopologyKind::Tree10).link_count(), 9);
        assert_eq!(builtin_topology(TopologyKind::Original10).link_count(), 16);
        let mesh = builtin_topology(TopologyKind::Mesh10);
        assert_eq!(mesh.link_count(), 45);
        assert!((0..10).all(|n| mesh.neighbors(n).len() == 9));
        for kind in TopologyKind::ALL {
            let net = builtin_topology(kind);
            assert_eq!(net.node_count(), 10);
            assert_eq!(net.role(0), Role::Server);
            assert_eq!(net.ars(), vec![4, 5, 6, 7, 8, 9]);
        }
    }

    #[test]
    fn validation_errors_name_the_invariant() {
        let no_server = Network::new(
            vec![Node { role: Role::Ar, storage_bits: 1 }, Node { role: Role::Ar, storage_bits: 1 }],
            vec![Link { u: 0, v: 1, capacity_bps: 1 }],
        );
        assert!(matches!(no_server, Err(Error::InvalidNetwork(m)) if m.contains("no server")));

        let disconnected = Network::new(
            vec![
                Node { role: Role::Server, storage_bits: 0 },
                Node { role: Role::Ar, storage_bits: 1 },
            ],
            vec![],
        );
        assert!(matches!(disconnected, Err(Error::InvalidNetwork(m)) if m.contains("disconnected")));

        let self_loop = Network::new(
            vec![Node { role: Role::Server, storage_bits: 0 }],
            vec![Link { u: 0, v: 0, capacity_bps: 1 }],
        );
        assert!(self_loop.is_err());

        let duplicate = Network::new(
            vec![
                Node { role: Role::Server, storage_bits: 0 },
                Node { role: Role::Ar, storage_bits: 1 },
            ],
            vec![Link { u: 0, v: 1, capacity_bps: 1 }, Link { u: 1, v: 0, capacity_bps: 1 }],
        );
        assert!(matches!(duplicate, Err(Error::InvalidNetwork(m)) if m.contains("duplicate")));

        let zero_capacity = Network::new(
            vec![
                Node { role: Role::Server, storage_bits: 0 },
                Node { role: Role::Ar, storage_bits: 1 },
            ],
            vec![Link { u: 0, v: 1, capacity_bps: 0 }],
        );
        assert!(zero_capacity.is_err());
    }

    #[test]
    fn document_round_trip() {
        let net = builtin_topology(TopologyKind::Mesh10);
        let text = net.to_json().unwrap();
        let back = load_network(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.link_count(), 45);
    }

    #[test]
    fn exponent_quantities_parse() {
        let doc = r#"{"nodes":[{"id":0,"role":"server","storage_bits":0},
                               {"id":1,"role":"ar","storage_bits":4e9}],
                      "links":[{"u":0,"v":1,"capacity_bps":5e8}]}"#;
        let net = load_network(doc).unwrap();
        assert_eq!(net.storage(1), 4_000_000_000);
        assert_eq!(net.link(0).capacity_bps, 500_000_000);
        let negative = doc.replace("4e9", "-4e9");
        assert!(load_network(&negative).is_err());
    }

    #[test]
    fn missing_server_document_is_rejected() {
        let doc = r#"{"nodes":[{"id":0,"role":"forward","storage_bits":0},
                               {"id":1,"role":"ar","storage_bits":1}],
                      "links":[{"u":0,"v":1,"capacity_bps":1}]}"#;
        assert!(matches!(load_network(doc), Err(Error::InvalidNetwork(_))));
        assert!(matches!(load_network("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn yen_on_a_line() {
        let net = line3();
        let paths = yen_k_shortest(&net, 2, 0, 2);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].links, vec![1, 0]);
        assert_eq!(paths[0].hops(), 2);
        let local = yen_k_shortest(&net, 2, 2, 3);
        assert_eq!(local, vec![Path::trivial(2)]);
    }

    #[test]
    fn yen_on_a_triangle() {
        let net = Network::new(
            vec![
                Node { role: Role::Server, storage_bits: 0 },
                Node { role: Role::Ar, storage_bits: 0 },
                Node { role: Role::Ar, storage_bits: 0 },
            ],
            vec![
                Link { u: 1, v: 2, capacity_bps: 1 },
                Link { u: 1, v: 0, capacity_bps: 1 },
                Link { u: 2, v: 0, capacity_bps: 1 },
            ],
        )
        .unwrap();
        let paths = yen_k_shortest(&net, 1, 2, 2);
        assert_eq!(paths[0].nodes, vec![1, 2]);
        assert_eq!(paths[1].nodes, vec![1, 0, 2]);
    }

    #[test]
    fn path_table_shapes() {
        let table = build_path_table(&line3(), 2);
        assert_eq!(table.ars(), &[2]);
        for e in 0..3 {
            assert_eq!(table.paths(2, e).len(), 1);
        }
        assert_eq!(table.paths(2, 2)[0].hops(), 0);

        let mesh = builtin_topology(TopologyKind::Mesh10);
        let table = build_path_table(&mesh, 1);
        for &a in table.ars() {
            for e in 0..10 {
                let paths = table.paths(a, e);
                assert_eq!(paths.len(), 1);
                assert_eq!(paths[0].hops(), usize::from(a != e));
            }
        }

        let tree = builtin_topology(TopologyKind::Tree10);
        let table = build_path_table(&tree, 4);
        for &a in table.ars() {
            for e in 0..10 {
                assert_eq!(table.paths(a, e).len(), 1);
            }
        }
    }

    #[test]
    fn original_has_path_diversity() {
        let net = builtin_topology(TopologyKind::Original10);
        let paths = yen_k_shortest(&net, 4, 0, 3);
        assert_eq!(paths.len(), 3);
        assert_eq!(paths[0].nodes, vec![4, 1, 0]);
        assert!(paths.windows(2).all(|w| w[0].hops() <= w[1].hops()));
    }

    /// Every simple path from `a` to `e`, by depth-first search.
    fn all_simple_paths(net: &Network, a: NodeId, e: NodeId) -> Vec<Vec<NodeId>> {
        fn walk(net: &Network, e: NodeId, stack: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
            let u = *stack.last().unwrap();
            if u == e {
                out.push(stack.clone());
                return;
            }
            for &(v, _) in net.neighbors(u) {
                if !stack.contains(&v) {
                    stack.push(v);
                    walk(net, e, stack, out);
                    stack.pop();
                }
            }
        }
        let mut out = Vec::new();
        walk(net, e, &mut vec![a], &mut out);
        out
    }

    proptest::proptest! {
        #[test]
        fn yen_agrees_with_enumeration(seed in 0u64..10_000, k in 1usize..6) {
            let shape = crate::fixtures::SmallShape { max_nodes: 6, ..Default::default() };
            let net = crate::fixtures::random_small(seed, shape).network;
            for a in 0..net.node_count() {
                for e in 0..net.node_count() {
                    let mut every = all_simple_paths(&net, a, e);
                    every.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
                    every.truncate(k);
                    let yen: Vec<Vec<NodeId>> =
                        yen_k_shortest(&net, a, e, k).into_iter().map(|p| p.nodes).collect();
                    proptest::prop_assert_eq!(yen, every, "a={} e={} k={}", a, e, k);
                }
            }
        }

        #[test]
        fn path_tables_are_deterministic(seed in 0u64..10_000, k in 1usize..5) {
            let shape = crate::fixtures::SmallShape { max_nodes: 6, ..Default::default() };
            let net = crate::fixtures::random_small(seed, shape).network;
            let first = build_path_table(&net, k);
            let again = build_path_table(&net.clone(), k);
            for &a in first.ars() {
                for e in 0..net.node_count() {
                    proptest::prop_assert_eq!(first.paths(a, e), again.paths(a, e));
                    for path in first.paths(a, e) {
                        proptest::prop_assert_eq!(path.source(), a);
                        proptest::prop_assert_eq!(path.target(), e);
                        let walks = path
                            .links
                            .iter()
                            .enumerate()
                            .all(|(i, &l)| net.link(l).other(path.nodes[i]) == path.nodes[i + 1]);
                        proptest::prop_assert!(walks);
                    }
                }
            }
        }
    }
}
