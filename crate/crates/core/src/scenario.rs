//! Content catalogs, request generation, prediction noise and the
//! [`Instance`] bundle every solver consumes.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::EnergyParams;
use crate::error::{Error, Result};
use crate::scalar::{rational_from_f64, Rational, Scalar};
use crate::topology::{count, build_path_table, Network, NodeId, PathTable, Role};
use crate::units;

pub const DEFAULT_CONTENTS: usize = 100;
pub const DEFAULT_REQUESTS: usize = 100;
pub const DEFAULT_SIZE_RANGE: (u64, u64) = (10 * units::BITS_PER_MB, 100 * units::BITS_PER_MB);
pub const DEFAULT_BANDWIDTH_RANGE: (u64, u64) =
    (10 * units::BPS_PER_MBPS, 100 * units::BPS_PER_MBPS);
/// Share of requests that target the popular prefix of the catalog.
pub const POPULAR_REQUEST_SHARE: f64 = 0.8;
/// Fraction of the catalog considered popular.
pub const POPULAR_CATALOG_SHARE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Content {
    #[serde(with = "count")]
    pub size_bits: u64,
    #[serde(with = "count")]
    pub bandwidth_bps: u64,
}

/// A single user: the AR it attaches to and the content it asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UserProfile {
    pub ar: NodeId,
    pub content: usize,
}

/// Aggregated request counts `lambda[n][a]`, stored densely over all nodes
/// (only AR columns are ever nonzero).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Demand {
    contents: usize,
    nodes: usize,
    counts: Vec<u32>,
}

impl Demand {
    pub fn zeros(contents: usize, nodes: usize) -> Self {
        Demand { contents, nodes, counts: vec![0; contents * nodes] }
    }

    pub fn from_profiles(profiles: &[UserProfile], contents: usize, nodes: usize) -> Self {
        let mut demand = Demand::zeros(contents, nodes);
        for user in profiles {
            demand.add(user.content, user.ar, 1);
        }
        demand
    }

    pub fn contents(&self) -> usize {
        self.contents
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn get(&self, content: usize, ar: NodeId) -> u32 {
        self.counts[content * self.nodes + ar]
    }

    pub fn set(&mut self, content: usize, ar: NodeId, value: u32) {
        self.counts[content * self.nodes + ar] = value;
    }

    pub fn add(&mut self, content: usize, ar: NodeId, value: u32) {
        self.counts[content * self.nodes + ar] += value;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn content_total(&self, content: usize) -> u64 {
        self.row(content).iter().map(|&c| u64::from(c)).sum()
    }

    pub fn row(&self, content: usize) -> &[u32] {
        &self.counts[content * self.nodes..(content + 1) * self.nodes]
    }

    /// Nonzero entries as `(content, ar, count)` in index order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, NodeId, u32)> + '_ {
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(move |(i, &c)| {
            (i / self.nodes, i % self.nodes, c)
        })
    }

    /// Contents with any demand, most requested first (ties by index).
    pub fn contents_by_demand(&self) -> Vec<usize> {
        let mut order: Vec<usize> =
            (0..self.contents).filter(|&n| self.content_total(n) > 0).collect();
        order.sort_by_key(|&n| (std::cmp::Reverse(self.content_total(n)), n));
        order
    }
}

/// Deterministic stream seed derived from a base seed and a tag path
/// (splitmix64 finalizer, stable across platforms and releases).
pub fn stream_seed(base: u64, tags: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    tags.iter().fold(mix(base), |acc, &tag| mix(acc ^ mix(tag)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draw `count` contents with sizes and bandwidths uniform over the
/// inclusive ranges.
pub fn generate_catalog(
    count: usize,
    size_range: (u64, u64),
    bandwidth_range: (u64, u64),
    seed: u64,
) -> Result<Vec<Content>> {
    if count == 0 {
        return Err(Error::InvalidRange("catalog must contain at least one content".into()));
    }
    for (name, (lo, hi)) in [("size", size_range), ("bandwidth", bandwidth_range)] {
        if lo == 0 || lo > hi {
            return Err(Error::InvalidRange(format!("{name} range [{lo}, {hi}] is empty or zero")));
        }
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..count)
        .map(|_| Content {
            size_bits: rng.gen_range(size_range.0..=size_range.1),
            bandwidth_bps: rng.gen_range(bandwidth_range.0..=bandwidth_range.1),
        })
        .collect())
}

/// Size of the popular catalog prefix.
pub fn popular_count(catalog_len: usize) -> usize {
    ((catalog_len as f64 * POPULAR_CATALOG_SHARE).ceil() as usize).clamp(1, catalog_len)
}

/// Draw `total_requests` users under the 80/20 rule: each attaches to a
/// uniformly random AR and asks for a popular content with probability 0.8.
///
/// Users are drawn sequentially from one stream, so a smaller request count
/// yields a prefix of a larger one under the same seed.
pub fn generate_demand(
    catalog_len: usize,
    ars: &[NodeId],
    nodes: usize,
    total_requests: usize,
    seed: u64,
) -> Result<(Vec<UserProfile>, Demand)> {
    if total_requests > 0 && ars.is_empty() {
        return Err(Error::InvalidScenario("requests were asked for but there is no AR".into()));
    }
    if catalog_len == 0 {
        return Err(Error::InvalidScenario("empty catalog".into()));
    }
    let popular = popular_count(catalog_len);
    let mut rng = rng_from_seed(seed);
    let profiles: Vec<UserProfile> = (0..total_requests)
        .map(|_| {
            let ar = ars[rng.gen_range(0..ars.len())];
            let pick_popular = rng.gen::<f64>() < POPULAR_REQUEST_SHARE || popular == catalog_len;
            let content = if pick_popular {
                rng.gen_range(0..popular)
            } else {
                rng.gen_range(popular..catalog_len)
            };
            UserProfile { ar, content }
        })
        .collect();
    let demand = Demand::from_profiles(&profiles, catalog_len, nodes);
    Ok((profiles, demand))
}

/// Actual requests given predicted profiles: each user keeps its predicted
/// content with probability `accuracy`, otherwise asks for a uniformly drawn
/// different content.
///
/// Every user consumes the same two draws whatever the accuracy, so lowering
/// the accuracy only ever adds mispredicted users under a fixed seed.
pub fn perturb_prediction(
    profiles: &[UserProfile],
    catalog_len: usize,
    nodes: usize,
    accuracy: f64,
    seed: u64,
) -> Result<(Vec<UserProfile>, Demand)> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(Error::InvalidParameter(format!("accuracy {accuracy} outside [0, 1]")));
    }
    let mut rng = rng_from_seed(seed);
    let actual: Vec<UserProfile> = profiles
        .iter()
        .map(|user| {
            let keep = rng.gen::<f64>();
            let other = if catalog_len > 1 { rng.gen_range(0..catalog_len - 1) } else { 0 };
            if keep < accuracy || catalog_len == 1 {
                *user
            } else {
                let content = if other >= user.content { other + 1 } else { other };
                UserProfile { ar: user.ar, content }
            }
        })
        .collect();
    let demand = Demand::from_profiles(&actual, catalog_len, nodes);
    Ok((actual, demand))
}

/// Everything a solver needs: topology, candidate paths, catalog, demand
/// and energy coefficients.
#[derive(Debug, Clone)]
pub struct Instance {
    pub network: Arc<Network>,
    pub paths: Arc<PathTable>,
    pub catalog: Vec<Content>,
    /// Demand the placement is planned for.
    pub predicted: Demand,
    /// Demand that is actually delivered; equal to `predicted` at full accuracy.
    pub actual: Demand,
    pub params: EnergyParams<Rational>,
}

impl Instance {
    pub fn new(
        network: Arc<Network>,
        paths: Arc<PathTable>,
        catalog: Vec<Content>,
        predicted: Demand,
        actual: Demand,
        params: EnergyParams<Rational>,
    ) -> Result<Self> {
        let instance = Instance { network, paths, catalog, predicted, actual, params };
        instance.validate()?;
        Ok(instance)
    }

    /// Instance with a freshly built path table and `actual == predicted`.
    pub fn planned(
        network: Network,
        k_paths: usize,
        catalog: Vec<Content>,
        demand: Demand,
        params: EnergyParams<Rational>,
    ) -> Result<Self> {
        if k_paths == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let paths = Arc::new(build_path_table(&network, k_paths));
        Instance::new(Arc::new(network), paths, catalog, demand.clone(), demand, params)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidScenario(m));
        if self.paths.node_count() != self.network.node_count() {
            return invalid("path table does not match the network".into());
        }
        for content in &self.catalog {
            if content.size_bits == 0 || content.bandwidth_bps == 0 {
                return invalid("content sizes and bandwidths must be positive".into());
            }
        }
        for demand in [&self.predicted, &self.actual] {
            if demand.contents() != self.catalog.len() || demand.nodes() != self.network.node_count()
            {
                return invalid("demand dimensions do not match catalog and network".into());
            }
            if let Some((n, a, _)) =
                demand.entries().find(|&(_, a, _)| self.network.role(a) != Role::Ar)
            {
                return invalid(format!("demand for content {n} at node {a}, which is not an AR"));
            }
        }
        let zero = Rational::from_count(0);
        if self.params.alpha < zero || self.params.beta < zero || self.params.epoch <= zero {
            return invalid("alpha and beta must be nonnegative and T positive".into());
        }
        Ok(())
    }

    /// Copy of this instance where the planned demand is replaced by the
    /// actual one (used to evaluate delivery on realised requests).
    pub fn with_predicted(&self, predicted: Demand) -> Result<Instance> {
        Instance::new(
            self.network.clone(),
            self.paths.clone(),
            self.catalog.clone(),
            predicted.clone(),
            predicted,
            self.params,
        )
    }

    pub fn to_scenario_doc(&self) -> ScenarioDoc {
        ScenarioDoc {
            catalog: self.catalog.clone(),
            demand: self
                .predicted
                .entries()
                .map(|(content, ar, count)| DemandDoc { content, ar, count })
                .collect(),
            alpha: f64::from_rational(self.params.alpha),
            beta: f64::from_rational(self.params.beta),
            t_seconds: f64::from_rational(self.params.epoch),
        }
    }
}

/// Serialized scenario: a fully pinned catalog, demand and coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub catalog: Vec<Content>,
    pub demand: Vec<DemandDoc>,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "T_seconds")]
    pub t_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandDoc {
    pub content: usize,
    pub ar: NodeId,
    pub count: u32,
}

impl ScenarioDoc {
    pub fn parse(text: &str) -> Result<ScenarioDoc> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn params(&self) -> Result<EnergyParams<Rational>> {
        Ok(EnergyParams {
            alpha: rational_from_f64(self.alpha)?,
            beta: rational_from_f64(self.beta)?,
            epoch: rational_from_f64(self.t_seconds)?,
        })
    }

    pub fn demand(&self, nodes: usize) -> Result<Demand> {
        let mut demand = Demand::zeros(self.catalog.len(), nodes);
        for entry in &self.demand {
            if entry.content >= self.catalog.len() || entry.ar >= nodes {
                return Err(Error::InvalidScenario(format!(
                    "demand entry ({}, {}) is out of range",
                    entry.content, entry.ar
                )));
            }
            demand.add(entry.content, entry.ar, entry.count);
        }
        Ok(demand)
    }

    /// Bind this scenario to a network.
    pub fn instantiate(&self, network: Network, k_paths: usize) -> Result<Instance> {
        let demand = self.demand(network.node_count())?;
        Instance::planned(network, k_paths, self.catalog.clone(), demand, self.params()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_respects_ranges_and_seed() {
        let catalog = generate_catalog(100, DEFAULT_SIZE_RANGE, DEFAULT_BANDWIDTH_RANGE, 7).unwrap();
        assert_eq!(catalog.len(), 100);
        assert!(catalog.iter().all(|c| (80_000_000..=800_000_000).contains(&c.size_bits)));
        assert!(catalog.iter().all(|c| (10_000_000..=100_000_000).contains(&c.bandwidth_bps)));
        let again = generate_catalog(100, DEFAULT_SIZE_RANGE, DEFAULT_BANDWIDTH_RANGE, 7).unwrap();
        assert_eq!(catalog, again);
        let point = generate_catalog(5, (42, 42), (9, 9), 1).unwrap();
        assert!(point.iter().all(|c| c.size_bits == 42 && c.bandwidth_bps == 9));
        assert!(generate_catalog(0, (1, 2), (1, 2), 1).is_err());
        assert!(generate_catalog(3, (5, 2), (1, 2), 1).is_err());
    }

    #[test]
    fn demand_totals_and_errors() {
        let (profiles, demand) = generate_demand(100, &[4, 5, 6], 10, 0, 3).unwrap();
        assert!(profiles.is_empty());
        assert_eq!(demand.total(), 0);
        let (profiles, demand) = generate_demand(100, &[4, 5, 6], 10, 100, 3).unwrap();
        assert_eq!(profiles.len(), 100);
        assert_eq!(demand.total(), 100);
        assert!(demand.entries().all(|(_, a, _)| (4..=6).contains(&a)));
        assert!(generate_demand(100, &[], 10, 1, 3).is_err());
        assert!(generate_demand(100, &[], 10, 0, 3).is_ok());
    }

    #[test]
    fn smaller_request_counts_are_prefixes() {
        let (small, _) = generate_demand(50, &[4, 5], 10, 20, 11).unwrap();
        let (large, _) = generate_demand(50, &[4, 5], 10, 60, 11).unwrap();
        assert_eq!(small[..], large[..20]);
    }

    #[test]
    fn popular_share_is_eighty_percent() {
        let mut popular_hits = 0usize;
        let mut total = 0usize;
        for seed in 0..200 {
            let (profiles, _) = generate_demand(100, &[4, 5, 6, 7], 10, 100, seed).unwrap();
            popular_hits += profiles.iter().filter(|u| u.content < 20).count();
            total += profiles.len();
        }
        let share = popular_hits as f64 / total as f64;
        // 20000 Bernoulli(0.8) draws: std is about 0.0028
        assert!((share - 0.8).abs() < 0.015, "share {share}");
    }

    #[test]
    fn perturbation_extremes_and_rate() {
        let (profiles, predicted) = generate_demand(100, &[4, 5], 10, 1000, 5).unwrap();
        let (_, same) = perturb_prediction(&profiles, 100, 10, 1.0, 9).unwrap();
        assert_eq!(same, predicted);
        let (actual, _) = perturb_prediction(&profiles, 100, 10, 0.0, 9).unwrap();
        assert!(actual.iter().zip(&profiles).all(|(a, p)| a.content != p.content && a.ar == p.ar));

        let (many, _) = generate_demand(100, &[4, 5], 10, 10_000, 5).unwrap();
        let (actual, _) = perturb_prediction(&many, 100, 10, 0.5, 21).unwrap();
        let matched = actual.iter().zip(&many).filter(|(a, p)| a.content == p.content).count();
        let rate = matched as f64 / many.len() as f64;
        assert!((rate - 0.5).abs() <= 0.02, "rate {rate}");
        assert!(perturb_prediction(&many, 100, 10, 1.5, 0).is_err());
    }

    #[test]
    fn lower_accuracy_only_adds_mispredictions() {
        let (profiles, _) = generate_demand(100, &[4, 5], 10, 500, 2).unwrap();
        let (high, _) = perturb_prediction(&profiles, 100, 10, 0.8, 4).unwrap();
        let (low, _) = perturb_prediction(&profiles, 100, 10, 0.4, 4).unwrap();
        for ((p, h), l) in profiles.iter().zip(&high).zip(&low) {
            if h.content != p.content {
                assert_eq!(l.content, h.content);
            }
        }
    }

    #[test]
    fn stream_seeds_are_stable_and_distinct() {
        assert_eq!(stream_seed(1, &[2, 3]), stream_seed(1, &[2, 3]));
        assert_ne!(stream_seed(1, &[2, 3]), stream_seed(1, &[3, 2]));
        assert_ne!(stream_seed(1, &[0]), stream_seed(2, &[0]));
    }
}
