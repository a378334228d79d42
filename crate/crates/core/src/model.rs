//! Integer programs for multicast (P1) and unicast (P2) delivery, the
//! [`Solution`] type every algorithm returns, and constraint verification.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::energy::{energy_breakdown, EnergyBreakdown, FlowKey, Mode, Placement, Routing};
use crate::error::{Error, Result};
use crate::scalar::{common_weights, parse_decimal, Rational};
use crate::scenario::Instance;
use crate::topology::{NodeId, Role, SERVER};

/// Integer cost weights: an energy in joules equals
/// `(cache * cached_bits + hop * bit_hops) / denom`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostWeights {
    pub cache: i128,
    pub hop: i128,
    pub denom: i128,
}

impl CostWeights {
    pub fn from_instance(instance: &Instance) -> Result<Self> {
        let p = &instance.params;
        let (cache, hop, denom) = common_weights(p.alpha * p.epoch, p.beta)?;
        Ok(CostWeights { cache, hop, denom })
    }

    pub fn caching(&self, size_bits: u64) -> i128 {
        self.cache * size_bits as i128
    }

    pub fn transmission(&self, size_bits: u64, hops: usize) -> i128 {
        self.hop * size_bits as i128 * hops as i128
    }

    pub fn to_joules(&self, units: i128) -> Rational {
        Rational::new(units, self.denom)
    }

    pub fn to_joules_f64(&self, units: i128) -> f64 {
        units as f64 / self.denom as f64
    }
}

/// Constraint families of the two programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    /// Cached bits fit the node budget.
    #[serde(rename = "3b")]
    Storage,
    /// Flow bandwidth fits the link.
    #[serde(rename = "3c")]
    Capacity,
    /// P1: a path may only start at a node caching the content.
    #[serde(rename = "3d")]
    Hosting,
    /// P2: flows from a node are bounded by `M` when it caches the content.
    #[serde(rename = "4b")]
    HostingBigM,
    /// P1: no routing without demand.
    #[serde(rename = "3e")]
    NoDemand,
    /// P1: exactly one delivery path per demanded (content, AR).
    #[serde(rename = "3f")]
    OnePath,
    /// P2: flows match the request count.
    #[serde(rename = "4c")]
    DemandMatch,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::Storage => "3b",
            Family::Capacity => "3c",
            Family::Hosting => "3d",
            Family::HostingBigM => "4b",
            Family::NoDemand => "3e",
            Family::OnePath => "3f",
            Family::DemandMatch => "4c",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Cache { content: usize, node: NodeId },
    Route(FlowKey),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub kind: VarKind,
    /// Upper bound: 1 for binaries, `None` for unbounded integers.
    pub upper: Option<i128>,
    /// Objective coefficient in units of `1 / weights.denom` joules.
    pub cost: i128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub family: Family,
    pub label: String,
    pub terms: Vec<(usize, i128)>,
    pub sense: Sense,
    pub rhs: i128,
}

impl Row {
    fn holds(&self, values: &[i128]) -> bool {
        let lhs: i128 = self.terms.iter().map(|&(v, c)| c * values[v]).sum();
        match self.sense {
            Sense::Le => lhs <= self.rhs,
            Sense::Eq => lhs == self.rhs,
        }
    }
}

/// An explicit integer program over `x` (cache) and `y` (route) variables.
#[derive(Debug, Clone)]
pub struct IlpModel {
    pub mode: Mode,
    pub instance: Instance,
    pub weights: CostWeights,
    pub variables: Vec<Variable>,
    pub rows: Vec<Row>,
    /// Big-M of the P2 hosting rows.
    pub big_m: Option<i128>,
    route_index: HashMap<FlowKey, usize>,
}

impl IlpModel {
    pub fn rows_of(&self, family: Family) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.family == family)
    }

    pub fn cache_var_count(&self) -> usize {
        self.variables.iter().filter(|v| matches!(v.kind, VarKind::Cache { .. })).count()
    }

    pub fn route_var_count(&self) -> usize {
        self.variables.iter().filter(|v| matches!(v.kind, VarKind::Route(_))).count()
    }

    pub fn route_var(&self, key: &FlowKey) -> Option<usize> {
        self.route_index.get(key).copied()
    }

    fn cache_var(&self, content: usize, node: NodeId) -> usize {
        let caching = self.instance.network.node_count() - 1;
        content * caching + node - 1
    }

    /// Objective in integer units for an assignment of every variable.
    pub fn objective_units(&self, values: &[i128]) -> i128 {
        self.variables.iter().zip(values).map(|(v, &x)| v.cost * x).sum()
    }

    /// Variable values of a placement and routing. Flows that have no
    /// matching variable are returned separately.
    pub fn values_of(&self, placement: &Placement, routing: &Routing) -> (Vec<i128>, Vec<FlowKey>) {
        let mut values = vec![0i128; self.variables.len()];
        for (n, e) in placement.pairs() {
            if n < self.instance.catalog.len() && e != SERVER && e < self.instance.network.node_count()
            {
                values[self.cache_var(n, e)] = 1;
            }
        }
        let mut unknown = Vec::new();
        for (key, count) in routing.iter() {
            match self.route_var(key) {
                Some(v) => values[v] = i128::from(count),
                None => unknown.push(*key),
            }
        }
        (values, unknown)
    }

    /// CPLEX LP text of the model, objective in units of `1/denom` joules.
    pub fn to_lp(&self) -> String {
        let name = |v: &Variable| match v.kind {
            VarKind::Cache { content, node } => format!("x_{content}_{node}"),
            VarKind::Route(k) => format!("y_{}_{}_{}_{}", k.content, k.ar, k.node, k.path),
        };
        let terms = |out: &mut String, terms: &mut dyn Iterator<Item = (String, i128)>| {
            let mut first = true;
            for (var, coeff) in terms {
                let sign = if coeff < 0 { "-" } else if first { "" } else { "+" };
                let _ = write!(out, " {sign} {} {var}", coeff.abs());
                first = false;
            }
            if first {
                out.push_str(" 0");
            }
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "\\ {} energy model; objective unit = 1/{} J",
            self.mode, self.weights.denom
        );
        out.push_str("Minimize\n obj:");
        terms(
            &mut out,
            &mut self.variables.iter().filter(|v| v.cost != 0).map(|v| (name(v), v.cost)),
        );
        out.push_str("\nSubject To\n");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, " c{i}_{}:", row.family.tag());
            terms(
                &mut out,
                &mut row.terms.iter().map(|&(v, c)| (name(&self.variables[v]), c)),
            );
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs);
        }
        out.push_str("Binary\n");
        for v in self.variables.iter().filter(|v| v.upper == Some(1)) {
            let _ = writeln!(out, " {}", name(v));
        }
        if self.mode == Mode::P2 {
            out.push_str("General\n");
            for v in self.variables.iter().filter(|v| v.upper.is_none()) {
                let _ = writeln!(out, " {}", name(v));
            }
        }
        out.push_str("End\n");
        out
    }
}

/// Multicast program: binary `x`, binary `y`.
pub fn build_p1(instance: &Instance) -> Result<IlpModel> {
    build(instance, Mode::P1)
}

/// Unicast program: binary `x`, integer `y >= 0`, big-M equal to the total
/// request count.
pub fn build_p2(instance: &Instance) -> Result<IlpModel> {
    build(instance, Mode::P2)
}

pub fn build_model(instance: &Instance, mode: Mode) -> Result<IlpModel> {
    build(instance, mode)
}

fn build(instance: &Instance, mode: Mode) -> Result<IlpModel> {
    let weights = CostWeights::from_instance(instance)?;
    let net = &instance.network;
    let table = &instance.paths;
    let demand = &instance.predicted;
    let contents = instance.catalog.len();
    let nodes = net.node_count();

    let mut variables = Vec::new();
    for (n, content) in instance.catalog.iter().enumerate() {
        for e in net.caching_nodes() {
            variables.push(Variable {
                kind: VarKind::Cache { content: n, node: e },
                upper: Some(1),
                cost: weights.caching(content.size_bits),
            });
        }
    }
    let route_upper = match mode {
        Mode::P1 => Some(1),
        Mode::P2 => None,
    };
    let mut route_index = HashMap::new();
    for (n, content) in instance.catalog.iter().enumerate() {
        for &a in table.ars() {
            for e in 0..nodes {
                for (p, path) in table.paths(a, e).iter().enumerate() {
                    let key = FlowKey { content: n, ar: a, node: e, path: p };
                    route_index.insert(key, variables.len());
                    variables.push(Variable {
                        kind: VarKind::Route(key),
                        upper: route_upper,
                        cost: weights.transmission(content.size_bits, path.hops()),
                    });
                }
            }
        }
    }
    let caching = nodes - 1;
    let cache_var = |n: usize, e: NodeId| n * caching + e - 1;
    let route_vars = |n: usize, a: NodeId| {
        (0..nodes).flat_map(move |e| {
            (0..table.paths(a, e).len()).map(move |p| FlowKey { content: n, ar: a, node: e, path: p })
        })
    };

    let mut rows = Vec::new();
    for e in net.caching_nodes() {
        rows.push(Row {
            family: Family::Storage,
            label: format!("e={e}"),
            terms: (0..contents)
                .map(|n| (cache_var(n, e), instance.catalog[n].size_bits as i128))
                .collect(),
            sense: Sense::Le,
            rhs: net.storage(e) as i128,
        });
    }
    let mut link_terms: Vec<Vec<(usize, i128)>> = vec![Vec::new(); net.link_count()];
    for (&key, &var) in &route_index {
        let path = &table.paths(key.ar, key.node)[key.path];
        for &l in &path.links {
            link_terms[l].push((var, instance.catalog[key.content].bandwidth_bps as i128));
        }
    }
    for (l, mut terms) in link_terms.into_iter().enumerate() {
        terms.sort_unstable();
        rows.push(Row {
            family: Family::Capacity,
            label: format!("l={l}"),
            terms,
            sense: Sense::Le,
            rhs: net.link(l).capacity_bps as i128,
        });
    }
    let big_m = match mode {
        Mode::P1 => None,
        Mode::P2 => Some(i128::from(demand.total().min(i64::MAX as u64) as i64)),
    };
    for n in 0..contents {
        for &a in table.ars() {
            for key in route_vars(n, a) {
                if key.node == SERVER {
                    continue;
                }
                let (family, coeff) = match big_m {
                    None => (Family::Hosting, -1),
                    Some(m) => (Family::HostingBigM, -m),
                };
                rows.push(Row {
                    family,
                    label: format!("n={n},a={a},e={},p={}", key.node, key.path),
                    terms: vec![(route_index[&key], 1), (cache_var(n, key.node), coeff)],
                    sense: Sense::Le,
                    rhs: 0,
                });
            }
        }
    }
    for n in 0..contents {
        for &a in table.ars() {
            let lambda = i128::from(demand.get(n, a));
            let terms: Vec<(usize, i128)> = route_vars(n, a).map(|k| (route_index[&k], 1)).collect();
            let label = format!("n={n},a={a}");
            match mode {
                Mode::P1 => {
                    rows.push(Row {
                        family: Family::NoDemand,
                        label: label.clone(),
                        terms: terms.clone(),
                        sense: Sense::Le,
                        rhs: lambda,
                    });
                    if lambda > 0 {
                        rows.push(Row { family: Family::OnePath, label, terms, sense: Sense::Eq, rhs: 1 });
                    }
                }
                Mode::P2 => rows.push(Row {
                    family: Family::DemandMatch,
                    label,
                    terms,
                    sense: Sense::Eq,
                    rhs: lambda,
                }),
            }
        }
    }
    Ok(IlpModel { mode, instance: instance.clone(), weights, variables, rows, big_m, route_index })
}

/// Outcome class of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Certified minimum.
    Optimal,
    /// Feasible assignment without an optimality certificate.
    FeasibleWithGap,
    /// Proven that no assignment satisfies every constraint.
    Infeasible,
    /// Limits ran out before any feasible assignment was found.
    Unknown,
}

impl Status {
    pub fn has_solution(self) -> bool {
        matches!(self, Status::Optimal | Status::FeasibleWithGap)
    }
}

/// Placement, routing and energy produced by any algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub mode: Mode,
    pub placement: Placement,
    pub routing: Routing,
    #[serde(with = "breakdown_serde")]
    pub energy: EnergyBreakdown<Rational>,
    pub status: Status,
    #[serde(with = "opt_rational_serde", default)]
    pub lower_bound: Option<Rational>,
    #[serde(default)]
    pub gap: Option<f64>,
    /// Flows routed over links without enough residual capacity.
    #[serde(default)]
    pub overloaded_flows: u32,
    /// Search nodes or annealing proposals evaluated.
    #[serde(default)]
    pub work: u64,
}

impl Solution {
    /// Assemble a solution, computing its energy exactly.
    pub fn new(instance: &Instance, placement: Placement, routing: Routing, status: Status) -> Self {
        let energy = energy_breakdown(
            &placement,
            &routing,
            &instance.catalog,
            &instance.paths,
            &instance.params,
        );
        let lower_bound = (status == Status::Optimal).then_some(energy.total);
        let gap = (status == Status::Optimal).then_some(0.0);
        Solution {
            mode: routing.mode,
            placement,
            routing,
            energy,
            status,
            lower_bound,
            gap,
            overloaded_flows: 0,
            work: 0,
        }
    }

    /// Solution-less outcome (infeasible or unknown).
    pub fn without_assignment(instance: &Instance, mode: Mode, status: Status) -> Self {
        let placement = Placement::empty(instance.catalog.len(), instance.network.node_count());
        let mut s = Solution::new(instance, placement, Routing::new(mode), status);
        s.lower_bound = None;
        s.gap = None;
        s
    }

    pub fn total_joules(&self) -> f64 {
        self.energy.to_f64().total
    }
}

mod rational_text {
    use super::*;

    pub fn format(r: &Rational) -> String {
        format!("{}/{}", r.numer(), r.denom())
    }

    pub fn parse(text: &str) -> std::result::Result<Rational, String> {
        match text.split_once('/') {
            Some((n, d)) => {
                let n: i128 = n.trim().parse().map_err(|e| format!("{e}"))?;
                let d: i128 = d.trim().parse().map_err(|e| format!("{e}"))?;
                if d == 0 {
                    return Err("zero denominator".into());
                }
                Ok(Rational::new(n, d))
            }
            None => parse_decimal(text).map_err(|e| e.to_string()),
        }
    }
}

mod opt_rational_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref().map(rational_text::format).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| rational_text::parse(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

mod breakdown_serde {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Doc {
        caching: String,
        transmission: String,
        total: String,
        total_joules: f64,
    }

    pub fn serialize<S: Serializer>(
        v: &EnergyBreakdown<Rational>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        Doc {
            caching: rational_text::format(&v.caching),
            transmission: rational_text::format(&v.transmission),
            total: rational_text::format(&v.total),
            total_joules: v.to_f64().total,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<EnergyBreakdown<Rational>, D::Error> {
        let doc = Doc::deserialize(d)?;
        let parse = |t: &str| rational_text::parse(t).map_err(serde::de::Error::custom);
        Ok(EnergyBreakdown {
            caching: parse(&doc.caching)?,
            transmission: parse(&doc.transmission)?,
            total: parse(&doc.total)?,
        })
    }
}

/// Pass/fail of one constraint family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCheck {
    /// Family tag (`3b`, `4c`, ...) or `domain` / `energy`.
    pub family: String,
    pub passed: bool,
    pub violations: usize,
    pub first_violation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub mode: Mode,
    pub checks: Vec<FamilyCheck>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, family: &str) -> Option<&FamilyCheck> {
        self.checks.iter().find(|c| c.family == family)
    }

    pub fn passed(&self, family: &str) -> bool {
        self.check(family).is_some_and(|c| c.passed)
    }

    /// Every family passes, except that link capacity may be exceeded when
    /// the solution itself reports overloaded flows.
    pub fn passes_with_flagged_overload(&self, solution: &Solution) -> bool {
        self.checks.iter().all(|c| {
            c.passed || (c.family == Family::Capacity.tag() && solution.overloaded_flows > 0)
        })
    }

    pub fn failures(&self) -> Vec<&FamilyCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let verdict = if c.passed { "pass" } else { "FAIL" };
            write!(f, "{:<7} {verdict}", c.family)?;
            if let Some(first) = &c.first_violation {
                write!(f, "  ({} violations, first: {first})", c.violations)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Check a solution against every constraint of the program for `mode`
/// and recompute its energy.
pub fn verify(solution: &Solution, instance: &Instance, mode: Mode) -> Result<VerifyReport> {
    let model = build_model(instance, mode)?;
    let mut checks = Vec::new();

    let mut domain = Vec::new();
    let placement = &solution.placement;
    if placement.contents() != instance.catalog.len()
        || placement.nodes() != instance.network.node_count()
    {
        domain.push(format!(
            "placement is {}x{}, instance is {}x{}",
            placement.contents(),
            placement.nodes(),
            instance.catalog.len(),
            instance.network.node_count()
        ));
    }
    if solution.routing.mode != mode {
        domain.push(format!("routing is tagged {} but {mode} was requested", solution.routing.mode));
    }
    let (values, unknown) = model.values_of(placement, &solution.routing);
    for key in &unknown {
        domain.push(format!(
            "flow n={},a={},e={},p={} has no candidate path",
            key.content, key.ar, key.node, key.path
        ));
    }
    if mode == Mode::P1 {
        for (key, count) in solution.routing.iter().filter(|(_, c)| *c > 1) {
            domain.push(format!(
                "binary flow n={},a={},e={},p={} carries {count}",
                key.content, key.ar, key.node, key.path
            ));
        }
    }
    for (key, _) in solution.routing.iter() {
        if key.ar >= instance.network.node_count() || instance.network.role(key.ar) != Role::Ar {
            domain.push(format!("flow n={} starts at non-AR node {}", key.content, key.ar));
        }
    }
    checks.push(FamilyCheck {
        family: "domain".into(),
        passed: domain.is_empty(),
        violations: domain.len(),
        first_violation: domain.first().cloned(),
    });

    let families: &[Family] = match mode {
        Mode::P1 => &[Family::Storage, Family::Capacity, Family::Hosting, Family::NoDemand, Family::OnePath],
        Mode::P2 => &[Family::Storage, Family::Capacity, Family::HostingBigM, Family::DemandMatch],
    };
    for &family in families {
        let failing: Vec<&Row> = model.rows_of(family).filter(|r| !r.holds(&values)).collect();
        checks.push(FamilyCheck {
            family: family.tag().into(),
            passed: failing.is_empty(),
            violations: failing.len(),
            first_violation: failing.first().map(|r| r.label.clone()),
        });
    }

    let energy_issue = if unknown.is_empty() && domain.is_empty() {
        let recomputed = energy_breakdown(
            placement,
            &solution.routing,
            &instance.catalog,
            &instance.paths,
            &instance.params,
        );
        let objective = model.weights.to_joules(model.objective_units(&values));
        if recomputed != solution.energy {
            Some(format!(
                "stored total {} J, recomputed {} J",
                solution.energy.to_f64().total,
                recomputed.to_f64().total
            ))
        } else if objective != recomputed.total {
            Some("objective disagrees with the energy breakdown".to_string())
        } else {
            None
        }
    } else {
        Some("energy not recomputed: invalid variables".to_string())
    };
    checks.push(FamilyCheck {
        family: "energy".into(),
        passed: energy_issue.is_none(),
        violations: usize::from(energy_issue.is_some()),
        first_violation: energy_issue,
    });

    Ok(VerifyReport { mode, checks })
}

/// Convenience used by tests and the harness: verify and fail loudly.
pub fn ensure_verified(solution: &Solution, instance: &Instance) -> Result<()> {
    let report = verify(solution, instance, solution.mode)?;
    if report.passes_with_flagged_overload(solution) {
        Ok(())
    } else {
        Err(Error::MalformedModel(format!("solution failed verification:\n{report}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{three_node, three_node_network, three_node_on};

    fn cached_at_ar(instance: &Instance, mode: Mode, requests: u32) -> Solution {
        let mut placement = Placement::empty(1, 3);
        placement.set(0, 2, true);
        let mut routing = Routing::new(mode);
        routing.add(FlowKey { content: 0, ar: 2, node: 2, path: 0 }, mode.flows_for(requests));
        Solution::new(instance, placement, routing, Status::Optimal)
    }

    #[test]
    fn three_node_variable_counts_and_families() {
        let model = build_p1(&three_node(1)).unwrap();
        assert_eq!(model.cache_var_count(), 2);
        assert_eq!(model.route_var_count(), 3);
        for family in [Family::Storage, Family::Capacity, Family::Hosting, Family::NoDemand, Family::OnePath] {
            assert!(model.rows_of(family).count() > 0, "{family} missing");
        }
        assert_eq!(model.rows_of(Family::OnePath).count(), 1);
        assert_eq!(model.weights, CostWeights { cache: 5, hop: 8, denom: 200_000_000 });
    }

    #[test]
    fn unicast_demand_rows_match_requests() {
        let model = build_p2(&three_node(2)).unwrap();
        assert_eq!(model.big_m, Some(2));
        let rows: Vec<&Row> = model.rows_of(Family::DemandMatch).collect();
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].sense, rows[0].rhs, rows[0].terms.len()), (Sense::Eq, 2, 3));
        assert!(model.rows_of(Family::HostingBigM).all(|r| r.terms[1].1 == -2));
    }

    #[test]
    fn zero_demand_leaves_only_vacuous_rows() {
        let model = build_p1(&three_node(0)).unwrap();
        assert_eq!(model.rows_of(Family::OnePath).count(), 0);
        assert!(model.rows_of(Family::NoDemand).all(|r| r.rhs == 0));
        let values = vec![0; model.variables.len()];
        assert!(model.rows.iter().all(|r| r.holds(&values)));
        assert_eq!(model.objective_units(&values), 0);
    }

    #[test]
    fn every_ar_with_demand_gets_one_path_row() {
        use crate::topology::{builtin_topology, TopologyKind};
        let net = builtin_topology(TopologyKind::Original10);
        let mut demand = crate::scenario::Demand::zeros(1, 10);
        for a in net.ars() {
            demand.set(0, a, 1);
        }
        let catalog = vec![crate::scenario::Content { size_bits: 1000, bandwidth_bps: 10 }];
        let instance =
            Instance::planned(net, 2, catalog, demand, crate::energy::EnergyParams::default()).unwrap();
        assert_eq!(build_p1(&instance).unwrap().rows_of(Family::OnePath).count(), 6);
    }

    #[test]
    fn optimal_three_node_solution_verifies() {
        for (mode, requests) in [(Mode::P1, 1), (Mode::P2, 2)] {
            let instance = three_node(requests);
            let solution = cached_at_ar(&instance, mode, requests);
            assert_eq!(solution.energy.total, Rational::from_integer(20));
            let report = verify(&solution, &instance, mode).unwrap();
            assert!(report.all_passed(), "{report}");
        }
    }

    #[test]
    fn storage_violation_is_reported() {
        let instance = three_node_on(three_node_network(1_000_000_000, 0, 1_000_000_000), 1);
        let mut placement = Placement::empty(1, 3);
        placement.set(0, 2, true);
        let mut routing = Routing::new(Mode::P1);
        routing.add(FlowKey { content: 0, ar: 2, node: 2, path: 0 }, 1);
        let solution = Solution::new(&instance, placement, routing, Status::FeasibleWithGap);
        let report = verify(&solution, &instance, Mode::P1).unwrap();
        assert!(!report.passed("3b"));
        assert_eq!(report.check("3b").unwrap().first_violation.as_deref(), Some("e=2"));
        assert!(report.passed("3d"));
    }

    #[test]
    fn serving_from_an_empty_node_is_reported() {
        for (mode, tag) in [(Mode::P1, "3d"), (Mode::P2, "4b")] {
            let instance = three_node(1);
            let mut routing = Routing::new(mode);
            routing.add(FlowKey { content: 0, ar: 2, node: 1, path: 0 }, 1);
            let solution = Solution::new(&instance, Placement::empty(1, 3), routing, Status::FeasibleWithGap);
            let report = verify(&solution, &instance, mode).unwrap();
            assert!(!report.passed(tag), "{report}");
            assert!(!report.all_passed());
        }
    }

    #[test]
    fn tampered_energy_and_unknown_paths_are_reported() {
        let instance = three_node(1);
        let mut solution = cached_at_ar(&instance, Mode::P1, 1);
        solution.energy.total = Rational::from_integer(19);
        assert!(!verify(&solution, &instance, Mode::P1).unwrap().passed("energy"));

        let mut routing = Routing::new(Mode::P1);
        routing.add(FlowKey { content: 0, ar: 2, node: 0, path: 5 }, 1);
        let bogus = Solution {
            routing,
            ..cached_at_ar(&instance, Mode::P1, 1)
        };
        let report = verify(&bogus, &instance, Mode::P1).unwrap();
        assert!(!report.passed("domain"));
    }

    #[test]
    fn capacity_overload_is_tolerated_only_when_flagged() {
        let instance = three_node_on(three_node_network(1_000_000_000, 1_000_000_000, 150_000_000), 2);
        let mut routing = Routing::new(Mode::P2);
        routing.add(FlowKey { content: 0, ar: 2, node: 0, path: 0 }, 2);
        let mut solution = Solution::new(&instance, Placement::empty(1, 3), routing, Status::FeasibleWithGap);
        let report = verify(&solution, &instance, Mode::P2).unwrap();
        assert!(!report.passed("3c"));
        assert!(!report.passes_with_flagged_overload(&solution));
        solution.overloaded_flows = 1;
        assert!(report.passes_with_flagged_overload(&solution));
    }

    #[test]
    fn solution_json_keeps_exact_energy() {
        let instance = three_node(1);
        let solution = cached_at_ar(&instance, Mode::P1, 1);
        let text = serde_json::to_string(&solution).unwrap();
        assert!(text.contains("\"total\":\"20/1\""));
        let back: Solution = serde_json::from_str(&text).unwrap();
        assert_eq!(back, solution);
    }

    #[test]
    fn lp_export_lists_every_variable() {
        let model = build_p2(&three_node(2)).unwrap();
        let lp = model.to_lp();
        assert!(lp.contains("\nMinimize\n"));
        assert!(lp.contains("\nGeneral\n y_0_2_0_0\n"));
        assert_eq!(lp.lines().filter(|l| l.starts_with(" c")).count(), model.rows.len());
        assert!(lp.trim_end().ends_with("End"));
    }
}
