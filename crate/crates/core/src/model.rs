//! Solution evaluation: state-of-charge recursion, the time and cost
//! objectives, the full constraint check and the penalized scalar fitness.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, NodeId};
use crate::pareto::Point2;

/// Charge fractions at or below this are transits (`z_i = 0`).
pub const CHARGE_THRESHOLD: f64 = 1e-9;
/// Slack allowed on every state-of-charge bound.
pub const SOC_TOL: f64 = 1e-6;
/// Base fitness of any candidate that breaks a constraint.
pub const INFEASIBLE_PENALTY: f64 = 1e9;

/// Trip time (hours) and charging cost.
pub type Objectives = Point2;

/// A route `S -> path[0] -> ... -> path[k] -> D` with the fraction of
/// battery capacity added at each charging stop.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RouteSolution {
    pub path: Vec<NodeId>,
    #[serde(default)]
    pub charge: BTreeMap<NodeId, f64>,
}

impl RouteSolution {
    pub fn transit(path: Vec<NodeId>) -> Self {
        RouteSolution {
            path,
            charge: BTreeMap::new(),
        }
    }

    pub fn with_charge(mut self, node: NodeId, y: f64) -> Self {
        self.charge.insert(node, y);
        self
    }

    /// Charge fraction added at `node` (0 for transits).
    pub fn charge_at(&self, node: NodeId) -> f64 {
        self.charge.get(&node).copied().unwrap_or(0.0)
    }

    /// The `z_i` indicator.
    pub fn charges_at(&self, node: NodeId) -> bool {
        self.charge_at(node) > CHARGE_THRESHOLD
    }

    pub fn stops(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.path.iter().copied().filter(|&n| self.charges_at(n))
    }
}

/// State of charge along a route, indexed by path position.
#[derive(Debug, Clone, PartialEq)]
pub struct SocTrace {
    /// SOC on arrival, after the detour to the charger.
    pub arrival: Vec<f64>,
    /// SOC on departure (`q_i`).
    pub departure: Vec<f64>,
    /// SOC left on reaching `D`.
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stop {
    Node(NodeId),
    Destination,
}

impl fmt::Display for Stop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stop::Node(n) => write!(f, "node {n}"),
            Stop::Destination => f.write_str("destination"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteError {
    #[error("empty path")]
    EmptyPath,
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("node {0} is visited more than once")]
    RepeatedNode(NodeId),
    #[error("no edge ({from}, {to})")]
    MissingEdge { from: NodeId, to: NodeId },
    #[error("node {0} is not reachable from the source")]
    NotFromSource(NodeId),
    #[error("destination is not reachable from node {0}")]
    NotToDestination(NodeId),
    #[error("charge planned at node {0}, which is off the path")]
    ChargeOffPath(NodeId),
    #[error("charge {y} at node {node} outside [0, 1]")]
    ChargeOutOfRange { node: NodeId, y: f64 },
    #[error("battery depleted before reaching {at} (soc {soc})")]
    Depleted { at: Stop, soc: f64 },
    #[error("battery overcharged at node {node} (soc {soc})")]
    Overcharged { node: NodeId, soc: f64 },
}

/// Leg lengths of a structurally valid path: `legs[t]` leads into
/// `path[t]`, `to_dest` leaves the last node.
struct Legs {
    legs: Vec<f64>,
    to_dest: f64,
}

fn structure(inst: &Instance, sol: &RouteSolution) -> Result<Legs, RouteError> {
    let n = inst.node_count();
    let path = &sol.path;
    let (&first, &last) = match (path.first(), path.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(RouteError::EmptyPath),
    };
    let mut seen = vec![false; n];
    for &v in path {
        if v >= n {
            return Err(RouteError::UnknownNode(v));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(RouteError::RepeatedNode(v));
        }
    }
    if let Some(&k) = sol.charge.keys().find(|&&k| k >= n || !seen[k]) {
        return Err(if k >= n {
            RouteError::UnknownNode(k)
        } else {
            RouteError::ChargeOffPath(k)
        });
    }
    let g = &inst.graph;
    let mut legs = Vec::with_capacity(path.len());
    legs.push(*g.source_dist.get(&first).ok_or(RouteError::NotFromSource(first))?);
    for w in path.windows(2) {
        legs.push(
            g.edge_km(w[0], w[1])
                .ok_or(RouteError::MissingEdge { from: w[0], to: w[1] })?,
        );
    }
    let to_dest = *g.dest_dist.get(&last).ok_or(RouteError::NotToDestination(last))?;
    Ok(Legs { legs, to_dest })
}

/// Runs the SOC recursion without judging it.
///
/// Arrival at a charging stop includes its detour; the charge is then added
/// on top of the arrival level.
pub fn soc_profile(inst: &Instance, sol: &RouteSolution) -> Result<SocTrace, RouteError> {
    let legs = structure(inst, sol)?;
    let range = inst.params.range_km();
    let mut q = inst.params.initial_soc;
    let mut arrival = Vec::with_capacity(sol.path.len());
    let mut departure = Vec::with_capacity(sol.path.len());
    for (&node, &leg) in sol.path.iter().zip(&legs.legs) {
        let z = sol.charges_at(node);
        let detour = if z { inst.station(node).detour_km } else { 0.0 };
        let a = q - (detour + leg) / range;
        q = if z { a + sol.charge_at(node) } else { a };
        arrival.push(a);
        departure.push(q);
    }
    let beta = q - legs.to_dest / range;
    Ok(SocTrace {
        arrival,
        departure,
        beta,
    })
}

/// SOC recursion plus the reachability and capacity checks; fails at the
/// first stop where the battery runs dry or overflows.
pub fn soc_trace(inst: &Instance, sol: &RouteSolution) -> Result<SocTrace, RouteError> {
    let trace = soc_profile(inst, sol)?;
    for (t, &node) in sol.path.iter().enumerate() {
        if trace.arrival[t] < -SOC_TOL {
            return Err(RouteError::Depleted {
                at: Stop::Node(node),
                soc: trace.arrival[t],
            });
        }
        if trace.departure[t] > 1.0 + SOC_TOL {
            return Err(RouteError::Overcharged {
                node,
                soc: trace.departure[t],
            });
        }
    }
    if trace.beta < -SOC_TOL {
        return Err(RouteError::Depleted {
            at: Stop::Destination,
            soc: trace.beta,
        });
    }
    Ok(trace)
}

/// Objective values from the route formulas alone, feasible or not.
pub fn objectives_unchecked(inst: &Instance, sol: &RouteSolution) -> Result<Objectives, RouteError> {
    let legs = structure(inst, sol)?;
    let p = &inst.params;
    let driven: f64 = legs.legs.iter().sum::<f64>() + legs.to_dest;
    let mut time = driven / p.speed;
    let mut cost = 0.0;
    for node in sol.stops() {
        let s = inst.station(node);
        let y = sol.charge_at(node);
        time += s.detour_km / p.speed + s.wait_h + y * p.capacity / s.power_kw;
        cost += y * p.capacity * s.price;
    }
    Ok(Objectives::new(time, cost))
}

pub fn evaluate(inst: &Instance, sol: &RouteSolution) -> Result<Objectives, RouteError> {
    soc_trace(inst, sol)?;
    if let Some((&node, &y)) = sol.charge.iter().find(|(_, y)| !(0.0..=1.0).contains(*y)) {
        return Err(RouteError::ChargeOutOfRange { node, y });
    }
    objectives_unchecked(inst, sol)
}

/// Kilometres driven, counting detours at charging stops.
pub fn driven_km(inst: &Instance, sol: &RouteSolution) -> Result<f64, RouteError> {
    let legs = structure(inst, sol)?;
    let detours: f64 = sol.stops().map(|n| inst.station(n).detour_km).sum();
    Ok(legs.legs.iter().sum::<f64>() + legs.to_dest + detours)
}

/// Constraint labels. Model constraints are reported as `c3`..`c19`; the
/// remaining checks exist only because of the route representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintId {
    /// The source is left exactly once.
    SourceOutDegree,
    /// The destination is entered exactly once.
    DestinationInDegree,
    /// Every station is entered at most once.
    InDegree,
    /// Every station is left at most once.
    OutDegree,
    /// Flow conservation; also raised for legs that are not edges.
    ValidPath,
    /// Arrival charge follows from the previous departure charge and the leg.
    SocLink,
    /// Arrival charge at the first station follows from the initial charge.
    SocSource,
    /// Charge left at `D` follows from the last departure charge.
    SocDestination,
    /// Each leg is drivable on the charge held when departing.
    Reachability,
    /// No station links to itself.
    NoSelfLoop,
    /// Charge is bought only at visited stations, in `[0, 1]`.
    ChargeBounds,
    /// Arrival and departure charges stay in `[0, 1]`.
    SocBounds,
    /// Charge left at `D` stays in `[0, 1]`.
    FinalSocBounds,
    /// Source selections are binary.
    SourceBinary,
    /// Destination selections are binary.
    DestinationBinary,
    /// Charging decisions are binary.
    ChargeBinary,
    /// Edge selections are binary.
    EdgeBinary,
    /// The first leg out of `S` must be drivable on the initial charge.
    SourceReachability,
    UnknownNode,
    ChargeOffPath,
}

impl ConstraintId {
    /// Numeric report label `k` of `ck`, for the model constraints.
    pub fn number(self) -> Option<u8> {
        use ConstraintId::*;
        Some(match self {
            SourceOutDegree => 3,
            DestinationInDegree => 4,
            InDegree => 5,
            OutDegree => 6,
            ValidPath => 7,
            SocLink => 8,
            SocSource => 9,
            SocDestination => 10,
            Reachability => 11,
            NoSelfLoop => 12,
            ChargeBounds => 13,
            SocBounds => 14,
            FinalSocBounds => 15,
            SourceBinary => 16,
            DestinationBinary => 17,
            ChargeBinary => 18,
            EdgeBinary => 19,
            SourceReachability | UnknownNode | ChargeOffPath => return None,
        })
    }

    /// Whether the check concerns battery levels rather than route shape.
    pub fn is_energy(self) -> bool {
        use ConstraintId::*;
        matches!(
            self,
            SocLink | SocSource | SocDestination | Reachability | SocBounds | FinalSocBounds | SourceReachability
        )
    }
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.number(), self) {
            (Some(k), _) => write!(f, "c{k}"),
            (None, ConstraintId::SourceReachability) => f.write_str("source-reachability"),
            (None, ConstraintId::UnknownNode) => f.write_str("unknown-node"),
            (None, _) => f.write_str("charge-off-path"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Location {
    Route,
    Node(NodeId),
    Edge(NodeId, NodeId),
    Destination,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Route => f.write_str("route"),
            Location::Node(n) => write!(f, "{n}"),
            Location::Edge(i, j) => write!(f, "{i}->{j}"),
            Location::Destination => f.write_str("D"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintViolation {
    pub constraint: ConstraintId,
    pub at: Location,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintReport {
    pub violations: Vec<ConstraintViolation>,
}

impl ConstraintReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn total_magnitude(&self) -> f64 {
        self.violations.iter().map(|v| v.magnitude).sum()
    }

    pub fn ids(&self) -> BTreeSet<ConstraintId> {
        self.violations.iter().map(|v| v.constraint).collect()
    }

    fn push(&mut self, constraint: ConstraintId, at: Location, magnitude: f64) {
        self.violations.push(ConstraintViolation {
            constraint,
            at,
            magnitude,
        });
    }
}

/// Rebuilds the model variables implied by `sol` and checks every
/// constraint, reporting each violation with its size.
///
/// Edge usage counts every consecutive pair of the path. Battery
/// constraints are only meaningful on a well-shaped route, so they are
/// checked once the route constraints hold.
pub fn check_feasible(inst: &Instance, sol: &RouteSolution) -> ConstraintReport {
    use ConstraintId::*;
    let mut report = ConstraintReport::default();
    let n = inst.node_count();
    let g = &inst.graph;

    let unknown: BTreeSet<NodeId> = sol
        .path
        .iter()
        .chain(sol.charge.keys())
        .copied()
        .filter(|&v| v >= n)
        .collect();
    if !unknown.is_empty() {
        for v in unknown {
            report.push(UnknownNode, Location::Node(v), 1.0);
        }
        return report;
    }

    let path = &sol.path;
    let from_source = path.first().filter(|f| g.source_dist.contains_key(f));
    let to_dest = path.last().filter(|l| g.dest_dist.contains_key(l));
    if from_source.is_none() {
        report.push(SourceOutDegree, Location::Route, 1.0);
    }
    if to_dest.is_none() {
        report.push(DestinationInDegree, Location::Route, 1.0);
    }

    let mut uses: BTreeMap<(NodeId, NodeId), usize> = BTreeMap::new();
    for w in path.windows(2) {
        *uses.entry((w[0], w[1])).or_default() += 1;
    }
    let mut indeg = vec![0usize; n];
    let mut outdeg = vec![0usize; n];
    for (&(i, j), &x) in &uses {
        outdeg[i] += x;
        indeg[j] += x;
        if i == j {
            report.push(NoSelfLoop, Location::Node(i), x as f64);
        }
        if x > 1 {
            report.push(EdgeBinary, Location::Edge(i, j), (x - 1) as f64);
        }
        if g.edge_km(i, j).is_none() {
            report.push(ValidPath, Location::Edge(i, j), x as f64);
        }
    }
    let on_path: BTreeSet<NodeId> = path.iter().copied().collect();
    for &v in &on_path {
        if indeg[v] > 1 {
            report.push(InDegree, Location::Node(v), (indeg[v] - 1) as f64);
        }
        if outdeg[v] > 1 {
            report.push(OutDegree, Location::Node(v), (outdeg[v] - 1) as f64);
        }
        let w_s = usize::from(from_source == Some(&v));
        let w_d = usize::from(to_dest == Some(&v));
        let imbalance = (indeg[v] + w_s).abs_diff(outdeg[v] + w_d);
        if imbalance > 0 {
            report.push(ValidPath, Location::Node(v), imbalance as f64);
        }
    }

    for (&v, &y) in &sol.charge {
        if !on_path.contains(&v) {
            report.push(ChargeOffPath, Location::Node(v), 1.0);
        }
        let excess = if y.is_nan() {
            1.0
        } else if y < 0.0 {
            -y
        } else if y > 1.0 {
            y - 1.0
        } else {
            0.0
        };
        if excess > 0.0 {
            report.push(ChargeBounds, Location::Node(v), excess);
        }
    }

    let route_ok = report
        .violations
        .iter()
        .all(|v| matches!(v.constraint, ChargeBounds | ChargeOffPath));
    if route_ok {
        check_energy(inst, sol, &mut report);
    }
    report
}

fn check_energy(inst: &Instance, sol: &RouteSolution, report: &mut ConstraintReport) {
    use ConstraintId::*;
    let g = &inst.graph;
    let p = &inst.params;
    let range = p.range_km();
    let path = &sol.path;

    let mut q_prev = p.initial_soc;
    for (t, &j) in path.iter().enumerate() {
        let leg = if t == 0 {
            g.source_dist[&j]
        } else {
            g.edge_km(path[t - 1], j).expect("route checked")
        };
        let z = sol.charges_at(j);
        let zy = if z { sol.charge_at(j) } else { 0.0 };
        let need = ((if z { inst.station(j).detour_km } else { 0.0 }) + leg) / range;
        let shortfall = need - q_prev;
        if shortfall > SOC_TOL {
            if t == 0 {
                report.push(SourceReachability, Location::Node(j), shortfall);
            } else {
                report.push(Reachability, Location::Edge(path[t - 1], j), shortfall);
            }
        }
        let q = (q_prev - need) + zy;
        // The recursion defines q, so the link equalities hold up to rounding.
        let residual = ((q - q_prev) - (zy - need)).abs();
        if residual > SOC_TOL {
            let id = if t == 0 { SocSource } else { SocLink };
            report.push(id, Location::Node(j), residual);
        }
        if q < -SOC_TOL {
            report.push(SocBounds, Location::Node(j), -q);
        } else if q > 1.0 + SOC_TOL {
            report.push(SocBounds, Location::Node(j), q - 1.0);
        }
        q_prev = q;
    }
    let last = *path.last().expect("route checked");
    let beta = q_prev - g.dest_dist[&last] / range;
    if beta < -SOC_TOL {
        report.push(FinalSocBounds, Location::Destination, -beta);
    } else if beta > 1.0 + SOC_TOL {
        report.push(FinalSocBounds, Location::Destination, beta - 1.0);
    }
}

/// Nonnegative scalarization weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub time: f64,
    pub cost: f64,
}

impl Weights {
    /// Equal weights summing to one.
    pub const NORMALIZED: Weights = Weights { time: 0.5, cost: 0.5 };
    /// Plain sum of the two objectives.
    pub const RAW_SUM: Weights = Weights { time: 1.0, cost: 1.0 };
    pub const TIME: Weights = Weights { time: 1.0, cost: 0.0 };
    pub const COST: Weights = Weights { time: 0.0, cost: 1.0 };

    pub fn new(time: f64, cost: f64) -> Result<Self, String> {
        let w = Weights { time, cost };
        w.check()?;
        Ok(w)
    }

    pub fn check(&self) -> Result<(), String> {
        let ok = |x: f64| x >= 0.0 && x.is_finite();
        if !ok(self.time) || !ok(self.cost) || self.time + self.cost == 0.0 {
            return Err(format!(
                "weights must be nonnegative and not both zero, got ({}, {})",
                self.time, self.cost
            ));
        }
        Ok(())
    }

    pub fn apply(&self, obj: &Objectives) -> f64 {
        self.time * obj.time_h + self.cost * obj.cost
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights::NORMALIZED
    }
}

/// Weighted objective for feasible solutions; `1e9` plus the summed
/// violation sizes otherwise, so infeasible candidates still rank.
pub fn penalized_fitness(inst: &Instance, sol: &RouteSolution, weights: Weights) -> f64 {
    let report = check_feasible(inst, sol);
    if !report.is_feasible() {
        return INFEASIBLE_PENALTY + report.total_magnitude();
    }
    match evaluate(inst, sol) {
        Ok(obj) => weights.apply(&obj),
        Err(_) => INFEASIBLE_PENALTY,
    }
}

/// Flat record written by the `evaluate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub time_h: Option<f64>,
    pub cost: Option<f64>,
    pub beta: Option<f64>,
    pub feasible: bool,
    pub violations: Vec<ViolationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub constraint: String,
    pub at: String,
    pub magnitude: f64,
}

pub fn evaluation_record(inst: &Instance, sol: &RouteSolution) -> EvaluationRecord {
    let report = check_feasible(inst, sol);
    let obj = objectives_unchecked(inst, sol).ok();
    let beta = soc_profile(inst, sol).ok().map(|t| t.beta);
    EvaluationRecord {
        time_h: obj.map(|o| o.time_h),
        cost: obj.map(|o| o.cost),
        beta,
        feasible: report.is_feasible(),
        violations: report
            .violations
            .iter()
            .map(|v| ViolationRecord {
                constraint: v.constraint.to_string(),
                at: v.at.to_string(),
                magnitude: v.magnitude,
            })
            .collect(),
    }
}
