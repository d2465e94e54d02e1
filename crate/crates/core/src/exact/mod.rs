//! Exact single-objective optima and bi-objective fronts.
//!
//! Every route is a path of the layered DAG, so the solver enumerates the
//! paths, and for each path every subset of charging stops. With the stops
//! fixed, both objectives and all battery constraints are affine in the
//! charge amounts, which leaves a small linear program per subset.

pub mod lp;
mod oracle;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, NodeId, RouteGraph};
use crate::model::{self, Objectives, RouteSolution, Weights, CHARGE_THRESHOLD};
use crate::pareto::filter_nondominated;
use lp::{LinearProgram, LpOutcome, Relation};

pub use oracle::{grid_oracle, DEFAULT_ORACLE_CAP};

pub const DEFAULT_PATH_CAP: usize = 1_000_000;
/// Objective values closer than this are ties.
pub const TIE_TOL: f64 = 1e-9;
/// Relative slack on the primary objective while breaking its ties.
const LEX_SLACK: f64 = 1e-12;
/// Longest path for which charging subsets are enumerated.
pub const MAX_PATH_LEN: usize = 20;
/// Number of budget steps used when the step is chosen automatically.
pub const AUTO_STEPS: f64 = 20.0;

#[derive(Debug, Error, PartialEq)]
pub enum ExactError {
    #[error("more than {cap} S->D paths")]
    PathCap { cap: usize },
    #[error("path of {len} stations is too long to enumerate charging subsets")]
    PathTooLong { len: usize },
    #[error("no route can be driven: {0}")]
    Infeasible(String),
    #[error("oracle would evaluate {needed} plans, over the cap of {cap}")]
    OracleCap { needed: u128, cap: u128 },
    #[error("budget step must be positive, got {0}")]
    BadStep(f64),
}

/// Every `S -> D` path in lexicographic order of node ids.
pub fn enumerate_paths(graph: &RouteGraph, cap: usize) -> Result<Vec<Vec<NodeId>>, ExactError> {
    fn walk(
        g: &RouteGraph,
        stack: &mut Vec<NodeId>,
        out: &mut Vec<Vec<NodeId>>,
        cap: usize,
    ) -> Result<(), ExactError> {
        let v = *stack.last().unwrap();
        if g.dest_dist.contains_key(&v) {
            if out.len() == cap {
                return Err(ExactError::PathCap { cap });
            }
            out.push(stack.clone());
        }
        for e in g.successors(v) {
            stack.push(e.to);
            walk(g, stack, out, cap)?;
            stack.pop();
        }
        Ok(())
    }

    let mut out = Vec::new();
    for &s in graph.source_dist.keys() {
        walk(graph, &mut vec![s], &mut out, cap)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    Time,
    Cost,
    Weighted(Weights),
}

impl Objective {
    pub fn value(&self, obj: &Objectives) -> f64 {
        match self {
            Objective::Time => obj.time_h,
            Objective::Cost => obj.cost,
            Objective::Weighted(w) => w.apply(obj),
        }
    }

    fn weights(&self) -> Weights {
        match self {
            Objective::Time => Weights::TIME,
            Objective::Cost => Weights::COST,
            Objective::Weighted(w) => *w,
        }
    }
}

/// Upper bound on the objective that is not being minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Budget {
    Cost(f64),
    Time(f64),
}

impl Budget {
    fn admits(&self, obj: &Objectives) -> bool {
        match *self {
            Budget::Cost(b) => obj.cost <= b + TIE_TOL,
            Budget::Time(b) => obj.time_h <= b + TIE_TOL,
        }
    }
}

/// Which objective the budget sweep minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SweepDirection {
    /// Minimize time under a tightening cost budget.
    #[default]
    TimeUnderCost,
    /// Minimize cost under a tightening time budget.
    CostUnderTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub objectives: Objectives,
    pub solution: RouteSolution,
}

/// Mutually nondominated points, ascending in time and so strictly
/// descending in cost.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub points: Vec<FrontPoint>,
}

impl ParetoFront {
    pub fn from_candidates(candidates: Vec<FrontPoint>) -> Self {
        let tagged = candidates.into_iter().map(|p| (p.objectives, p.solution)).collect();
        ParetoFront {
            points: filter_nondominated(tagged)
                .into_iter()
                .map(|(objectives, solution)| FrontPoint { objectives, solution })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn objectives(&self) -> Vec<Objectives> {
        self.points.iter().map(|p| p.objectives).collect()
    }
}

/// A path with its leg lengths: `legs[t]` leads into `nodes[t]`.
#[derive(Debug, Clone)]
struct PathModel {
    nodes: Vec<NodeId>,
    legs: Vec<f64>,
    to_dest: f64,
    drive_km: f64,
}

impl PathModel {
    fn new(inst: &Instance, nodes: Vec<NodeId>) -> Result<Self, ExactError> {
        let g = &inst.graph;
        let missing = |what: String| ExactError::Infeasible(format!("path {nodes:?} uses missing {what}"));
        let first = *nodes.first().ok_or_else(|| missing("first node".into()))?;
        let mut legs = vec![*g.source_dist.get(&first).ok_or_else(|| missing(format!("source leg to {first}")))?];
        for w in nodes.windows(2) {
            legs.push(g.edge_km(w[0], w[1]).ok_or_else(|| missing(format!("edge ({}, {})", w[0], w[1])))?);
        }
        let last = *nodes.last().unwrap();
        let to_dest = *g.dest_dist.get(&last).ok_or_else(|| missing(format!("destination leg from {last}")))?;
        let drive_km = legs.iter().sum::<f64>() + to_dest;
        Ok(PathModel {
            nodes,
            legs,
            to_dest,
            drive_km,
        })
    }
}

/// One (path, charging subset) pair with the data for cheap lower bounds.
#[derive(Debug, Clone)]
struct Candidate {
    path: usize,
    mask: u32,
    /// Position in the canonical tie-break order.
    key: (u32, usize, usize),
    /// Driving plus detour and waiting time of the stops.
    fixed_time: f64,
    /// Charge (fraction of capacity) that must be bought in total.
    deficit: f64,
    /// Cheapest charging hours per unit of charge among the stops.
    min_hours: f64,
    /// Cheapest price per unit of charge among the stops.
    min_price: f64,
}

impl Candidate {
    fn lower_time(&self) -> f64 {
        self.fixed_time + self.deficit * self.min_hours
    }

    fn lower_cost(&self) -> f64 {
        self.deficit * self.min_price
    }

    fn lower(&self, objective: &Objective) -> f64 {
        let w = objective.weights();
        // Zero weights must not turn an infinite bound into NaN.
        let part = |k: f64, v: f64| if k == 0.0 { 0.0 } else { k * v };
        part(w.time, self.lower_time()) + part(w.cost, self.lower_cost())
    }
}

/// Subsets of `0..len` ordered by size, then lexicographically by member
/// positions.
fn subset_order(len: usize) -> Vec<u32> {
    let mut masks: Vec<u32> = (0..1u32 << len).collect();
    let members = |m: u32| (0..len).filter(|&t| m >> t & 1 == 1).collect::<Vec<_>>();
    masks.sort_by_key(|&m| (m.count_ones(), members(m)));
    masks
}

/// Best plan found so far; replaced only by a strictly better value or by
/// an equal value that comes earlier in the canonical order.
#[derive(Debug, Clone)]
struct Best {
    value: f64,
    key: (u32, usize, usize),
    objectives: Objectives,
    solution: RouteSolution,
}

fn offer(best: &mut Option<Best>, cand: Best) {
    let replace = match best {
        None => true,
        Some(b) => cand.value < b.value - TIE_TOL || (cand.value <= b.value + TIE_TOL && cand.key < b.key),
    };
    if replace {
        *best = Some(cand);
    }
}

/// Path-and-subset enumeration over one instance, reused across the many
/// single-objective solves of a front computation.
pub struct ExactSolver<'a> {
    inst: &'a Instance,
    paths: Vec<PathModel>,
    candidates: Vec<Candidate>,
    by_time: Vec<usize>,
    by_cost: Vec<usize>,
}

impl<'a> ExactSolver<'a> {
    pub fn new(inst: &'a Instance) -> Result<Self, ExactError> {
        Self::with_cap(inst, DEFAULT_PATH_CAP)
    }

    pub fn with_cap(inst: &'a Instance, cap: usize) -> Result<Self, ExactError> {
        let paths = enumerate_paths(&inst.graph, cap)?
            .into_iter()
            .map(|p| PathModel::new(inst, p))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_paths(inst, paths)
    }

    /// Solver restricted to a single path.
    fn for_path(inst: &'a Instance, path: &[NodeId]) -> Result<Self, ExactError> {
        Self::from_paths(inst, vec![PathModel::new(inst, path.to_vec())?])
    }

    fn from_paths(inst: &'a Instance, paths: Vec<PathModel>) -> Result<Self, ExactError> {
        let p = &inst.params;
        let range = p.range_km();
        let mut orders: Vec<Option<Vec<u32>>> = vec![None; MAX_PATH_LEN + 1];
        let mut candidates = Vec::new();
        for (pi, pm) in paths.iter().enumerate() {
            let len = pm.nodes.len();
            if len > MAX_PATH_LEN {
                return Err(ExactError::PathTooLong { len });
            }
            let order = orders[len].get_or_insert_with(|| subset_order(len));
            for (rank, &mask) in order.iter().enumerate() {
                let stops: Vec<usize> = (0..len).filter(|&t| mask >> t & 1 == 1).collect();
                let stations = stops.iter().map(|&t| inst.station(pm.nodes[t]));
                let detour: f64 = stations.clone().map(|s| s.detour_km).sum();
                let deficit = ((pm.drive_km + detour) / range - p.initial_soc).max(0.0);
                if deficit > stops.len() as f64 + TIE_TOL {
                    continue;
                }
                // Everything before the first stop runs on the initial charge.
                let first = stops.first().copied().unwrap_or(len);
                let mut before: f64 = pm.legs[..first].iter().sum();
                before += if first == len { pm.to_dest } else { inst.station(pm.nodes[first]).detour_km };
                if before / range > p.initial_soc + model::SOC_TOL {
                    continue;
                }
                let fixed_time = pm.drive_km / p.speed
                    + stations.clone().map(|s| s.detour_km / p.speed + s.wait_h).sum::<f64>();
                let min_hours = stations
                    .clone()
                    .map(|s| p.capacity / s.power_kw)
                    .fold(f64::INFINITY, f64::min);
                let min_price = stations.map(|s| p.capacity * s.price).fold(f64::INFINITY, f64::min);
                let (min_hours, min_price) = if stops.is_empty() { (0.0, 0.0) } else { (min_hours, min_price) };
                candidates.push(Candidate {
                    path: pi,
                    mask,
                    key: (mask.count_ones(), pi, rank),
                    fixed_time,
                    deficit,
                    min_hours,
                    min_price,
                });
            }
        }
        let mut by_time: Vec<usize> = (0..candidates.len()).collect();
        by_time.sort_by(|&a, &b| {
            candidates[a]
                .lower_time()
                .total_cmp(&candidates[b].lower_time())
                .then(candidates[a].key.cmp(&candidates[b].key))
        });
        let mut by_cost: Vec<usize> = (0..candidates.len()).collect();
        by_cost.sort_by(|&a, &b| {
            candidates[a]
                .lower_cost()
                .total_cmp(&candidates[b].lower_cost())
                .then(candidates[a].key.cmp(&candidates[b].key))
        });
        Ok(ExactSolver {
            inst,
            paths,
            candidates,
            by_time,
            by_cost,
        })
    }

    pub fn instance(&self) -> &Instance {
        self.inst
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    pub fn paths(&self) -> impl Iterator<Item = &[NodeId]> {
        self.paths.iter().map(|p| p.nodes.as_slice())
    }

    /// Exact charge allocation for one (path, stop subset) pair.
    fn solve_candidate(&self, c: &Candidate, objective: &Objective, budget: Option<Budget>) -> Option<Best> {
        let inst = self.inst;
        let p = &inst.params;
        let range = p.range_km();
        let pm = &self.paths[c.path];
        let len = pm.nodes.len();
        let stops: Vec<usize> = (0..len).filter(|&t| c.mask >> t & 1 == 1).collect();
        let m = stops.len();
        let w = objective.weights();
        let hours: Vec<f64> = stops.iter().map(|&t| p.capacity / inst.station(pm.nodes[t]).power_kw).collect();
        let prices: Vec<f64> = stops.iter().map(|&t| p.capacity * inst.station(pm.nodes[t]).price).collect();
        let coeffs = (0..m).map(|k| w.time * hours[k] + w.cost * prices[k]).collect();
        let mut lp = LinearProgram::minimize(coeffs);

        // Cumulative energy use (fraction of capacity) up to each arrival.
        let mut used = 0.0;
        let mut bought_before = 0; // stops strictly before position t
        for t in 0..len {
            let charging = c.mask >> t & 1 == 1;
            let detour = if charging { inst.station(pm.nodes[t]).detour_km } else { 0.0 };
            used += (pm.legs[t] + detour) / range;
            let need = used - p.initial_soc;
            if need > 0.0 {
                if bought_before == 0 {
                    return None;
                }
                let row = (0..m).map(|k| if k < bought_before { 1.0 } else { 0.0 }).collect();
                lp.add(row, Relation::Ge, need);
            }
            if charging {
                let row = (0..m).map(|k| if k <= bought_before { 1.0 } else { 0.0 }).collect();
                lp.add(row, Relation::Le, 1.0 - p.initial_soc + used);
                bought_before += 1;
            }
        }
        let need = used + pm.to_dest / range - p.initial_soc;
        if need > 0.0 {
            if m == 0 {
                return None;
            }
            lp.add(vec![1.0; m], Relation::Ge, need);
        }
        for k in 0..m {
            let mut row = vec![0.0; m];
            row[k] = 1.0;
            lp.add(row, Relation::Le, 1.0);
        }
        match budget {
            Some(Budget::Cost(b)) => {
                lp.add(prices.clone(), Relation::Le, b);
            }
            Some(Budget::Time(b)) => {
                lp.add(hours.clone(), Relation::Le, b - c.fixed_time);
            }
            None => {}
        }

        let y = if m == 0 {
            Vec::new()
        } else {
            match lp.solve() {
                LpOutcome::Optimal { x, .. } => x,
                _ => return None,
            }
        };
        let mut solution = RouteSolution::transit(pm.nodes.clone());
        for (k, &t) in stops.iter().enumerate() {
            let v = y[k].clamp(0.0, 1.0);
            if v > CHARGE_THRESHOLD {
                solution.charge.insert(pm.nodes[t], v);
            }
        }
        let objectives = model::evaluate(inst, &solution).ok()?;
        if budget.is_some_and(|b| !b.admits(&objectives)) {
            return None;
        }
        Some(Best {
            value: objective.value(&objectives),
            key: c.key,
            objectives,
            solution,
        })
    }

    fn best(&self, objective: Objective, budget: Option<Budget>) -> Option<Best> {
        let weighted_order;
        let order: &[usize] = match objective {
            Objective::Time => &self.by_time,
            Objective::Cost => &self.by_cost,
            Objective::Weighted(_) => {
                let mut o: Vec<usize> = (0..self.candidates.len()).collect();
                o.sort_by(|&a, &b| {
                    let (ca, cb) = (&self.candidates[a], &self.candidates[b]);
                    ca.lower(&objective).total_cmp(&cb.lower(&objective)).then(ca.key.cmp(&cb.key))
                });
                weighted_order = o;
                &weighted_order
            }
        };
        let mut best: Option<Best> = None;
        for &ci in order {
            let c = &self.candidates[ci];
            if let Some(b) = &best {
                if c.lower(&objective) > b.value + TIE_TOL {
                    break;
                }
            }
            let hopeless = match budget {
                Some(Budget::Cost(b)) => c.lower_cost() > b + TIE_TOL,
                Some(Budget::Time(b)) => c.lower_time() > b + TIE_TOL,
                None => false,
            };
            if hopeless {
                continue;
            }
            if let Some(found) = self.solve_candidate(c, &objective, budget) {
                offer(&mut best, found);
            }
        }
        best
    }

    fn infeasible(&self) -> ExactError {
        if self.paths.is_empty() {
            return ExactError::Infeasible("the graph has no S -> D path".into());
        }
        ExactError::Infeasible(describe_uncrossable(self.inst))
    }

    /// Scalar optimum, optionally under a budget on the other objective.
    pub fn optimize(&self, objective: Objective, budget: Option<Budget>) -> Option<FrontPoint> {
        self.best(objective, budget).map(|b| FrontPoint {
            objectives: b.objectives,
            solution: b.solution,
        })
    }

    /// Minimizes `primary`; among (near) ties, minimizes the other objective.
    fn lexicographic(&self, primary: Axis, budget: Option<Budget>) -> Option<FrontPoint> {
        let first = self.best(primary.objective(), budget)?;
        // Far below TIE_TOL, so the tie-break cannot visibly trade away the primary.
        let limit = primary.budget(first.value + LEX_SLACK * first.value.abs().max(1.0));
        let second = self.best(primary.other().objective(), Some(limit));
        let chosen = match second {
            Some(s) if s.objectives.cost <= first.objectives.cost + TIE_TOL || primary == Axis::Cost => s,
            _ => first,
        };
        Some(FrontPoint {
            objectives: chosen.objectives,
            solution: chosen.solution,
        })
    }

    pub fn min_time(&self) -> Result<FrontPoint, ExactError> {
        self.lexicographic(Axis::Time, None).ok_or_else(|| self.infeasible())
    }

    pub fn min_cost(&self) -> Result<FrontPoint, ExactError> {
        self.lexicographic(Axis::Cost, None).ok_or_else(|| self.infeasible())
    }

    /// Minimum time whose cost stays within `budget` (lexicographic in cost).
    pub fn min_time_within_cost(&self, budget: f64) -> Option<FrontPoint> {
        self.lexicographic(Axis::Time, Some(Budget::Cost(budget)))
    }

    pub fn min_cost_within_time(&self, budget: f64) -> Option<FrontPoint> {
        self.lexicographic(Axis::Cost, Some(Budget::Time(budget)))
    }

    pub fn weighted_optimum(&self, weights: Weights) -> Result<FrontPoint, ExactError> {
        self.optimize(Objective::Weighted(weights), None).ok_or_else(|| self.infeasible())
    }

    /// Budget sweep: start at the optimum of the swept objective, then
    /// repeatedly tighten the budget on the other objective by `step` and
    /// re-solve until the budget falls below that objective's own optimum.
    /// `None` picks a step of one twentieth of the objective range.
    pub fn epsilon_constraint(&self, step: Option<f64>, direction: SweepDirection) -> Result<ParetoFront, ExactError> {
        let (primary, lead, tail) = match direction {
            SweepDirection::TimeUnderCost => (Axis::Time, self.min_time()?, self.min_cost()?),
            SweepDirection::CostUnderTime => (Axis::Cost, self.min_cost()?, self.min_time()?),
        };
        let budgeted = primary.other();
        let top = budgeted.of(&lead.objectives);
        let floor = budgeted.of(&tail.objectives);
        let range = top - floor;
        let step = match step {
            Some(s) if !(s > 0.0 && s.is_finite()) => return Err(ExactError::BadStep(s)),
            Some(s) => s,
            None => range / AUTO_STEPS,
        };

        let mut points = vec![lead];
        if range > TIE_TOL && step > 0.0 {
            for k in 1.. {
                let eps = top - k as f64 * step;
                // A budget at the floor itself only re-finds the tail point.
                if eps < floor + TIE_TOL {
                    break;
                }
                match self.lexicographic(primary, Some(budgeted.budget(eps))) {
                    Some(p) => points.push(p),
                    None => break,
                }
            }
        }
        points.push(tail);
        Ok(ParetoFront::from_candidates(points))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    Time,
    Cost,
}

impl Axis {
    fn other(self) -> Axis {
        match self {
            Axis::Time => Axis::Cost,
            Axis::Cost => Axis::Time,
        }
    }

    fn objective(self) -> Objective {
        match self {
            Axis::Time => Objective::Time,
            Axis::Cost => Objective::Cost,
        }
    }

    fn budget(self, limit: f64) -> Budget {
        match self {
            Axis::Time => Budget::Time(limit),
            Axis::Cost => Budget::Cost(limit),
        }
    }

    fn of(self, o: &Objectives) -> f64 {
        match self {
            Axis::Time => o.time_h,
            Axis::Cost => o.cost,
        }
    }
}

/// Names the first leg no charge plan can cover.
fn describe_uncrossable(inst: &Instance) -> String {
    let p = &inst.params;
    let range = p.range_km();
    let g = &inst.graph;
    for (&i, &d) in &g.source_dist {
        let best_detour: f64 = inst.station(i).detour_km.min(0.0);
        if (d + best_detour) / range > p.initial_soc + model::SOC_TOL {
            continue;
        }
        return match g.edges().iter().find(|e| e.km + inst.station(e.to).detour_km.min(0.0) > range) {
            Some(e) => format!("leg {} -> {} is {:.1} km, longer than the {:.1} km range", e.from, e.to, e.km, range),
            None => match g.dest_dist.iter().find(|(_, &d)| d > range) {
                Some((j, d)) => format!("leg {j} -> D is {d:.1} km, longer than the {range:.1} km range"),
                None => "no path admits a feasible charge plan".to_string(),
            },
        };
    }
    let (i, d) = g
        .source_dist
        .iter()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, d)| (*i, *d))
        .unwrap_or((0, f64::NAN));
    format!(
        "leg S -> {i} is {d:.1} km, beyond the {:.1} km initial range",
        p.initial_soc * range
    )
}

/// Best charge plan on a fixed path. Ties between stop subsets go to fewer
/// stops, then to the lexicographically smaller subset.
pub fn optimize_path(
    inst: &Instance,
    path: &[NodeId],
    objective: Objective,
    budget: Option<Budget>,
) -> Result<Option<FrontPoint>, ExactError> {
    Ok(ExactSolver::for_path(inst, path)?.optimize(objective, budget))
}

pub fn min_time(inst: &Instance) -> Result<FrontPoint, ExactError> {
    ExactSolver::new(inst)?.min_time()
}

pub fn min_cost(inst: &Instance) -> Result<FrontPoint, ExactError> {
    ExactSolver::new(inst)?.min_cost()
}

pub fn epsilon_constraint(inst: &Instance, step: Option<f64>) -> Result<ParetoFront, ExactError> {
    ExactSolver::new(inst)?.epsilon_constraint(step, SweepDirection::TimeUnderCost)
}

impl fmt::Display for FrontPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.4} h, {:.4})", self.objectives.time_h, self.objectives.cost)
    }
}
