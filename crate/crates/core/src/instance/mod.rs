//! Problem data: vehicle parameters, charging stations and the layered
//! route graph between the origin `S` and the destination `D`.
//!
//! Units are fixed across the crate: kilometres, hours, kWh and currency
//! units. State of charge is a fraction of battery capacity.

mod generate;
mod io;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use generate::{generate_graph, generate_instance, LevelPowers, Preset, ShapeError};
pub use io::{load, load_str, save, to_json, LoadError};

/// Dense node identifier, `0..|V|`.
pub type NodeId = usize;

/// Any tabulated distance at or above this value is read as "no edge".
pub const MISSING_EDGE_KM: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Average speed, km/h.
    #[serde(rename = "speed_v")]
    pub speed: f64,
    /// Battery capacity, kWh.
    #[serde(rename = "capacity_C")]
    pub capacity: f64,
    /// Mileage, km per kWh.
    #[serde(rename = "mileage_gamma")]
    pub mileage: f64,
    /// Initial state of charge at `S`.
    #[serde(rename = "initial_soc_alpha")]
    pub initial_soc: f64,
}

impl VehicleParams {
    /// Full-battery range in km.
    pub fn range_km(&self) -> f64 {
        self.capacity * self.mileage
    }
}

impl VehicleParams {
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        check_positive(&mut out, "speed_v", self.speed);
        check_positive(&mut out, "capacity_C", self.capacity);
        check_positive(&mut out, "mileage_gamma", self.mileage);
        if !(0.0..=1.0).contains(&self.initial_soc) {
            out.push(Violation::VehicleParam {
                field: "initial_soc_alpha",
                value: self.initial_soc,
            });
        }
        out
    }
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            speed: 50.0,
            capacity: 100.0,
            mileage: 6.0,
            initial_soc: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChargerLevel {
    L1,
    L2,
    L3,
}

impl ChargerLevel {
    pub const ALL: [ChargerLevel; 3] = [ChargerLevel::L1, ChargerLevel::L2, ChargerLevel::L3];
}

impl fmt::Display for ChargerLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChargerLevel::L1 => "L1",
            ChargerLevel::L2 => "L2",
            ChargerLevel::L3 => "L3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: NodeId,
    pub level: ChargerLevel,
    /// Charging power, kW.
    pub power_kw: f64,
    /// Price per kWh.
    pub price: f64,
    /// Expected waiting time, hours.
    pub wait_h: f64,
    /// Extra distance driven to reach the charger, km.
    pub detour_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(NodeId, NodeId, f64)", into = "(NodeId, NodeId, f64)")]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub km: f64,
}

impl From<(NodeId, NodeId, f64)> for Edge {
    fn from((from, to, km): (NodeId, NodeId, f64)) -> Self {
        Edge { from, to, km }
    }
}

impl From<Edge> for (NodeId, NodeId, f64) {
    fn from(e: Edge) -> Self {
        (e.from, e.to, e.km)
    }
}

/// Layered DAG of charging stations. `S` attaches to the first layer and
/// `D` to the last one.
///
/// Edges are kept sorted by `(from, to)` so lookups can binary search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawGraph")]
pub struct RouteGraph {
    pub levels: Vec<Vec<NodeId>>,
    edges: Vec<Edge>,
    pub source_dist: BTreeMap<NodeId, f64>,
    pub dest_dist: BTreeMap<NodeId, f64>,
}

#[derive(Deserialize)]
struct RawGraph {
    levels: Vec<Vec<NodeId>>,
    edges: Vec<Edge>,
    source_dist: BTreeMap<NodeId, f64>,
    dest_dist: BTreeMap<NodeId, f64>,
}

impl From<RawGraph> for RouteGraph {
    fn from(raw: RawGraph) -> Self {
        RouteGraph::new(raw.levels, raw.edges, raw.source_dist, raw.dest_dist)
    }
}

impl RouteGraph {
    pub fn new(
        levels: Vec<Vec<NodeId>>,
        mut edges: Vec<Edge>,
        source_dist: BTreeMap<NodeId, f64>,
        dest_dist: BTreeMap<NodeId, f64>,
    ) -> Self {
        edges.sort_by_key(|e| (e.from, e.to));
        RouteGraph {
            levels,
            edges,
            source_dist,
            dest_dist,
        }
    }

    /// Builds a graph from a dense distance matrix in which entries at or
    /// above [`MISSING_EDGE_KM`] (or non-finite) mean "no edge".
    pub fn from_matrix(
        levels: Vec<Vec<NodeId>>,
        matrix: &[Vec<f64>],
        source_dist: BTreeMap<NodeId, f64>,
        dest_dist: BTreeMap<NodeId, f64>,
    ) -> Self {
        let edges = matrix
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, d)| d.is_finite() && **d < MISSING_EDGE_KM)
                    .map(move |(j, &km)| Edge { from: i, to: j, km })
            })
            .collect();
        RouteGraph::new(levels, edges, source_dist, dest_dist)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// Number of the layer holding `node`, if any.
    pub fn layer_of(&self, node: NodeId) -> Option<usize> {
        self.levels.iter().position(|l| l.contains(&node))
    }

    pub fn first_layer(&self) -> &[NodeId] {
        self.levels.first().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn last_layer(&self) -> &[NodeId] {
        self.levels.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Outgoing edges of `node`, ascending by target id.
    pub fn successors(&self, node: NodeId) -> &[Edge] {
        let lo = self.edges.partition_point(|e| e.from < node);
        let hi = self.edges.partition_point(|e| e.from <= node);
        &self.edges[lo..hi]
    }

    pub fn edge_km(&self, from: NodeId, to: NodeId) -> Option<f64> {
        self.edges
            .binary_search_by_key(&(from, to), |e| (e.from, e.to))
            .ok()
            .map(|k| self.edges[k].km)
    }

    /// Removes the `(from, to)` edge, returning its length if it existed.
    pub fn remove_edge(&mut self, from: NodeId, to: NodeId) -> Option<f64> {
        let k = self
            .edges
            .binary_search_by_key(&(from, to), |e| (e.from, e.to))
            .ok()?;
        Some(self.edges.remove(k).km)
    }

    pub fn insert_edge(&mut self, edge: Edge) {
        let k = self.edges.partition_point(|e| (e.from, e.to) < (edge.from, edge.to));
        if self.edges.get(k).is_some_and(|e| (e.from, e.to) == (edge.from, edge.to)) {
            self.edges[k] = edge;
        } else {
            self.edges.insert(k, edge);
        }
    }

    /// True when some `S -> ... -> D` walk exists.
    pub fn has_route(&self) -> bool {
        let n = self
            .edges
            .iter()
            .flat_map(|e| [e.from, e.to])
            .chain(self.source_dist.keys().copied())
            .chain(self.dest_dist.keys().copied())
            .max()
            .map_or(0, |m| m + 1);
        let mut seen = vec![false; n];
        let mut stack: Vec<NodeId> = self.source_dist.keys().copied().collect();
        while let Some(v) = stack.pop() {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if self.dest_dist.contains_key(&v) {
                return true;
            }
            stack.extend(self.successors(v).iter().map(|e| e.to).filter(|&t| !seen[t]));
        }
        false
    }
}

/// Generation shape: number of layers, maximum layer size and edge
/// probability between consecutive layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub n_levels: usize,
    pub max_per_level: usize,
    pub p_edge: f64,
}

impl Shape {
    pub fn new(n_levels: usize, max_per_level: usize, p_edge: f64) -> Self {
        Shape {
            n_levels,
            max_per_level,
            p_edge,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub params: VehicleParams,
    /// Indexed by node id.
    pub stations: Vec<Station>,
    pub graph: RouteGraph,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub shape: Option<Shape>,
}

impl Instance {
    /// Assembles a hand-built instance without generation metadata.
    pub fn from_parts(params: VehicleParams, stations: Vec<Station>, graph: RouteGraph) -> Self {
        Instance {
            params,
            stations,
            graph,
            seed: None,
            shape: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.stations.len()
    }

    pub fn station(&self, id: NodeId) -> &Station {
        &self.stations[id]
    }

    /// Lists every broken invariant. An empty list means the instance is
    /// well formed and at least one `S -> D` route exists.
    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }
}

/// A broken instance invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    VehicleParam { field: &'static str, value: f64 },
    StationIdMismatch { index: usize, id: NodeId },
    StationAttribute { id: NodeId, field: &'static str, value: f64 },
    NodeNotInGraph { id: NodeId },
    NodeInSeveralLayers { id: NodeId },
    UnknownNode { id: NodeId },
    EmptyLayer { layer: usize },
    /// Edge that does not run from an earlier layer to a strictly later one.
    Acyclicity { from: NodeId, to: NodeId },
    DuplicateEdge { from: NodeId, to: NodeId },
    EdgeLength { from: NodeId, to: NodeId, km: f64 },
    SourceAttachment { id: NodeId },
    DestinationAttachment { id: NodeId },
    SourceDistance { id: NodeId, km: f64 },
    DestinationDistance { id: NodeId, km: f64 },
    /// No route links `S` to `D`.
    Connectivity,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            VehicleParam { field, value } => write!(f, "vehicle parameter `{field}` out of range: {value}"),
            StationIdMismatch { index, id } => write!(f, "station at index {index} has id {id}"),
            StationAttribute { id, field, value } => {
                write!(f, "station {id}: `{field}` out of range: {value}")
            }
            NodeNotInGraph { id } => write!(f, "station {id} is not placed in any layer"),
            NodeInSeveralLayers { id } => write!(f, "node {id} appears more than once in the layers"),
            UnknownNode { id } => write!(f, "node {id} has no station record"),
            EmptyLayer { layer } => write!(f, "layer {layer} is empty"),
            Acyclicity { from, to } => {
                write!(f, "acyclicity: edge ({from}, {to}) does not point to a later layer")
            }
            DuplicateEdge { from, to } => write!(f, "edge ({from}, {to}) listed more than once"),
            EdgeLength { from, to, km } => write!(f, "edge ({from}, {to}) has non-positive length {km}"),
            SourceAttachment { id } => write!(f, "source attached to node {id} outside the first layer"),
            DestinationAttachment { id } => {
                write!(f, "destination attached to node {id} outside the last layer")
            }
            SourceDistance { id, km } => write!(f, "source distance to {id} is non-positive: {km}"),
            DestinationDistance { id, km } => {
                write!(f, "destination distance from {id} is non-positive: {km}")
            }
            Connectivity => write!(f, "connectivity: no route from S to D"),
        }
    }
}

fn check_positive(out: &mut Vec<Violation>, field: &'static str, value: f64) {
    if !(value > 0.0 && value.is_finite()) {
        out.push(Violation::VehicleParam { field, value });
    }
}

fn validate(inst: &Instance) -> Vec<Violation> {
    let mut out = inst.params.violations();

    let n = inst.stations.len();
    for (index, s) in inst.stations.iter().enumerate() {
        if s.id != index {
            out.push(Violation::StationIdMismatch { index, id: s.id });
        }
        let attrs = [
            ("power_kw", s.power_kw, s.power_kw > 0.0),
            ("price", s.price, s.price >= 0.0),
            ("wait_h", s.wait_h, s.wait_h >= 0.0),
            ("detour_km", s.detour_km, s.detour_km >= 0.0),
        ];
        for (field, value, ok) in attrs {
            if !ok || !value.is_finite() {
                out.push(Violation::StationAttribute { id: s.id, field, value });
            }
        }
    }

    let g = &inst.graph;
    let mut layer = vec![None; n];
    for (k, level) in g.levels.iter().enumerate() {
        if level.is_empty() {
            out.push(Violation::EmptyLayer { layer: k });
        }
        for &id in level {
            match layer.get_mut(id) {
                None => out.push(Violation::UnknownNode { id }),
                Some(Some(_)) => out.push(Violation::NodeInSeveralLayers { id }),
                Some(slot) => *slot = Some(k),
            }
        }
    }
    for (id, l) in layer.iter().enumerate() {
        if l.is_none() {
            out.push(Violation::NodeNotInGraph { id });
        }
    }
    let layer_of = |id: NodeId| layer.get(id).copied().flatten();

    for pair in g.edges.windows(2) {
        if (pair[0].from, pair[0].to) == (pair[1].from, pair[1].to) {
            out.push(Violation::DuplicateEdge {
                from: pair[0].from,
                to: pair[0].to,
            });
        }
    }
    for e in &g.edges {
        match (layer_of(e.from), layer_of(e.to)) {
            (Some(a), Some(b)) if a < b => {}
            (Some(_), Some(_)) => out.push(Violation::Acyclicity { from: e.from, to: e.to }),
            (a, b) => {
                if a.is_none() {
                    out.push(Violation::UnknownNode { id: e.from });
                }
                if b.is_none() {
                    out.push(Violation::UnknownNode { id: e.to });
                }
            }
        }
        if !(e.km > 0.0 && e.km.is_finite()) {
            out.push(Violation::EdgeLength {
                from: e.from,
                to: e.to,
                km: e.km,
            });
        }
    }

    let last = g.levels.len().saturating_sub(1);
    for (&id, &km) in &g.source_dist {
        if layer_of(id) != Some(0) {
            out.push(Violation::SourceAttachment { id });
        }
        if !(km > 0.0 && km.is_finite()) {
            out.push(Violation::SourceDistance { id, km });
        }
    }
    for (&id, &km) in &g.dest_dist {
        if layer_of(id) != Some(last) {
            out.push(Violation::DestinationAttachment { id });
        }
        if !(km > 0.0 && km.is_finite()) {
            out.push(Violation::DestinationDistance { id, km });
        }
    }

    let structurally_sound = !out.iter().any(|v| {
        matches!(
            v,
            Violation::UnknownNode { .. } | Violation::NodeInSeveralLayers { .. }
        )
    });
    if structurally_sound && !g.has_route() {
        out.push(Violation::Connectivity);
    }
    out
}
