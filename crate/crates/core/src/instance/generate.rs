use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ChargerLevel, Edge, Instance, NodeId, RouteGraph, Shape, Station, VehicleParams};

const DISTANCE_KM: (f64, f64) = (300.0, 50.0);
const WAIT_H: (f64, f64) = (1.0, 0.1);
const DETOUR_KM: (f64, f64) = (10.0, 1.0);
const PRICE: (f64, f64) = (0.134, 0.02);

const MIN_DISTANCE_KM: f64 = 1.0;
const MIN_PRICE: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum ShapeError {
    #[error("n_levels must be at least 1")]
    NoLevels,
    #[error("max_per_level must be at least 1")]
    EmptyLevels,
    #[error("p_edge must lie in [0, 1], got {0}")]
    EdgeProbability(f64),
    #[error("invalid vehicle parameters: {0}")]
    Params(String),
}

impl Shape {
    pub fn check(&self) -> Result<(), ShapeError> {
        if self.n_levels == 0 {
            return Err(ShapeError::NoLevels);
        }
        if self.max_per_level == 0 {
            return Err(ShapeError::EmptyLevels);
        }
        if !(0.0..=1.0).contains(&self.p_edge) {
            return Err(ShapeError::EdgeProbability(self.p_edge));
        }
        Ok(())
    }
}

/// Charging power (kW) assigned to each charger level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelPowers {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl Default for LevelPowers {
    fn default() -> Self {
        LevelPowers {
            l1: 7.0,
            l2: 22.0,
            l3: 50.0,
        }
    }
}

impl LevelPowers {
    pub fn power(&self, level: ChargerLevel) -> f64 {
        match level {
            ChargerLevel::L1 => self.l1,
            ChargerLevel::L2 => self.l2,
            ChargerLevel::L3 => self.l3,
        }
    }
}

/// The four benchmark shapes (2, 4, 6 and 8 layers).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Instance1,
    Instance2,
    Instance3,
    Instance4,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Instance1,
        Preset::Instance2,
        Preset::Instance3,
        Preset::Instance4,
    ];

    pub fn shape(self) -> Shape {
        match self {
            Preset::Instance1 => Shape::new(2, 8, 0.6),
            Preset::Instance2 => Shape::new(4, 5, 0.5),
            Preset::Instance3 => Shape::new(6, 6, 0.5),
            Preset::Instance4 => Shape::new(8, 5, 0.5),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = Preset::ALL.iter().position(|p| p == self).unwrap() + 1;
        write!(f, "instance{k}")
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "instance1" => Ok(Preset::Instance1),
            "instance2" => Ok(Preset::Instance2),
            "instance3" => Ok(Preset::Instance3),
            "instance4" => Ok(Preset::Instance4),
            _ => Err(format!("unknown preset `{s}` (expected instance1..instance4)")),
        }
    }
}

fn clamped_normal<R: Rng + ?Sized>(rng: &mut R, (mean, sd): (f64, f64), floor: f64) -> f64 {
    let d = Normal::new(mean, sd).expect("valid normal parameters");
    d.sample(rng).max(floor)
}

/// Random layered DAG.
///
/// Layer sizes are uniform in `[1, max_per_level]`. Each pair of nodes in
/// consecutive layers is joined with probability `p_edge`; a layer pair left
/// without edges receives one uniformly chosen edge. Distances are drawn
/// after the topology, in edge order, then for the source and destination
/// legs.
pub fn generate_graph<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> Result<RouteGraph, ShapeError> {
    shape.check()?;

    let mut levels: Vec<Vec<NodeId>> = Vec::with_capacity(shape.n_levels);
    let mut next_id = 0;
    for _ in 0..shape.n_levels {
        let size = rng.random_range(1..=shape.max_per_level);
        levels.push((next_id..next_id + size).collect());
        next_id += size;
    }

    let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
    for w in levels.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        let before = pairs.len();
        for &i in prev {
            for &j in cur {
                if rng.random::<f64>() < shape.p_edge {
                    pairs.push((i, j));
                }
            }
        }
        if pairs.len() == before {
            let i = prev[rng.random_range(0..prev.len())];
            let j = cur[rng.random_range(0..cur.len())];
            pairs.push((i, j));
        }
    }

    let edges: Vec<Edge> = pairs
        .into_iter()
        .map(|(from, to)| Edge {
            from,
            to,
            km: clamped_normal(rng, DISTANCE_KM, MIN_DISTANCE_KM),
        })
        .collect();
    let source_dist: BTreeMap<_, _> = levels[0]
        .iter()
        .map(|&i| (i, clamped_normal(rng, DISTANCE_KM, MIN_DISTANCE_KM)))
        .collect();
    let dest_dist: BTreeMap<_, _> = levels[shape.n_levels - 1]
        .iter()
        .map(|&i| (i, clamped_normal(rng, DISTANCE_KM, MIN_DISTANCE_KM)))
        .collect();

    Ok(RouteGraph::new(levels, edges, source_dist, dest_dist))
}

/// Seeded random instance. The same `(shape, params, powers, seed)` always
/// yields an identical instance.
pub fn generate_instance(
    shape: Shape,
    params: VehicleParams,
    powers: LevelPowers,
    seed: u64,
) -> Result<Instance, ShapeError> {
    if let Some(v) = params.violations().first() {
        return Err(ShapeError::Params(v.to_string()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = generate_graph(shape, &mut rng)?;
    let stations = (0..graph.node_count())
        .map(|id| {
            let level = ChargerLevel::ALL[rng.random_range(0..3)];
            let wait_h = clamped_normal(&mut rng, WAIT_H, 0.0);
            let detour_km = clamped_normal(&mut rng, DETOUR_KM, 0.0);
            let price = clamped_normal(&mut rng, PRICE, MIN_PRICE);
            Station {
                id,
                level,
                power_kw: powers.power(level),
                price,
                wait_h,
                detour_km,
            }
        })
        .collect();

    Ok(Instance {
        params,
        stations,
        graph,
        seed: Some(seed),
        shape: Some(shape),
    })
}
