//! Genetic algorithm and particle swarm search over a continuous genome
//! that decodes to a route and a charge plan.

mod diversity;
mod ga;
mod pso;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, NodeId};
use crate::model::{self, Objectives, RouteSolution, Weights, CHARGE_THRESHOLD, INFEASIBLE_PENALTY};

pub use diversity::{diversity, DiversityTracker};
pub use ga::{run_ga, GAConfig};
pub use pso::{run_pso, PSOConfig};

/// Genome of `n² + 3n` genes in `[0, 1]`: the successor scores `X` (row
/// major), the charge amounts `y`, then source and destination scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingVector {
    n: usize,
    values: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum EncodingError {
    #[error("genome for {n} nodes needs {expected} genes, got {got}")]
    Length { n: usize, expected: usize, got: usize },
    #[error("gene {index} is not a number")]
    NotANumber { index: usize },
}

impl EncodingVector {
    pub fn dim(n: usize) -> usize {
        n * n + 3 * n
    }

    /// Clamps every gene into `[0, 1]`.
    pub fn new(n: usize, mut values: Vec<f64>) -> Result<Self, EncodingError> {
        let expected = Self::dim(n);
        if values.len() != expected {
            return Err(EncodingError::Length {
                n,
                expected,
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| v.is_nan()) {
            return Err(EncodingError::NotANumber { index });
        }
        values.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        Ok(EncodingVector { n, values })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        EncodingVector {
            n,
            values: (0..Self::dim(n)).map(|_| rng.random::<f64>()).collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn successor_score(&self, from: NodeId, to: NodeId) -> f64 {
        self.values[from * self.n + to]
    }

    pub fn charge(&self, node: NodeId) -> f64 {
        self.values[self.n * self.n + node]
    }

    pub fn source_score(&self, node: NodeId) -> f64 {
        self.values[self.n * self.n + self.n + node]
    }

    pub fn destination_score(&self, node: NodeId) -> f64 {
        self.values[self.n * self.n + 2 * self.n + node]
    }

    pub(crate) fn from_raw(n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), Self::dim(n));
        EncodingVector { n, values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("genome sized for {genome} nodes, instance has {instance}")]
    SizeMismatch { genome: usize, instance: usize },
    #[error("node {0} has no way forward")]
    DeadEnd(NodeId),
    #[error("walk exceeded {0} steps")]
    StepLimit(usize),
}

/// First index of the largest score; `None` for an empty candidate set.
fn argmax(candidates: impl Iterator<Item = (NodeId, f64)>) -> Option<NodeId> {
    let mut best: Option<(NodeId, f64)> = None;
    for (id, s) in candidates {
        if best.is_none_or(|(b, bs)| s > bs || (s == bs && id < b)) {
            best = Some((id, s));
        }
    }
    best.map(|(id, _)| id)
}

/// Walks from the best-scored source to the best-scored destination,
/// greedily following the best-scored existing out-edge.
pub fn decode(inst: &Instance, v: &EncodingVector) -> Result<RouteSolution, DecodeError> {
    let n = inst.node_count();
    if v.n != n {
        return Err(DecodeError::SizeMismatch {
            genome: v.n,
            instance: n,
        });
    }
    let g = &inst.graph;
    let src = argmax(g.source_dist.keys().map(|&i| (i, v.source_score(i)))).ok_or(DecodeError::DeadEnd(0))?;
    let dst = argmax(g.dest_dist.keys().map(|&i| (i, v.destination_score(i)))).ok_or(DecodeError::DeadEnd(src))?;

    let mut path = vec![src];
    let mut curr = src;
    while curr != dst {
        if path.len() > n {
            return Err(DecodeError::StepLimit(n));
        }
        curr = argmax(g.successors(curr).iter().map(|e| (e.to, v.successor_score(curr, e.to))))
            .ok_or(DecodeError::DeadEnd(curr))?;
        path.push(curr);
    }
    let mut sol = RouteSolution::transit(path);
    for &i in &sol.path.clone() {
        let y = v.charge(i);
        if y >= CHARGE_THRESHOLD {
            sol.charge.insert(i, y);
        }
    }
    Ok(sol)
}

/// Penalty for a genome that does not decode to a route.
pub fn decode_failure_penalty(inst: &Instance) -> f64 {
    INFEASIBLE_PENALTY + inst.node_count() as f64
}

pub fn fitness(inst: &Instance, v: &EncodingVector, weights: Weights) -> f64 {
    match decode(inst, v) {
        Ok(sol) => model::penalized_fitness(inst, &sol, weights),
        Err(_) => decode_failure_penalty(inst),
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("population must be at least 1")]
    Population,
    #[error("{name} must lie in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("{name} must be nonnegative and finite, got {value}")]
    Coefficient { name: &'static str, value: f64 },
    #[error("invalid weights: {0}")]
    Weights(String),
}

fn check_unit(name: &'static str, value: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ConfigError::Probability { name, value })
    }
}

/// State of the search after one epoch; epoch 0 is the initial population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub best_fitness: f64,
    /// Objectives of the best-so-far plan, when that plan is feasible.
    pub best_time_h: Option<f64>,
    pub best_cost: Option<f64>,
    pub diversity: f64,
    pub exploration_pct: f64,
    pub exploitation_pct: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub epochs: Vec<EpochRecord>,
}

impl RunHistory {
    pub fn best_fitness(&self) -> impl Iterator<Item = f64> + '_ {
        self.epochs.iter().map(|e| e.best_fitness)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub vector: EncodingVector,
    pub fitness: f64,
    /// Decoded best plan; `None` if the best genome does not decode.
    pub solution: Option<RouteSolution>,
    /// Objectives of the best plan if it is feasible.
    pub objectives: Option<Objectives>,
    pub history: RunHistory,
}

impl RunOutcome {
    pub fn is_feasible(&self) -> bool {
        self.objectives.is_some()
    }
}

/// Shared bookkeeping for both searches.
struct Recorder<'a> {
    inst: &'a Instance,
    tracker: DiversityTracker,
    history: RunHistory,
}

impl<'a> Recorder<'a> {
    fn new(inst: &'a Instance) -> Self {
        Recorder {
            inst,
            tracker: DiversityTracker::default(),
            history: RunHistory::default(),
        }
    }

    fn record(&mut self, epoch: usize, best: &EncodingVector, best_fitness: f64, population: &[Vec<f64>]) {
        let div = diversity(population);
        let exploration_pct = self.tracker.exploration_pct(div);
        let objectives = self.objectives(best);
        self.history.epochs.push(EpochRecord {
            epoch,
            best_fitness,
            best_time_h: objectives.map(|o| o.time_h),
            best_cost: objectives.map(|o| o.cost),
            diversity: div,
            exploration_pct,
            exploitation_pct: 100.0 - exploration_pct,
        });
    }

    fn objectives(&self, v: &EncodingVector) -> Option<Objectives> {
        decode(self.inst, v).ok().and_then(|s| model::evaluate(self.inst, &s).ok())
    }

    fn finish(self, vector: EncodingVector, fitness: f64) -> RunOutcome {
        let solution = decode(self.inst, &vector).ok();
        let objectives = solution.as_ref().and_then(|s| model::evaluate(self.inst, s).ok());
        RunOutcome {
            vector,
            fitness,
            solution,
            objectives,
            history: self.history,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::two_by_two;
    use crate::instance::{ChargerLevel, RouteGraph, Station, VehicleParams};

    fn one_node() -> Instance {
        let graph = RouteGraph::new(vec![vec![0]], vec![], [(0, 300.0)].into(), [(0, 300.0)].into());
        let station = Station {
            id: 0,
            level: ChargerLevel::L2,
            power_kw: 22.0,
            price: 0.134,
            wait_h: 1.0,
            detour_km: 10.0,
        };
        Instance::from_parts(VehicleParams::default(), vec![station], graph)
    }

    #[test]
    fn genome_length() {
        for n in [1, 2, 10, 26] {
            assert_eq!(EncodingVector::dim(n), n * n + 3 * n);
        }
        assert!(matches!(
            EncodingVector::new(2, vec![0.5; 9]),
            Err(EncodingError::Length { expected: 10, .. })
        ));
        let v = EncodingVector::new(1, vec![-1.0, 2.0, 0.5, 0.5]).unwrap();
        assert_eq!(v.values(), &[0.0, 1.0, 0.5, 0.5]);
    }

    #[test]
    fn single_node_decodes_to_itself() {
        let inst = one_node();
        let v = EncodingVector::new(1, vec![0.3, 0.42, 0.9, 0.1]).unwrap();
        let sol = decode(&inst, &v).unwrap();
        assert_eq!(sol.path, vec![0]);
        assert_eq!(sol.charge_at(0), 0.42);
    }

    #[test]
    fn successor_is_the_argmax_of_the_row() {
        let inst = two_by_two();
        let mut genes = vec![0.0; EncodingVector::dim(4)];
        genes[2] = 0.2; // X[0][2]
        genes[3] = 0.9; // X[0][3]
        // Source block favors node 0; destination block is all zero, so
        // the tie between nodes 2 and 3 goes to 2 unless the walk ends at 3.
        genes[16 + 4] = 1.0;
        genes[16 + 8 + 3] = 1.0;
        let v = EncodingVector::new(4, genes).unwrap();
        let sol = decode(&inst, &v).unwrap();
        assert_eq!(sol.path, vec![0, 3]);
        assert!(sol.charge.is_empty());
    }

    #[test]
    fn walk_that_misses_the_destination_fails() {
        let inst = two_by_two();
        let mut genes = vec![0.0; EncodingVector::dim(4)];
        genes[2] = 0.9; // walk goes 0 -> 2 ...
        genes[16 + 8 + 3] = 1.0; // ... but destination is 3
        let v = EncodingVector::new(4, genes).unwrap();
        assert_eq!(decode(&inst, &v), Err(DecodeError::DeadEnd(2)));
        let f = fitness(&inst, &v, Weights::RAW_SUM);
        assert_eq!(f, 1e9 + 4.0);
    }

    #[test]
    fn fitness_composes_decode_and_penalty() {
        let inst = two_by_two();
        let mut genes = vec![0.0; EncodingVector::dim(4)];
        genes[3] = 1.0;
        genes[16] = 310.0 / 600.0; // charge at node 0 so that D is reached
        genes[16 + 8 + 3] = 1.0;
        let v = EncodingVector::new(4, genes).unwrap();
        let sol = decode(&inst, &v).unwrap();
        let want = model::penalized_fitness(&inst, &sol, Weights::NORMALIZED);
        assert_eq!(fitness(&inst, &v, Weights::NORMALIZED), want);
        assert!(want < 1e9);
    }

    #[test]
    fn random_genomes_decode_to_valid_routes_or_fail() {
        use crate::model::{check_feasible, ConstraintId};
        use rand::SeedableRng;
        let inst = crate::instance::generate_instance(
            crate::instance::Shape::new(4, 4, 0.5),
            Default::default(),
            Default::default(),
            42,
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let structural = |c: ConstraintId| !c.is_energy() && c != ConstraintId::ChargeBounds;
        for _ in 0..2000 {
            let v = EncodingVector::random(inst.node_count(), &mut rng);
            if let Ok(sol) = decode(&inst, &v) {
                let r = check_feasible(&inst, &sol);
                assert!(!r.ids().into_iter().any(structural), "{:?}", r.ids());
            }
        }
    }
}
