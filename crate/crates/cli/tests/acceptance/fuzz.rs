//! Random route solutions skewed towards the feasibility boundary.

use evrp::exact::{optimize_path, Objective};
use evrp::instance::{Instance, NodeId};
use evrp::model::RouteSolution;
use rand::seq::IndexedRandom;
use rand::Rng;

pub struct Fuzzer<'a> {
    inst: &'a Instance,
    paths: Vec<Vec<NodeId>>,
    /// Cost-optimal plans: tight against the battery bounds.
    tight: Vec<RouteSolution>,
}

impl<'a> Fuzzer<'a> {
    pub fn new(inst: &'a Instance, paths: Vec<Vec<NodeId>>) -> Self {
        let tight = paths
            .iter()
            .take(200)
            .filter_map(|p| optimize_path(inst, p, Objective::Cost, None).ok().flatten())
            .map(|fp| fp.solution)
            .collect();
        Fuzzer { inst, paths, tight }
    }

    fn random_path<R: Rng>(&self, rng: &mut R) -> Vec<NodeId> {
        let n = self.inst.stations.len();
        let mut path = match self.paths.choose(rng) {
            Some(p) => p.clone(),
            None => vec![rng.random_range(0..n)],
        };
        match rng.random_range(0..10) {
            0 => {
                let k = rng.random_range(0..path.len());
                path[k] = rng.random_range(0..n);
            }
            1 => {
                let k = rng.random_range(0..path.len());
                path.insert(k, path[k]);
            }
            2 if path.len() > 1 => {
                path.remove(rng.random_range(0..path.len()));
            }
            3 => path.reverse(),
            4 => path = (0..rng.random_range(1..=4)).map(|_| rng.random_range(0..n)).collect(),
            5 if rng.random_bool(0.2) => path.push(n + rng.random_range(0..3)),
            6 if rng.random_bool(0.1) => path.clear(),
            _ => {}
        }
        path
    }

    fn random_amount<R: Rng>(&self, rng: &mut R) -> f64 {
        match rng.random_range(0..10) {
            0 => 0.0,
            1 => -rng.random_range(0.0..0.1),
            2 => 1.0 + rng.random_range(0.0..0.3),
            3 => 1.0,
            _ => rng.random_range(0.0..1.0),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> RouteSolution {
        if !self.tight.is_empty() && rng.random_bool(0.4) {
            let mut sol = self.tight.choose(rng).unwrap().clone();
            // Nudge around the tolerance band on either side.
            let scale = [1e-7, 1e-6, 3e-6, 1e-4, 1e-2][rng.random_range(0..5)];
            for y in sol.charge.values_mut() {
                if rng.random_bool(0.7) {
                    *y += rng.random_range(-scale..scale);
                }
            }
            if rng.random_bool(0.1) {
                let &node = sol.path.choose(rng).unwrap();
                let y = self.random_amount(rng);
                sol.charge.insert(node, y);
            }
            return sol;
        }
        let path = self.random_path(rng);
        let mut sol = RouteSolution::transit(path.clone());
        for &v in &path {
            if rng.random_bool(0.4) {
                sol.charge.insert(v, self.random_amount(rng));
            }
        }
        if rng.random_bool(0.05) {
            let n = self.inst.stations.len();
            sol.charge.insert(rng.random_range(0..n), rng.random_range(0.0..1.0));
        }
        sol
    }
}
