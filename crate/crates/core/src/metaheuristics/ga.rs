use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{check_unit, fitness, ConfigError, EncodingVector, Recorder, RunOutcome};
use crate::instance::Instance;
use crate::model::Weights;

/// Standard deviation of the additive mutation noise.
pub const MUTATION_SD: f64 = 0.1;
pub const TOURNAMENT_SIZE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GAConfig {
    pub population: usize,
    pub epochs: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub seed: u64,
}

impl Default for GAConfig {
    fn default() -> Self {
        GAConfig {
            population: 1000,
            epochs: 1000,
            p_crossover: 0.4,
            p_mutation: 0.4,
            seed: 0,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.population == 0 {
            return Err(ConfigError::Population);
        }
        check_unit("p_crossover", self.p_crossover)?;
        check_unit("p_mutation", self.p_mutation)
    }
}

fn tournament<'p, R: Rng>(pop: &'p [(Vec<f64>, f64)], rng: &mut R) -> &'p [f64] {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..TOURNAMENT_SIZE {
        let other = rng.random_range(0..pop.len());
        if pop[other].1 < pop[best].1 {
            best = other;
        }
    }
    &pop[best].0
}

/// Elitist generational GA: the next population is the best `population`
/// members of parents and offspring together.
pub fn run_ga(inst: &Instance, cfg: &GAConfig, weights: Weights) -> Result<RunOutcome, ConfigError> {
    cfg.validate()?;
    weights.check().map_err(ConfigError::Weights)?;
    let n = inst.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, MUTATION_SD).expect("valid sd");
    let score = |genes: &Vec<f64>| fitness(inst, &EncodingVector::from_raw(n, genes.clone()), weights);

    let mut pop: Vec<(Vec<f64>, f64)> = (0..cfg.population)
        .map(|_| {
            let genes = EncodingVector::random(n, &mut rng).values;
            let f = score(&genes);
            (genes, f)
        })
        .collect();
    pop.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut rec = Recorder::new(inst);
    let snapshot = |pop: &[(Vec<f64>, f64)]| pop.iter().map(|p| p.0.clone()).collect::<Vec<_>>();
    rec.record(0, &EncodingVector::from_raw(n, pop[0].0.clone()), pop[0].1, &snapshot(&pop));

    for epoch in 1..=cfg.epochs {
        let mut offspring: Vec<Vec<f64>> = Vec::with_capacity(cfg.population + 1);
        while offspring.len() < cfg.population {
            let mut a = tournament(&pop, &mut rng).to_vec();
            let mut b = tournament(&pop, &mut rng).to_vec();
            if rng.random::<f64>() < cfg.p_crossover {
                for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                    if rng.random::<bool>() {
                        std::mem::swap(x, y);
                    }
                }
            }
            for child in [&mut a, &mut b] {
                for g in child.iter_mut() {
                    if rng.random::<f64>() < cfg.p_mutation {
                        *g = (*g + noise.sample(&mut rng)).clamp(0.0, 1.0);
                    }
                }
            }
            offspring.push(a);
            offspring.push(b);
        }
        offspring.truncate(cfg.population);
        pop.extend(offspring.into_iter().map(|genes| {
            let f = score(&genes);
            (genes, f)
        }));
        // Stable: on ties parents stay ahead of their offspring.
        pop.sort_by(|a, b| a.1.total_cmp(&b.1));
        pop.truncate(cfg.population);
        rec.record(epoch, &EncodingVector::from_raw(n, pop[0].0.clone()), pop[0].1, &snapshot(&pop));
    }

    let (genes, f) = pop.swap_remove(0);
    Ok(rec.finish(EncodingVector::from_raw(n, genes), f))
}
