use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_unit, fitness, ConfigError, EncodingVector, Recorder, RunOutcome};
use crate::instance::Instance;
use crate::model::Weights;

pub const VELOCITY_CLAMP: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PSOConfig {
    pub population: usize,
    pub epochs: usize,
    pub seed: u64,
    pub w_start: f64,
    pub w_end: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for PSOConfig {
    fn default() -> Self {
        PSOConfig {
            population: 1000,
            epochs: 1000,
            seed: 0,
            w_start: 0.1,
            w_end: 0.5,
            c1: 2.5,
            c2: 2.5,
        }
    }
}

impl PSOConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.population == 0 {
            return Err(ConfigError::Population);
        }
        check_unit("w_start", self.w_start)?;
        check_unit("w_end", self.w_end)?;
        for (name, value) in [("c1", self.c1), ("c2", self.c2)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ConfigError::Coefficient { name, value });
            }
        }
        Ok(())
    }

    /// Inertia at epoch `t` (1-based), linear between the endpoints.
    pub fn inertia(&self, t: usize) -> f64 {
        if self.epochs <= 1 {
            return self.w_start;
        }
        self.w_start + (self.w_end - self.w_start) * (t - 1) as f64 / (self.epochs - 1) as f64
    }
}

/// Global-best PSO with synchronous best updates.
pub fn run_pso(inst: &Instance, cfg: &PSOConfig, weights: Weights) -> Result<RunOutcome, ConfigError> {
    cfg.validate()?;
    weights.check().map_err(ConfigError::Weights)?;
    let n = inst.node_count();
    let dim = EncodingVector::dim(n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let score = |genes: &Vec<f64>| fitness(inst, &EncodingVector::from_raw(n, genes.clone()), weights);

    let mut x: Vec<Vec<f64>> = Vec::with_capacity(cfg.population);
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(cfg.population);
    for _ in 0..cfg.population {
        x.push(EncodingVector::random(n, &mut rng).values);
        v.push((0..dim).map(|_| rng.random_range(-VELOCITY_CLAMP..=VELOCITY_CLAMP)).collect());
    }
    let mut pbest = x.clone();
    let mut pbest_f: Vec<f64> = x.iter().map(score).collect();
    let mut g = 0;
    for i in 1..cfg.population {
        if pbest_f[i] < pbest_f[g] {
            g = i;
        }
    }
    let mut gbest = pbest[g].clone();
    let mut gbest_f = pbest_f[g];

    let mut rec = Recorder::new(inst);
    rec.record(0, &EncodingVector::from_raw(n, gbest.clone()), gbest_f, &x);

    for epoch in 1..=cfg.epochs {
        let w = cfg.inertia(epoch);
        for i in 0..cfg.population {
            for d in 0..dim {
                let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                let vel = w * v[i][d] + cfg.c1 * r1 * (pbest[i][d] - x[i][d]) + cfg.c2 * r2 * (gbest[d] - x[i][d]);
                v[i][d] = vel.clamp(-VELOCITY_CLAMP, VELOCITY_CLAMP);
                x[i][d] = (x[i][d] + v[i][d]).clamp(0.0, 1.0);
            }
        }
        for i in 0..cfg.population {
            let f = score(&x[i]);
            if f < pbest_f[i] {
                pbest_f[i] = f;
                pbest[i].clone_from(&x[i]);
            }
        }
        let mut g = None;
        for i in 0..cfg.population {
            if pbest_f[i] < g.map_or(gbest_f, |j: usize| pbest_f[j]) {
                g = Some(i);
            }
        }
        if let Some(i) = g {
            gbest_f = pbest_f[i];
            gbest.clone_from(&pbest[i]);
        }
        rec.record(epoch, &EncodingVector::from_raw(n, gbest.clone()), gbest_f, &x);
    }

    Ok(rec.finish(EncodingVector::from_raw(n, gbest), gbest_f))
}
