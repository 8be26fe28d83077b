//! Box-constrained particle-swarm minimizer for cheap black-box objectives.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            particles: 20,
            iterations: 50,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult {
    pub best: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Minimizes `f` over the box `[lower, upper]`.
///
/// `seeds` are placed as the first particles, so the result is never worse
/// than the best seed. Particles leaving the box are clamped to its faces.
pub fn minimize<R, F>(
    f: F,
    lower: &[f64],
    upper: &[f64],
    seeds: &[Vec<f64>],
    config: &PsoConfig,
    rng: &mut R,
) -> Result<PsoResult>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut f = f;
    let dim = lower.len();
    if upper.len() != dim {
        return Err(Error::dims("pso bounds", dim, upper.len()));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
        return Err(Error::param("pso lower bound exceeds upper bound"));
    }
    if config.particles == 0 {
        return Err(Error::param("pso needs at least one particle"));
    }
    let clamp = |x: &mut [f64]| {
        for ((v, l), u) in x.iter_mut().zip(lower).zip(upper) {
            *v = v.clamp(*l, *u);
        }
    };

    let mut pos: Vec<Vec<f64>> = Vec::with_capacity(config.particles);
    for s in seeds.iter().take(config.particles) {
        if s.len() != dim {
            return Err(Error::dims("pso seed", dim, s.len()));
        }
        let mut p = s.clone();
        clamp(&mut p);
        pos.push(p);
    }
    while pos.len() < config.particles {
        pos.push(lower.iter().zip(upper).map(|(&l, &u)| l + (u - l) * rng.gen::<f64>()).collect());
    }
    let mut vel: Vec<Vec<f64>> = (0..config.particles)
        .map(|_| {
            lower
                .iter()
                .zip(upper)
                .map(|(&l, &u)| (u - l) * (rng.gen::<f64>() - 0.5) * 0.2)
                .collect()
        })
        .collect();

    let mut evaluations = 0;
    let mut pbest = pos.clone();
    let mut pbest_val = Vec::with_capacity(config.particles);
    for p in &pos {
        pbest_val.push(f(p)?);
        evaluations += 1;
    }
    let mut g = argmin(&pbest_val);
    let mut gbest = pbest[g].clone();
    let mut gbest_val = pbest_val[g];

    for _ in 0..config.iterations {
        for k in 0..config.particles {
            for d in 0..dim {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                vel[k][d] = config.inertia * vel[k][d]
                    + config.cognitive * r1 * (pbest[k][d] - pos[k][d])
                    + config.social * r2 * (gbest[d] - pos[k][d]);
                pos[k][d] += vel[k][d];
            }
            clamp(&mut pos[k]);
            let v = f(&pos[k])?;
            evaluations += 1;
            if v < pbest_val[k] {
                pbest_val[k] = v;
                pbest[k].clone_from(&pos[k]);
                if v < gbest_val {
                    gbest_val = v;
                    gbest.clone_from(&pos[k]);
                }
            }
        }
        g = argmin(&pbest_val);
        if pbest_val[g] < gbest_val {
            gbest_val = pbest_val[g];
            gbest.clone_from(&pbest[g]);
        }
    }
    Ok(PsoResult {
        best: gbest,
        value: gbest_val,
        evaluations,
    })
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}
