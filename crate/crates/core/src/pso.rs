//! Particle swarm training of FCM adjacency matrices.
//!
//! Each particle's position is the off-diagonal part of a candidate adjacency
//! matrix (row-major, `n * (n - 1)` entries). Particles follow
//!
//! ```text
//! v(t + 1) = v(t) + U(0, phi1) * (pbest - x(t)) + U(0, phi2) * (gbest - x(t))
//! x(t + 1) = x(t) + v(t)
//! ```
//!
//! with no inertia term, component-wise uniform draws, velocities clamped to
//! `[-velocity_clamp, velocity_clamp]` and positions clamped to `[-1, 1]`.
//! Fitness is the complement of the binary Jaccard score, minimized.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fcm::{predict_binary, DynamicsConfig, FcmModel, ModelShape};
use crate::matrix::{off_diagonal_len, SquareMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    pub swarm_size: usize,
    /// Number of generations after the initial evaluation.
    pub iterations: usize,
    pub phi1: f64,
    pub phi2: f64,
    pub velocity_clamp: f64,
    /// Initial velocities are drawn from `[-bound, bound]`; defaults to `velocity_clamp`.
    pub initial_velocity_bound: Option<f64>,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            swarm_size: 10,
            iterations: 20,
            phi1: 2.0,
            phi2: 2.0,
            velocity_clamp: 0.5,
            initial_velocity_bound: None,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        PsoConfig { seed, ..self }
    }

    /// A configuration under which no particle ever moves.
    pub fn frozen(swarm_size: usize, iterations: usize, seed: u64) -> Self {
        PsoConfig {
            swarm_size,
            iterations,
            phi1: 0.0,
            phi2: 0.0,
            initial_velocity_bound: Some(0.0),
            seed,
            ..PsoConfig::default()
        }
    }

    fn initial_velocity(&self) -> f64 {
        self.initial_velocity_bound.unwrap_or(self.velocity_clamp)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.swarm_size == 0 {
            return bad("swarm_size must be at least 1".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if !(self.phi1 >= 0.0 && self.phi1.is_finite() && self.phi2 >= 0.0 && self.phi2.is_finite())
        {
            return bad(format!(
                "phi1/phi2 must be non-negative, got {}/{}",
                self.phi1, self.phi2
            ));
        }
        if !(self.velocity_clamp > 0.0 && self.velocity_clamp.is_finite()) {
            return bad(format!(
                "velocity_clamp must be positive, got {}",
                self.velocity_clamp
            ));
        }
        let init = self.initial_velocity();
        if !(0.0..=self.velocity_clamp).contains(&init) {
            return bad(format!(
                "initial velocity bound {init} outside [0, velocity_clamp]"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
}

impl Particle {
    pub fn new(position: Vec<f64>, velocity: Vec<f64>, fitness: f64) -> Self {
        Particle {
            best_position: position.clone(),
            position,
            velocity,
            best_fitness: fitness,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub global_best_position: Vec<f64>,
    pub global_best_fitness: f64,
    rng: ChaCha8Rng,
}

impl Swarm {
    /// Records improvements of personal and global bests; strict improvement only.
    fn absorb(&mut self, fitness: &[f64]) {
        for (p, &f) in self.particles.iter_mut().zip(fitness) {
            if f < p.best_fitness {
                p.best_fitness = f;
                p.best_position.clone_from(&p.position);
            }
            if f < self.global_best_fitness {
                self.global_best_fitness = f;
                self.global_best_position.clone_from(&p.position);
            }
        }
    }
}

/// `1 - |truth ∩ predicted| / |truth ∪ predicted|` over the positive class.
///
/// Two all-negative vectors agree perfectly, so the fitness is 0.
pub fn fitness_jaccard_complement(truth: &[bool], predicted: &[bool]) -> Result<f64> {
    Error::check_len("predicted labels", truth.len(), predicted.len())?;
    if truth.is_empty() {
        return Err(Error::Empty("label vector"));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    let union = tp + fp + fn_;
    if union == 0 {
        return Ok(0.0);
    }
    Ok(1.0 - tp as f64 / union as f64)
}

/// Labeled rows a candidate is scored against.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSet<'a> {
    pub features: &'a [Vec<f64>],
    pub labels: &'a [bool],
}

impl<'a> TrainingSet<'a> {
    pub fn new(features: &'a [Vec<f64>], labels: &'a [bool]) -> Result<Self> {
        Error::check_len("training labels", features.len(), labels.len())?;
        if features.is_empty() {
            return Err(Error::Empty("training set"));
        }
        Ok(TrainingSet { features, labels })
    }

    pub fn is_single_class(&self) -> bool {
        self.labels.iter().all(|&l| l == self.labels[0])
    }
}

/// Fitness of the model obtained by unflattening `position` into `shape`.
pub fn evaluate_candidate(
    position: &[f64],
    shape: ModelShape,
    data: TrainingSet<'_>,
    dynamics: &DynamicsConfig,
) -> Result<f64> {
    let model = model_from_position(position, shape)?;
    let predicted = predict_binary(&model, data.features, dynamics)?;
    fitness_jaccard_complement(data.labels, &predicted)
}

pub fn model_from_position(position: &[f64], shape: ModelShape) -> Result<FcmModel> {
    FcmModel::new(
        shape,
        SquareMatrix::from_off_diagonal(shape.n_nodes(), position)?,
    )
}

/// Velocity update with fresh per-component draws, then the velocity clamp.
pub fn update_velocity(
    particle: &Particle,
    global_best: &[f64],
    config: &PsoConfig,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let clamp = config.velocity_clamp;
    particle
        .velocity
        .iter()
        .zip(&particle.position)
        .zip(&particle.best_position)
        .zip(global_best)
        .map(|(((&v, &x), &pbest), &gbest)| {
            let u1 = uniform(rng, config.phi1);
            let u2 = uniform(rng, config.phi2);
            let next = (v + u1 * (pbest - x) + u2 * (gbest - x)).clamp(-clamp, clamp);
            debug_assert!(next.abs() <= clamp);
            next
        })
        .collect()
}

/// `x + v`, clamped to `[-1, 1]`.
pub fn update_position(particle: &Particle) -> Vec<f64> {
    particle
        .position
        .iter()
        .zip(&particle.velocity)
        .map(|(&x, &v)| {
            let next = (x + v).clamp(-1.0, 1.0);
            debug_assert!((-1.0..=1.0).contains(&next));
            next
        })
        .collect()
}

/// Draws from `U(0, upper)`; a zero upper bound still consumes one draw so the
/// random stream does not depend on the coefficients.
fn uniform(rng: &mut impl Rng, upper: f64) -> f64 {
    rng.gen::<f64>() * upper
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub global_best_fitness: f64,
}

/// Per-iteration global best fitness; iteration 0 is the initial swarm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub records: Vec<IterationRecord>,
    /// The training labels contained a single class.
    pub single_class: bool,
}

impl TrainingLog {
    pub fn final_fitness(&self) -> f64 {
        self.records.last().map_or(1.0, |r| r.global_best_fitness)
    }

    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io("<training log>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: FcmModel,
    /// Fitness of `model` on the training set.
    pub fitness: f64,
    pub log: TrainingLog,
}

/// Trains an FCM classifier on binary-labeled data.
///
/// With `warm_start`, particle 0 starts exactly at that matrix, so the returned
/// model is never worse on the training data than the warm start.
pub fn train(
    data: TrainingSet<'_>,
    shape: ModelShape,
    config: &PsoConfig,
    dynamics: &DynamicsConfig,
    warm_start: Option<&SquareMatrix>,
) -> Result<TrainedModel> {
    train_observed(data, shape, config, dynamics, warm_start, |_, _| {})
}

/// Like [`train`], calling `observe(iteration, &swarm)` after every generation's bookkeeping.
pub fn train_observed(
    data: TrainingSet<'_>,
    shape: ModelShape,
    config: &PsoConfig,
    dynamics: &DynamicsConfig,
    warm_start: Option<&SquareMatrix>,
    mut observe: impl FnMut(usize, &Swarm),
) -> Result<TrainedModel> {
    config.validate()?;
    dynamics.validate()?;
    shape.validate()?;
    if shape.n_output != 2 {
        return Err(Error::InvalidModel(format!(
            "binary training needs exactly two output nodes, got {}",
            shape.n_output
        )));
    }
    Error::check_len("feature vector", shape.n_input, data.features[0].len())?;
    let dim = off_diagonal_len(shape.n_nodes());
    let warm = match warm_start {
        Some(m) => {
            Error::check_len("warm start matrix", shape.n_nodes(), m.dim())?;
            if !m.entries_within(-1.0, 1.0) || !m.diagonal_is_zero() {
                return Err(Error::InvalidModel(
                    "warm start must have entries in [-1, 1] and a zero diagonal".into(),
                ));
            }
            Some(m.off_diagonal())
        }
        None => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let v0 = config.initial_velocity();
    let mut positions = Vec::with_capacity(config.swarm_size);
    let mut velocities = Vec::with_capacity(config.swarm_size);
    for k in 0..config.swarm_size {
        let random: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        positions.push(match (&warm, k) {
            (Some(w), 0) => w.clone(),
            _ => random,
        });
        velocities.push(
            (0..dim)
                .map(|_| symmetric(&mut rng, v0))
                .collect::<Vec<_>>(),
        );
    }

    let fitness = evaluate_all(&positions, shape, data, dynamics)?;
    let particles: Vec<Particle> = positions
        .into_iter()
        .zip(velocities)
        .zip(&fitness)
        .map(|((x, v), &f)| Particle::new(x, v, f))
        .collect();
    let best = argmin(&fitness);
    let mut swarm = Swarm {
        global_best_position: particles[best].position.clone(),
        global_best_fitness: fitness[best],
        particles,
        rng,
    };
    let mut records = vec![IterationRecord {
        iteration: 0,
        global_best_fitness: swarm.global_best_fitness,
    }];
    observe(0, &swarm);

    for iteration in 1..=config.iterations {
        let gbest = swarm.global_best_position.clone();
        for k in 0..swarm.particles.len() {
            let velocity = update_velocity(&swarm.particles[k], &gbest, config, &mut swarm.rng);
            let p = &mut swarm.particles[k];
            p.velocity = velocity;
            p.position = update_position(p);
        }
        let positions: Vec<Vec<f64>> = swarm.particles.iter().map(|p| p.position.clone()).collect();
        let fitness = evaluate_all(&positions, shape, data, dynamics)?;
        let previous = swarm.global_best_fitness;
        swarm.absorb(&fitness);
        debug_assert!(swarm.global_best_fitness <= previous);
        records.push(IterationRecord {
            iteration,
            global_best_fitness: swarm.global_best_fitness,
        });
        observe(iteration, &swarm);
    }

    let model = model_from_position(&swarm.global_best_position, shape)?;
    Ok(TrainedModel {
        model,
        fitness: swarm.global_best_fitness,
        log: TrainingLog {
            records,
            single_class: data.is_single_class(),
        },
    })
}

fn symmetric(rng: &mut impl Rng, bound: f64) -> f64 {
    if bound == 0.0 {
        // keep the stream aligned with the non-zero case
        let _: f64 = rng.gen();
        0.0
    } else {
        rng.gen_range(-bound..=bound)
    }
}

/// Evaluations run in parallel; results come back in particle order.
fn evaluate_all(
    positions: &[Vec<f64>],
    shape: ModelShape,
    data: TrainingSet<'_>,
    dynamics: &DynamicsConfig,
) -> Result<Vec<f64>> {
    positions
        .par_iter()
        .map(|x| evaluate_candidate(x, shape, data, dynamics))
        .collect()
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}
