//! Round-based Blind and Blended Blind federation over simulated participants.
//!
//! The coordinator never creates a model. In round 0 each participant trains
//! from scratch on its own data. In every later round the coordinator collects
//! [`RoundMessage`]s (matrices plus scalar metrics), aggregates the matrices,
//! and each participant derives a new starting matrix with [`local_update`],
//! retrains on its train split from that warm start and evaluates on its test split.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::{aggregate_detailed, federated_loss, ContributionBundle, WeightScheme};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fcm::{predict_binary, DynamicsConfig, FcmModel, ModelShape};
use crate::matrix::SquareMatrix;
use crate::metrics::Scores;
use crate::pso::{self, PsoConfig, TrainingSet};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FederationMode {
    /// The new local matrix is the global matrix.
    Blind,
    /// The new local matrix is the mean of the global and the previous local matrix.
    #[serde(rename = "blended", alias = "blended_blind")]
    BlendedBlind,
}

impl FederationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FederationMode::Blind => "blind",
            FederationMode::BlendedBlind => "blended",
        }
    }
}

impl std::str::FromStr for FederationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "blind" => Ok(FederationMode::Blind),
            "blended" | "blended_blind" => Ok(FederationMode::BlendedBlind),
            other => Err(Error::InvalidConfig(format!(
                "unknown federation mode `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for FederationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FederationConfig {
    pub mode: FederationMode,
    pub scheme: WeightScheme,
    /// Federated rounds after the local round 0. Zero runs only local training.
    pub rounds: usize,
    pub pso: PsoConfig,
    pub shape: ModelShape,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    pub master_seed: u64,
}

impl FederationConfig {
    pub fn new(shape: ModelShape, mode: FederationMode, scheme: WeightScheme) -> Self {
        FederationConfig {
            mode,
            scheme,
            rounds: 20,
            pso: PsoConfig::default(),
            shape,
            dynamics: DynamicsConfig::default(),
            master_seed: 0,
        }
    }

    /// PSO seed for a participant's seed key in a round; the configured PSO seed is ignored.
    pub fn participant_seed(&self, seed_key: u64, round: usize) -> u64 {
        seed::derive(self.master_seed, &[seed_key, round as u64])
    }
}

/// Scalar results of one participant after one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub train_fitness: f64,
}

impl RoundMetrics {
    pub fn scores(&self) -> Scores {
        Scores {
            accuracy: self.accuracy,
            precision: self.precision,
        }
    }
}

/// One participant's private data and local progress.
#[derive(Debug, Clone)]
pub struct ParticipantState {
    id: String,
    seed_key: u64,
    train: Dataset,
    test: Dataset,
    local_model: Option<FcmModel>,
    metric_history: Vec<RoundMetrics>,
}

impl ParticipantState {
    /// A participant starts without a model.
    pub fn new(id: impl Into<String>, train: Dataset, test: Dataset) -> Self {
        let id = id.into();
        ParticipantState {
            seed_key: seed::hash_str(&id),
            id,
            train,
            test,
            local_model: None,
            metric_history: Vec::new(),
        }
    }

    /// Overrides the key PSO seeds are derived from (by default a hash of the id).
    pub fn with_seed_key(mut self, key: u64) -> Self {
        self.seed_key = key;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn train(&self) -> &Dataset {
        &self.train
    }

    pub fn test(&self) -> &Dataset {
        &self.test
    }

    pub fn local_model(&self) -> Option<&FcmModel> {
        self.local_model.as_ref()
    }

    /// Entry 0 is the pre-federation baseline; entry `r` follows round `r`.
    pub fn metric_history(&self) -> &[RoundMetrics] {
        &self.metric_history
    }

    pub fn dataset_size(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn positive_rate(&self) -> f64 {
        let positives = self
            .train
            .labels
            .iter()
            .chain(&self.test.labels)
            .filter(|&&l| l)
            .count();
        match self.dataset_size() {
            0 => 0.0,
            n => positives as f64 / n as f64,
        }
    }

    fn message(&self, round: usize) -> Option<RoundMessage> {
        let model = self.local_model.as_ref()?;
        let last = self.metric_history.last()?;
        Some(RoundMessage {
            round,
            participant_id: self.id.clone(),
            matrix: model.weights().clone(),
            accuracy: last.accuracy,
            precision: last.precision,
            train_fitness: last.train_fitness,
            dataset_size: self.train.len(),
        })
    }

    /// Trains from `warm_start` (or from scratch), evaluates, and records the round.
    fn train_round(
        &mut self,
        round: usize,
        warm_start: Option<&SquareMatrix>,
        config: &FederationConfig,
    ) -> Result<()> {
        let data = TrainingSet::new(&self.train.features, &self.train.labels)?;
        let pso = config
            .pso
            .with_seed(config.participant_seed(self.seed_key, round));
        let trained = pso::train(data, config.shape, &pso, &config.dynamics, warm_start)?;
        if trained.log.single_class && round == 0 {
            log::warn!("participant {} trains on a single class", self.id);
        }
        let scores = evaluate_participant(&trained.model, &self.test, &config.dynamics)?;
        self.metric_history.push(RoundMetrics {
            round,
            accuracy: scores.accuracy,
            precision: scores.precision,
            train_fitness: trained.fitness,
        });
        self.local_model = Some(trained.model);
        Ok(())
    }
}

/// What a participant sends to the coordinator: matrix and scalar metrics only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMessage {
    pub round: usize,
    pub participant_id: String,
    pub matrix: SquareMatrix,
    pub accuracy: f64,
    pub precision: f64,
    pub train_fitness: f64,
    pub dataset_size: usize,
}

impl From<&RoundMessage> for ContributionBundle {
    fn from(m: &RoundMessage) -> Self {
        ContributionBundle {
            participant_id: m.participant_id.clone(),
            matrix: m.matrix.clone(),
            accuracy: m.accuracy,
            precision: m.precision,
            dataset_size: m.dataset_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    pub participant_id: String,
    pub matrix: SquareMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantRoundMetrics {
    pub participant_id: String,
    pub accuracy: f64,
    pub precision: f64,
    pub train_fitness: f64,
}

/// Everything exchanged in one federated round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    /// Contributions the aggregate was computed from.
    pub messages: Vec<RoundMessage>,
    pub scheme: WeightScheme,
    pub weights: Vec<f64>,
    pub weight_warning: Option<String>,
    pub aggregated: SquareMatrix,
    pub federated_loss: f64,
    /// Starting matrix each participant retrained from.
    pub warm_starts: Vec<WarmStart>,
    pub post_metrics: Vec<ParticipantRoundMetrics>,
}

impl RoundReport {
    pub fn bundles(&self) -> Vec<ContributionBundle> {
        self.messages.iter().map(ContributionBundle::from).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantSummary {
    pub participant_id: String,
    pub train_size: usize,
    pub test_size: usize,
    pub positive_rate: f64,
    pub pre: Scores,
    pub post: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FederationSummary {
    pub mode: FederationMode,
    pub scheme: WeightScheme,
    pub rounds: usize,
    pub participants: Vec<ParticipantSummary>,
    pub average_pre: Scores,
    pub average_post: Scores,
    /// Participants left out because their train split was empty.
    pub excluded: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct FederationOutcome {
    pub participants: Vec<ParticipantState>,
    pub reports: Vec<RoundReport>,
    pub summary: FederationSummary,
}

impl FederationOutcome {
    pub fn final_models(&self) -> Vec<(&str, &FcmModel)> {
        self.participants
            .iter()
            .filter_map(|p| p.local_model().map(|m| (p.id(), m)))
            .collect()
    }
}

/// Progress notifications from [`run_federation_observed`].
#[derive(Debug)]
pub enum FederationEvent<'a> {
    /// Before any training.
    Started {
        participants: &'a [ParticipantState],
    },
    /// After round-0 local training.
    LocalTrainingDone {
        participants: &'a [ParticipantState],
    },
    RoundCompleted {
        report: &'a RoundReport,
        participants: &'a [ParticipantState],
    },
}

/// Starting matrix for a participant's next local training.
pub fn local_update(
    previous: Option<&SquareMatrix>,
    global: &SquareMatrix,
    mode: FederationMode,
) -> Result<SquareMatrix> {
    match (mode, previous) {
        (FederationMode::BlendedBlind, Some(prev)) => prev.zip_with(global, |p, g| (p + g) / 2.0),
        (FederationMode::Blind, Some(prev)) => {
            Error::check_len("local matrix dimension", global.dim(), prev.dim())?;
            Ok(global.clone())
        }
        (_, None) => Ok(global.clone()),
    }
}

/// Test-set accuracy and precision of `model`.
pub fn evaluate_participant(
    model: &FcmModel,
    test: &Dataset,
    dynamics: &DynamicsConfig,
) -> Result<Scores> {
    if test.is_empty() {
        return Err(Error::Empty("test split"));
    }
    let predicted = predict_binary(model, &test.features, dynamics)?;
    Scores::from_labels(&test.labels, &predicted)
}

pub fn run_federation(
    participants: Vec<ParticipantState>,
    config: &FederationConfig,
) -> Result<FederationOutcome> {
    run_federation_observed(participants, config, |_| {})
}

pub fn run_federation_observed(
    participants: Vec<ParticipantState>,
    config: &FederationConfig,
    mut observe: impl FnMut(FederationEvent<'_>),
) -> Result<FederationOutcome> {
    config.pso.validate()?;
    config.dynamics.validate()?;
    config.shape.validate()?;
    let min_participants = if config.rounds > 0 { 2 } else { 1 };
    if participants.len() < min_participants {
        return Err(Error::InvalidConfig(format!(
            "federation needs at least {min_participants} participants, got {}",
            participants.len()
        )));
    }
    if participants
        .iter()
        .any(|p| p.local_model.is_some() || !p.metric_history.is_empty())
    {
        return Err(Error::InvalidConfig(
            "participants must start without a model".into(),
        ));
    }
    let mut ids = std::collections::HashSet::new();
    for p in &participants {
        if !ids.insert(p.id.as_str()) {
            return Err(Error::InvalidConfig(format!(
                "duplicate participant id `{}`",
                p.id
            )));
        }
        for d in [&p.train, &p.test] {
            if !d.is_empty() {
                Error::check_len("participant features", config.shape.n_input, d.n_features())?;
            }
        }
    }

    let (mut active, skipped): (Vec<_>, Vec<_>) =
        participants.into_iter().partition(|p| !p.train.is_empty());
    let excluded: Vec<String> = skipped.into_iter().map(|p| p.id).collect();
    for id in &excluded {
        log::warn!("participant {id} has no training rows and is excluded");
    }
    if active.is_empty() {
        return Err(Error::Empty("participants with training data"));
    }

    observe(FederationEvent::Started {
        participants: &active,
    });

    active
        .par_iter_mut()
        .try_for_each(|p| p.train_round(0, None, config))?;
    observe(FederationEvent::LocalTrainingDone {
        participants: &active,
    });

    let mut reports = Vec::with_capacity(config.rounds);
    for round in 1..=config.rounds {
        let messages: Vec<RoundMessage> = active
            .iter()
            .map(|p| p.message(round).expect("trained in round 0"))
            .collect();
        let bundles: Vec<ContributionBundle> =
            messages.iter().map(ContributionBundle::from).collect();
        let (aggregated, weights) = aggregate_detailed(&bundles, config.scheme)?;
        let losses: Vec<f64> = messages.iter().map(|m| m.train_fitness).collect();
        let loss = federated_loss(&losses, &weights.weights)?;

        let warm_starts = active
            .par_iter_mut()
            .map(|p| {
                let previous = p.local_model.as_ref().map(FcmModel::weights);
                let start = local_update(previous, &aggregated, config.mode)?;
                p.train_round(round, Some(&start), config)?;
                Ok(WarmStart {
                    participant_id: p.id.clone(),
                    matrix: start,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let post_metrics = active
            .iter()
            .map(|p| {
                let m = p.metric_history.last().expect("just trained");
                ParticipantRoundMetrics {
                    participant_id: p.id.clone(),
                    accuracy: m.accuracy,
                    precision: m.precision,
                    train_fitness: m.train_fitness,
                }
            })
            .collect();
        reports.push(RoundReport {
            round,
            messages,
            scheme: config.scheme,
            weights: weights.weights,
            weight_warning: weights.warning,
            aggregated,
            federated_loss: loss,
            warm_starts,
            post_metrics,
        });
        observe(FederationEvent::RoundCompleted {
            report: reports.last().expect("pushed"),
            participants: &active,
        });
    }

    let summary = summarize(&active, config, excluded);
    Ok(FederationOutcome {
        participants: active,
        reports,
        summary,
    })
}

fn summarize(
    active: &[ParticipantState],
    config: &FederationConfig,
    excluded: Vec<String>,
) -> FederationSummary {
    let participants: Vec<ParticipantSummary> = active
        .iter()
        .map(|p| ParticipantSummary {
            participant_id: p.id.clone(),
            train_size: p.train.len(),
            test_size: p.test.len(),
            positive_rate: p.positive_rate(),
            pre: p.metric_history[0].scores(),
            post: p.metric_history.last().expect("round 0 ran").scores(),
        })
        .collect();
    let mean = |f: &dyn Fn(&ParticipantSummary) -> f64| {
        participants.iter().map(f).sum::<f64>() / participants.len() as f64
    };
    FederationSummary {
        mode: config.mode,
        scheme: config.scheme,
        rounds: config.rounds,
        average_pre: Scores {
            accuracy: mean(&|p| p.pre.accuracy),
            precision: mean(&|p| p.pre.precision),
        },
        average_post: Scores {
            accuracy: mean(&|p| p.post.accuracy),
            precision: mean(&|p| p.post.precision),
        },
        participants,
        excluded,
    }
}
