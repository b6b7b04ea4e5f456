//! Configuration-driven experiment runs and their report tables.
//!
//! A run loads one CSV dataset and executes every combination of
//! partition × model shape × federation mode × weight scheme × seed. Each
//! combination writes a per-agent table (accuracy and precision before and
//! after federation), the final models and the round reports. With several
//! seeds, a median table per combination is written as well. A
//! `manifest.json` records the status of every combination.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! config.json
//! manifest.json
//! <partition>/<activation>-<slope>/<mode>-<scheme>/seed-<seed>/table.{csv,txt}
//!                                                  seed-<seed>/rounds.{json,csv}
//!                                                  seed-<seed>/models/agent-<id>.json
//! <partition>/<activation>-<slope>/<mode>-<scheme>/median.{csv,txt}
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rust_decimal::prelude::{FromPrimitive, RoundingStrategy};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::aggregation::WeightScheme;
use crate::data::{self, CsvOptions, NormalizationStats, PartitionSpec, RawTable};
use crate::error::{Error, Result};
use crate::fcm::{Activation, DynamicsConfig, ModelShape};
use crate::federation::{
    run_federation, FederationConfig, FederationMode, FederationOutcome, ParticipantState,
};
use crate::pso::PsoConfig;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub path: PathBuf,
    #[serde(flatten)]
    pub csv: CsvOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub name: String,
    pub proportions: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeConfig {
    pub activation: Activation,
    pub slope: f64,
}

fn default_rounds() -> usize {
    20
}

fn default_test_fraction() -> f64 {
    0.2
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub partitions: Vec<PartitionConfig>,
    pub modes: Vec<FederationMode>,
    pub schemes: Vec<WeightScheme>,
    pub shapes: Vec<ShapeConfig>,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub pso: PsoConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(Error::InvalidConfig(format!("no {what} configured")));
        if self.partitions.is_empty() {
            return empty("partitions");
        }
        if self.modes.is_empty() {
            return empty("federation modes");
        }
        if self.schemes.is_empty() {
            return empty("weight schemes");
        }
        if self.shapes.is_empty() {
            return empty("model shapes");
        }
        if self.seeds.is_empty() {
            return empty("seeds");
        }
        for p in &self.partitions {
            PartitionSpec {
                proportions: p.proportions.clone(),
                shuffle_seed: 0,
            }
            .validate()?;
        }
        self.pso.validate()?;
        self.dynamics.validate()
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(path) = &overrides.dataset {
            self.dataset.path.clone_from(path);
        }
        if let Some(mode) = overrides.mode {
            self.modes = vec![mode];
        }
        if let Some(scheme) = overrides.scheme {
            self.schemes = vec![scheme];
        }
        if overrides.activation.is_some() || overrides.slope.is_some() {
            let base = self.shapes.first().copied().unwrap_or(ShapeConfig {
                activation: Activation::HyperbolicTangent,
                slope: 2.0,
            });
            self.shapes = vec![ShapeConfig {
                activation: overrides.activation.unwrap_or(base.activation),
                slope: overrides.slope.unwrap_or(base.slope),
            }];
        }
        if let Some(rounds) = overrides.rounds {
            self.rounds = rounds;
        }
        if let Some(proportions) = &overrides.agents {
            self.partitions = vec![PartitionConfig {
                name: "custom".into(),
                proportions: proportions.clone(),
            }];
        }
        if let Some(seeds) = &overrides.seeds {
            self.seeds.clone_from(seeds);
        }
        if let Some(out) = &overrides.output_dir {
            self.output_dir.clone_from(out);
        }
    }
}

/// Command-line replacements for parts of an [`ExperimentConfig`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub dataset: Option<PathBuf>,
    pub mode: Option<FederationMode>,
    pub scheme: Option<WeightScheme>,
    pub activation: Option<Activation>,
    pub slope: Option<f64>,
    pub rounds: Option<usize>,
    pub agents: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub output_dir: Option<PathBuf>,
}

/// Parses a comma-separated list, e.g. `0.2,0.2,0.6`.
pub fn parse_list<T: FromStr>(text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim().parse().map_err(|_| {
                Error::InvalidConfig(format!("cannot parse `{}` in list `{text}`", s.trim()))
            })
        })
        .collect()
}

/// One row of a report table; metric cells are fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRow {
    pub agent: String,
    pub size: f64,
    pub pos_rate: f64,
    pub acc_pre: f64,
    pub acc_post: f64,
    pub prec_pre: f64,
    pub prec_post: f64,
}

impl AgentRow {
    fn values(&self) -> [f64; 6] {
        [
            self.size,
            self.pos_rate,
            self.acc_pre,
            self.acc_post,
            self.prec_pre,
            self.prec_post,
        ]
    }

    fn from_values(agent: String, v: [f64; 6]) -> Self {
        AgentRow {
            agent,
            size: v[0],
            pos_rate: v[1],
            acc_pre: v[2],
            acc_post: v[3],
            prec_pre: v[4],
            prec_post: v[5],
        }
    }
}

pub const TABLE_HEADER: [&str; 7] = [
    "agent",
    "size",
    "pos_rate",
    "acc_pre",
    "acc_post",
    "prec_pre",
    "prec_post",
];
pub const AVERAGE_LABEL: &str = "Avg.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMetadata {
    pub partition: String,
    pub mode: FederationMode,
    pub scheme: WeightScheme,
    pub activation: Activation,
    pub slope: f64,
    pub rounds: usize,
    /// Seeds the table was computed from; several for a median table.
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub rows: Vec<AgentRow>,
    pub average: AgentRow,
    pub metadata: TableMetadata,
}

impl ReportTable {
    /// Builds a table; the averaged row is the column-wise mean of `rows`.
    pub fn new(rows: Vec<AgentRow>, metadata: TableMetadata) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("report table rows"));
        }
        let n = rows.len() as f64;
        let mut sums = [0.0; 6];
        for r in &rows {
            for (s, v) in sums.iter_mut().zip(r.values()) {
                *s += v;
            }
        }
        let average = AgentRow::from_values(AVERAGE_LABEL.into(), sums.map(|s| s / n));
        Ok(ReportTable {
            rows,
            average,
            metadata,
        })
    }

    pub fn from_outcome(
        outcome: &FederationOutcome,
        total_rows: usize,
        metadata: TableMetadata,
    ) -> Result<Self> {
        let rows = outcome
            .participants
            .iter()
            .zip(&outcome.summary.participants)
            .map(|(p, s)| AgentRow {
                agent: s.participant_id.clone(),
                size: p.dataset_size() as f64 / total_rows as f64,
                pos_rate: s.positive_rate,
                acc_pre: s.pre.accuracy,
                acc_post: s.post.accuracy,
                prec_pre: s.pre.precision,
                prec_post: s.post.precision,
            })
            .collect();
        ReportTable::new(rows, metadata)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(TABLE_HEADER)?;
        for row in self.rows.iter().chain(std::iter::once(&self.average)) {
            let mut record = vec![row.agent.clone()];
            record.extend(row.values().iter().map(|&v| format_4dp(v)));
            w.write_record(&record)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::io("<table>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Aligned plain-text rendering in the layout of a results table.
    pub fn to_text(&self) -> String {
        let m = &self.metadata;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "partition={} mode={} scheme={} activation={} slope={} rounds={} seeds={:?}",
            m.partition, m.mode, m.scheme, m.activation, m.slope, m.rounds, m.seeds
        );
        let header = [
            "Agent",
            "Size",
            "% 1s",
            "Accuracy Pre-FL",
            "Accuracy Post-FL",
            "Precision Pre-FL",
            "Precision Post-FL",
        ];
        let mut cells: Vec<[String; 7]> = vec![header.map(str::to_string)];
        for r in &self.rows {
            let v = r.values();
            cells.push([
                r.agent.clone(),
                format_4dp(v[0]),
                format_4dp(v[1]),
                format_4dp(v[2]),
                format_4dp(v[3]),
                format_4dp(v[4]),
                format_4dp(v[5]),
            ]);
        }
        let a = self.average.values();
        cells.push([
            AVERAGE_LABEL.into(),
            "-".into(),
            "-".into(),
            format_4dp(a[2]),
            format_4dp(a[3]),
            format_4dp(a[4]),
            format_4dp(a[5]),
        ]);
        let widths: Vec<usize> = (0..7)
            .map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, &w))| {
                    if c == 0 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }

    /// Writes `<stem>.csv` and `<stem>.txt` into `dir`.
    pub fn emit(&self, dir: impl AsRef<Path>, stem: &str) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let txt_path = dir.join(format!("{stem}.txt"));
        write_file(&csv_path, &self.to_csv()?)?;
        write_file(&txt_path, &self.to_text())?;
        Ok(vec![csv_path, txt_path])
    }
}

/// Parses a table written by [`ReportTable::to_csv`] into `(agent rows, averaged row)`.
pub fn parse_table_csv(text: &str) -> Result<(Vec<AgentRow>, AgentRow)> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != TABLE_HEADER {
        return Err(Error::InvalidData(format!(
            "unexpected table header {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let mut v = [0.0; 6];
        for (slot, cell) in v.iter_mut().zip(record.iter().skip(1)) {
            *slot = cell
                .parse()
                .map_err(|_| Error::InvalidData(format!("bad table cell `{cell}`")))?;
        }
        rows.push(AgentRow::from_values(record[0].to_string(), v));
    }
    match rows.pop() {
        Some(avg) if avg.agent == AVERAGE_LABEL => Ok((rows, avg)),
        _ => Err(Error::InvalidData("table has no averaged row".into())),
    }
}

/// Four decimal places, rounding halves away from zero on the shortest
/// decimal form of `x` (so 0.92105 becomes "0.9211").
pub fn format_4dp(x: f64) -> String {
    let parsed = Decimal::from_str(&x.to_string())
        .ok()
        .or_else(|| Decimal::from_f64(x));
    match parsed {
        Some(d) => format!(
            "{:.4}",
            d.round_dp_with_strategy(4, RoundingStrategy::MidpointAwayFromZero)
        ),
        None => format!("{x:.4}"),
    }
}

/// Per-agent, per-column medians over several tables of the same combination.
pub fn median_table(tables: &[ReportTable]) -> Result<ReportTable> {
    let first = tables.first().ok_or(Error::Empty("tables to summarize"))?;
    for t in tables {
        Error::check_len("agents per table", first.rows.len(), t.rows.len())?;
    }
    let rows = (0..first.rows.len())
        .map(|i| {
            let mut v = [0.0; 6];
            for (c, slot) in v.iter_mut().enumerate() {
                *slot = median(tables.iter().map(|t| t.rows[i].values()[c]).collect());
            }
            AgentRow::from_values(first.rows[i].agent.clone(), v)
        })
        .collect();
    let mut metadata = first.metadata.clone();
    metadata.seeds = tables
        .iter()
        .flat_map(|t| t.metadata.seeds.clone())
        .collect();
    ReportTable::new(rows, metadata)
}

/// Median of a non-empty list; the mean of the two middle values for even lengths.
pub fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Identifies one combination of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationKey {
    pub partition: String,
    pub activation: Activation,
    pub slope: f64,
    pub mode: FederationMode,
    pub scheme: WeightScheme,
}

impl CombinationKey {
    fn dir(&self) -> PathBuf {
        PathBuf::from(&self.partition)
            .join(format!("{}-{}", self.activation, self.slope))
            .join(format!("{}-{}", self.mode, self.scheme))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(flatten)]
    pub key: CombinationKey,
    /// `None` for a median summary entry.
    pub seed: Option<u64>,
    pub status: EntryStatus,
    pub error: Option<String>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub entries: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn all_succeeded(&self) -> bool {
        self.entries.iter().all(|e| e.status == EntryStatus::Ok)
    }
}

/// Result of one combination and seed.
#[derive(Debug, Clone)]
pub struct SeedResult {
    pub key: CombinationKey,
    pub seed: u64,
    pub table: ReportTable,
    pub outcome: FederationOutcome,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub results: Vec<SeedResult>,
    /// Median tables, one per combination with more than one successful seed.
    pub medians: Vec<(CombinationKey, ReportTable)>,
    pub manifest: RunManifest,
}

/// Participants for one partition and seed. Category vocabularies come from
/// the whole table; numeric ranges are fitted on each participant's own train split.
pub fn prepare_participants(
    raw: &RawTable,
    schema: &NormalizationStats,
    proportions: &[f64],
    test_fraction: f64,
    run_seed: u64,
) -> Result<Vec<ParticipantState>> {
    let spec = PartitionSpec {
        proportions: proportions.to_vec(),
        shuffle_seed: seed::derive(run_seed, &[1]),
    };
    let shares = data::partition_indices(raw.len(), &spec)?;
    shares
        .iter()
        .enumerate()
        .map(|(k, share)| {
            let local = raw.subset(share);
            let (train_idx, test_idx) = data::split_indices(
                local.len(),
                test_fraction,
                seed::derive(run_seed, &[2, k as u64]),
            )?;
            let (train_raw, test_raw) = (local.subset(&train_idx), local.subset(&test_idx));
            let stats = schema.refit_numeric(&train_raw)?;
            Ok(ParticipantState::new(
                (k + 1).to_string(),
                stats.transform(&train_raw)?,
                stats.transform(&test_raw)?,
            ))
        })
        .collect()
}

/// Executes every combination in `config`, writing artifacts under its output directory.
///
/// Fails only when the configuration or dataset cannot be used at all; a
/// failing combination is recorded in the manifest and the others continue.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let raw = data::load_csv(&config.dataset.path, &config.dataset.csv)?;
    let schema = NormalizationStats::fit(&raw)?;
    let out_dir = &config.output_dir;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_file(&out_dir.join("config.json"), &config.to_json()?)?;

    let mut results = Vec::new();
    let mut medians = Vec::new();
    let mut manifest = RunManifest::default();
    for partition in &config.partitions {
        for shape in &config.shapes {
            for &mode in &config.modes {
                for &scheme in &config.schemes {
                    let key = CombinationKey {
                        partition: partition.name.clone(),
                        activation: shape.activation,
                        slope: shape.slope,
                        mode,
                        scheme,
                    };
                    let mut tables = Vec::new();
                    for &seed in &config.seeds {
                        let attempt = run_one(config, &raw, &schema, partition, shape, &key, seed);
                        let (status, error, files) = match attempt {
                            Ok((result, files)) => {
                                tables.push(result.table.clone());
                                results.push(result);
                                (EntryStatus::Ok, None, files)
                            }
                            Err(e) => {
                                log::error!("combination {key:?} seed {seed} failed: {e}");
                                (EntryStatus::Failed, Some(e.to_string()), Vec::new())
                            }
                        };
                        manifest.entries.push(ManifestEntry {
                            key: key.clone(),
                            seed: Some(seed),
                            status,
                            error,
                            files,
                        });
                    }
                    if tables.len() > 1 {
                        let summary = median_table(&tables).and_then(|t| {
                            let files = t.emit(out_dir.join(key.dir()), "median")?;
                            Ok((t, files))
                        });
                        let entry = match summary {
                            Ok((table, files)) => {
                                medians.push((key.clone(), table));
                                (EntryStatus::Ok, None, files)
                            }
                            Err(e) => (EntryStatus::Failed, Some(e.to_string()), Vec::new()),
                        };
                        manifest.entries.push(ManifestEntry {
                            key: key.clone(),
                            seed: None,
                            status: entry.0,
                            error: entry.1,
                            files: entry.2,
                        });
                    }
                }
            }
        }
    }
    write_file(
        &out_dir.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(RunOutcome {
        results,
        medians,
        manifest,
    })
}

fn run_one(
    config: &ExperimentConfig,
    raw: &RawTable,
    schema: &NormalizationStats,
    partition: &PartitionConfig,
    shape: &ShapeConfig,
    key: &CombinationKey,
    seed: u64,
) -> Result<(SeedResult, Vec<PathBuf>)> {
    let participants = prepare_participants(
        raw,
        schema,
        &partition.proportions,
        config.test_fraction,
        seed,
    )?;
    let fed = FederationConfig {
        mode: key.mode,
        scheme: key.scheme,
        rounds: config.rounds,
        pso: config.pso,
        shape: ModelShape::new(schema.n_features(), 2, shape.activation, shape.slope),
        dynamics: config.dynamics,
        master_seed: seed::derive(seed, &[3]),
    };
    let outcome = run_federation(participants, &fed)?;
    let metadata = TableMetadata {
        partition: partition.name.clone(),
        mode: key.mode,
        scheme: key.scheme,
        activation: shape.activation,
        slope: shape.slope,
        rounds: config.rounds,
        seeds: vec![seed],
    };
    let table = ReportTable::from_outcome(&outcome, raw.len(), metadata)?;

    let dir = config
        .output_dir
        .join(key.dir())
        .join(format!("seed-{seed}"));
    let mut files = table.emit(&dir, "table")?;
    let rounds_json = dir.join("rounds.json");
    write_file(
        &rounds_json,
        &serde_json::to_string_pretty(&outcome.reports)?,
    )?;
    let rounds_csv = dir.join("rounds.csv");
    write_file(&rounds_csv, &rounds_csv_text(&outcome)?)?;
    files.extend([rounds_json, rounds_csv]);
    let models = dir.join("models");
    std::fs::create_dir_all(&models).map_err(|e| Error::io(&models, e))?;
    for (id, model) in outcome.final_models() {
        let path = models.join(format!("agent-{id}.json"));
        model.save(&path)?;
        files.push(path);
    }
    Ok((
        SeedResult {
            key: key.clone(),
            seed,
            table,
            outcome,
        },
        files,
    ))
}

/// Per-round, per-participant metrics, with round 0 the local baseline.
fn rounds_csv_text(outcome: &FederationOutcome) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "round",
        "agent",
        "accuracy",
        "precision",
        "train_fitness",
        "federated_loss",
    ])?;
    for p in &outcome.participants {
        for m in p.metric_history() {
            let loss = outcome
                .reports
                .iter()
                .find(|r| r.round == m.round)
                .map_or(String::new(), |r| r.federated_loss.to_string());
            w.write_record([
                m.round.to_string(),
                p.id().to_string(),
                m.accuracy.to_string(),
                m.precision.to_string(),
                m.train_fitness.to_string(),
                loss,
            ])?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("<rounds>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metadata() -> TableMetadata {
        TableMetadata {
            partition: "even".into(),
            mode: FederationMode::Blind,
            scheme: WeightScheme::Constant,
            activation: Activation::HyperbolicTangent,
            slope: 2.0,
            rounds: 20,
            seeds: vec![1],
        }
    }

    fn row(agent: &str, acc: f64) -> AgentRow {
        AgentRow {
            agent: agent.into(),
            size: 0.5,
            pos_rate: 0.25,
            acc_pre: acc,
            acc_post: acc + 0.1,
            prec_pre: 0.5,
            prec_post: 0.75,
        }
    }

    #[test]
    fn four_decimal_rounding() {
        assert_eq!(format_4dp(0.92105), "0.9211");
        assert_eq!(format_4dp(0.92104), "0.9210");
        assert_eq!(format_4dp(1.0), "1.0000");
        assert_eq!(format_4dp(0.0), "0.0000");
        assert_eq!(format_4dp(2.0 / 3.0), "0.6667");
        assert_eq!(format_4dp(0.00005), "0.0001");
    }

    #[test]
    fn csv_header_and_average() {
        let t = ReportTable::new(vec![row("1", 0.8), row("2", 0.6)], metadata()).unwrap();
        let text = t.to_csv().unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("agent,size,pos_rate,acc_pre,acc_post,prec_pre,prec_post")
        );
        assert_eq!(
            lines.next(),
            Some("1,0.5000,0.2500,0.8000,0.9000,0.5000,0.7500")
        );
        assert_eq!(
            lines.nth(1),
            Some("Avg.,0.5000,0.2500,0.7000,0.8000,0.5000,0.7500")
        );
        let (rows, avg) = parse_table_csv(&text).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((avg.acc_pre - 0.7).abs() < 1e-12);
    }

    #[test]
    fn empty_table_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(ReportTable::new(vec![], metadata()).is_err());
        assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
    }

    #[test]
    fn text_rendering_has_report_columns() {
        let t = ReportTable::new(vec![row("1", 0.8)], metadata()).unwrap();
        let text = t.to_text();
        assert!(text.contains("Accuracy Pre-FL"));
        assert!(text.lines().last().unwrap().starts_with("Avg."));
    }

    #[test]
    fn median_of_tables() {
        let tables: Vec<ReportTable> = [0.5, 0.9, 0.7]
            .iter()
            .map(|&a| ReportTable::new(vec![row("1", a)], metadata()).unwrap())
            .collect();
        let m = median_table(&tables).unwrap();
        assert_eq!(m.rows[0].acc_pre, 0.7);
        assert_eq!(m.metadata.seeds.len(), 3);
        assert_eq!(median(vec![4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list::<f64>("0.2, 0.8").unwrap(), vec![0.2, 0.8]);
        assert_eq!(parse_list::<u64>("1,2,3").unwrap(), vec![1, 2, 3]);
        assert!(parse_list::<u64>("1,x").is_err());
    }

    #[test]
    fn overrides_replace_fields() {
        let mut cfg = ExperimentConfig::from_json(
            r#"{"dataset":{"path":"a.csv","label_column":"y"},
                "partitions":[{"name":"even","proportions":[0.5,0.5]}],
                "modes":["blind"],"schemes":["constant"],
                "shapes":[{"activation":"tanh","slope":2.0}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.rounds, 20);
        assert_eq!(cfg.test_fraction, 0.2);
        cfg.apply(&Overrides {
            mode: Some(FederationMode::BlendedBlind),
            scheme: Some(WeightScheme::PrecisionBased),
            slope: Some(5.0),
            activation: Some(Activation::UnipolarSigmoid),
            agents: Some(vec![0.25, 0.75]),
            seeds: Some(vec![3, 4]),
            rounds: Some(2),
            ..Overrides::default()
        });
        assert_eq!(cfg.modes, vec![FederationMode::BlendedBlind]);
        assert_eq!(cfg.schemes, vec![WeightScheme::PrecisionBased]);
        assert_eq!(cfg.shapes[0].slope, 5.0);
        assert_eq!(cfg.partitions[0].proportions, vec![0.25, 0.75]);
        assert_eq!(cfg.seeds, vec![3, 4]);
        assert_eq!(cfg.rounds, 2);
        assert!(cfg.validate().is_ok());
    }
}
