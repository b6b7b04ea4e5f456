//! Dataset ingestion, encoding, partitioning and splitting.
//!
//! The flow is `load_csv` → [`RawTable`] → (optionally [`RawTable::subset`] per
//! participant) → [`encode_and_normalize`] → [`Dataset`]. Numeric columns are
//! min-max scaled to `[0, 1]`, categorical columns become indicator columns.

use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvOptions {
    pub label_column: String,
    pub positive_label: String,
    pub delimiter: char,
    /// Cells equal to this (or empty) mark a missing value; such rows are dropped.
    pub missing_marker: String,
    /// Columns ignored entirely, e.g. record identifiers.
    pub drop_columns: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            label_column: "label".into(),
            positive_label: "1".into(),
            delimiter: ',',
            missing_marker: "?".into(),
            drop_columns: Vec::new(),
        }
    }
}

/// Parsed but not yet encoded rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub labels: Vec<bool>,
    /// Rows discarded because of missing values.
    pub dropped_rows: usize,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> RawTable {
        RawTable {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            dropped_rows: 0,
        }
    }

    pub fn positive_rate(&self) -> f64 {
        positive_rate(&self.labels)
    }
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, options)
}

pub fn read_csv(reader: impl Read, options: &CsvOptions) -> Result<RawTable> {
    let delimiter = u8::try_from(options.delimiter).map_err(|_| {
        Error::InvalidConfig(format!("delimiter {:?} is not ASCII", options.delimiter))
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == options.label_column)
        .ok_or_else(|| {
            Error::InvalidData(format!("label column `{}` not found", options.label_column))
        })?;
    let keep: Vec<usize> = (0..headers.len())
        .filter(|&i| i != label_idx && !options.drop_columns.iter().any(|d| d == &headers[i]))
        .collect();

    let mut table = RawTable {
        columns: keep.iter().map(|&i| headers[i].to_string()).collect(),
        rows: Vec::new(),
        labels: Vec::new(),
        dropped_rows: 0,
    };
    let is_missing = |v: &str| v.is_empty() || v == options.missing_marker;
    for record in rdr.records() {
        let record = record?;
        let label = record.get(label_idx).unwrap_or("");
        if is_missing(label)
            || keep
                .iter()
                .any(|&i| is_missing(record.get(i).unwrap_or("")))
        {
            table.dropped_rows += 1;
            continue;
        }
        table.labels.push(label == options.positive_label);
        table
            .rows
            .push(keep.iter().map(|&i| record[i].to_string()).collect());
    }
    if table.dropped_rows > 0 {
        log::info!("dropped {} rows with missing values", table.dropped_rows);
    }
    Ok(table)
}

/// Encoding of one raw column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnStats {
    Numeric {
        name: String,
        min: f64,
        max: f64,
    },
    Categorical {
        name: String,
        categories: Vec<String>,
    },
}

impl ColumnStats {
    pub fn name(&self) -> &str {
        match self {
            ColumnStats::Numeric { name, .. } | ColumnStats::Categorical { name, .. } => name,
        }
    }

    fn width(&self) -> usize {
        match self {
            ColumnStats::Numeric { .. } => 1,
            ColumnStats::Categorical { categories, .. } => categories.len(),
        }
    }
}

/// Per-column statistics needed to reproduce an encoding; the JSON sidecar of a cached dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub columns: Vec<ColumnStats>,
}

impl NormalizationStats {
    /// A column is categorical as soon as one of its cells is not a number.
    pub fn fit(raw: &RawTable) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::InvalidData(format!(
                "encoding needs at least 2 rows, got {}",
                raw.len()
            )));
        }
        let columns = raw
            .columns
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let cells = raw.rows.iter().map(|r| r[c].as_str());
                match cells
                    .clone()
                    .map(str::parse::<f64>)
                    .collect::<Result<Vec<_>, _>>()
                {
                    Ok(values) => {
                        let (min, max) = min_max(&values);
                        if min == max {
                            log::debug!("column `{name}` is constant; encoded as 0.5");
                        }
                        ColumnStats::Numeric {
                            name: name.clone(),
                            min,
                            max,
                        }
                    }
                    Err(_) => {
                        let mut categories: Vec<String> = cells.map(str::to_string).collect();
                        categories.sort();
                        categories.dedup();
                        ColumnStats::Categorical {
                            name: name.clone(),
                            categories,
                        }
                    }
                }
            })
            .collect();
        Ok(NormalizationStats { columns })
    }

    /// Keeps column kinds and category vocabularies, re-fitting numeric ranges on `raw`.
    pub fn refit_numeric(&self, raw: &RawTable) -> Result<Self> {
        Error::check_len("raw table columns", self.columns.len(), raw.columns.len())?;
        if raw.is_empty() {
            return Err(Error::Empty("raw table"));
        }
        let columns = self
            .columns
            .iter()
            .enumerate()
            .map(|(c, stats)| match stats {
                ColumnStats::Numeric { name, .. } => {
                    let values = raw
                        .rows
                        .iter()
                        .map(|r| parse_numeric(name, &r[c]))
                        .collect::<Result<Vec<_>>>()?;
                    let (min, max) = min_max(&values);
                    Ok(ColumnStats::Numeric {
                        name: name.clone(),
                        min,
                        max,
                    })
                }
                categorical => Ok(categorical.clone()),
            })
            .collect::<Result<_>>()?;
        Ok(NormalizationStats { columns })
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .flat_map(|c| match c {
                ColumnStats::Numeric { name, .. } => vec![name.clone()],
                ColumnStats::Categorical { name, categories } => {
                    categories.iter().map(|k| format!("{name}={k}")).collect()
                }
            })
            .collect()
    }

    pub fn n_features(&self) -> usize {
        self.columns.iter().map(ColumnStats::width).sum()
    }

    /// Encodes `raw` with these statistics. Values outside the fitted range are
    /// clipped to `[0, 1]`; unseen categories get all-zero indicators.
    pub fn transform(&self, raw: &RawTable) -> Result<Dataset> {
        Error::check_len("raw table columns", self.columns.len(), raw.columns.len())?;
        let width = self.n_features();
        let mut features = Vec::with_capacity(raw.len());
        for row in &raw.rows {
            let mut out = Vec::with_capacity(width);
            for (stats, cell) in self.columns.iter().zip(row) {
                match stats {
                    ColumnStats::Numeric { name, min, max } => {
                        let x = parse_numeric(name, cell)?;
                        out.push(if max > min {
                            ((x - min) / (max - min)).clamp(0.0, 1.0)
                        } else {
                            0.5
                        });
                    }
                    ColumnStats::Categorical { categories, .. } => {
                        out.extend(categories.iter().map(|k| if k == cell { 1.0 } else { 0.0 }));
                    }
                }
            }
            features.push(out);
        }
        Ok(Dataset {
            features,
            labels: raw.labels.clone(),
            feature_names: self.feature_names(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn parse_numeric(column: &str, cell: &str) -> Result<f64> {
    cell.parse().map_err(|_| {
        Error::InvalidData(format!(
            "non-numeric value `{cell}` in numeric column `{column}`"
        ))
    })
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Fits statistics on `raw` and encodes it.
pub fn encode_and_normalize(raw: &RawTable) -> Result<(Dataset, NormalizationStats)> {
    let stats = NormalizationStats::fit(raw)?;
    let dataset = stats.transform(raw)?;
    Ok((dataset, stats))
}

/// Encoded binary-labeled rows with every feature in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<bool>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        Error::check_len("dataset labels", features.len(), labels.len())?;
        for row in &features {
            Error::check_len("dataset row", feature_names.len(), row.len())?;
            if let Some(bad) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(Error::InvalidData(format!(
                    "feature value {bad} outside [0, 1]"
                )));
            }
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Share of positive labels; 0 for an empty dataset.
    pub fn positive_rate(&self) -> f64 {
        positive_rate(&self.labels)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Writes the features and a trailing `label` column (0/1) as CSV.
    pub fn write_csv(&self, out: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.feature_names.clone();
        header.push("label".into());
        w.write_record(&header)?;
        for (row, &label) in self.features.iter().zip(&self.labels) {
            let mut record: Vec<String> = row.iter().map(f64::to_string).collect();
            record.push(u8::from(label).to_string());
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<dataset>", e))?;
        Ok(())
    }

    /// Caches the dataset as `<path>` plus a `<path>.stats.json` sidecar.
    pub fn save_with_stats(
        &self,
        path: impl AsRef<Path>,
        stats: &NormalizationStats,
    ) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let mut sidecar = path.as_os_str().to_owned();
        sidecar.push(".stats.json");
        stats.save(std::path::PathBuf::from(sidecar))
    }
}

fn positive_rate(labels: &[bool]) -> f64 {
    if labels.is_empty() {
        0.0
    } else {
        labels.iter().filter(|&&l| l).count() as f64 / labels.len() as f64
    }
}

/// Shares of the rows handed to each participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub proportions: Vec<f64>,
    pub shuffle_seed: u64,
}

impl PartitionSpec {
    pub fn even(parts: usize, shuffle_seed: u64) -> Self {
        PartitionSpec {
            proportions: vec![1.0 / parts as f64; parts],
            shuffle_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.proportions.is_empty() {
            return Err(Error::InvalidConfig(
                "partition needs at least one share".into(),
            ));
        }
        if let Some(bad) = self
            .proportions
            .iter()
            .find(|p| !(**p > 0.0 && p.is_finite()))
        {
            return Err(Error::InvalidConfig(format!(
                "partition share {bad} is not positive"
            )));
        }
        let total: f64 = self.proportions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "partition shares sum to {total}, not 1"
            )));
        }
        Ok(())
    }
}

/// Row counts per share by largest-remainder rounding; ties go to the earlier share.
pub fn partition_counts(n_rows: usize, proportions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = proportions.iter().map(|p| p * n_rows as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(n_rows.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Shuffles row indices and cuts them into contiguous shares.
pub fn partition_indices(n_rows: usize, spec: &PartitionSpec) -> Result<Vec<Vec<usize>>> {
    spec.validate()?;
    let counts = partition_counts(n_rows, &spec.proportions);
    if let Some((i, c)) = counts.iter().enumerate().find(|(_, &c)| c < 2) {
        return Err(Error::InvalidData(format!(
            "share {i} would receive {c} rows; every share needs at least 2"
        )));
    }
    let mut order: Vec<usize> = (0..n_rows).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.shuffle_seed));
    let mut out = Vec::with_capacity(counts.len());
    let mut start = 0;
    for c in counts {
        out.push(order[start..start + c].to_vec());
        start += c;
    }
    Ok(out)
}

/// Splits a dataset across participants. No class balancing is applied, so
/// shares generally differ in positive rate.
pub fn partition(dataset: &Dataset, spec: &PartitionSpec) -> Result<Vec<Dataset>> {
    Ok(partition_indices(dataset.len(), spec)?
        .iter()
        .map(|idx| dataset.subset(idx))
        .collect())
}

/// Seeded shuffle into `(train, test)` index sets. The test side gets
/// `floor(n * test_fraction)` rows.
pub fn split_indices(
    n_rows: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n_test = (n_rows as f64 * test_fraction).floor() as usize;
    if n_test == 0 || n_test == n_rows {
        return Err(Error::InvalidData(format!(
            "splitting {n_rows} rows with test fraction {test_fraction} leaves one side empty"
        )));
    }
    let mut order: Vec<usize> = (0..n_rows).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order.split_off(n_rows - n_test);
    Ok((order, test))
}

pub fn train_test_split(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset.len(), test_fraction, seed)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(label: &str, positive: &str) -> CsvOptions {
        CsvOptions {
            label_column: label.into(),
            positive_label: positive.into(),
            ..CsvOptions::default()
        }
    }

    #[test]
    fn labels_from_positive_marker() {
        let csv = "x,diag\n1,M\n2,B\n3,M\n";
        let t = read_csv(csv.as_bytes(), &opts("diag", "M")).unwrap();
        assert_eq!(t.labels, vec![true, false, true]);
        assert_eq!(t.columns, vec!["x"]);
    }

    #[test]
    fn missing_rows_dropped() {
        let csv = "a,b,y\n1,2,1\n?,3,0\n4,5,1\n";
        let t = read_csv(csv.as_bytes(), &opts("y", "1")).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dropped_rows, 1);
    }

    #[test]
    fn missing_label_column() {
        assert!(matches!(
            read_csv("a,b\n1,2\n".as_bytes(), &opts("y", "1")),
            Err(Error::InvalidData(_))
        ));
        assert!(load_csv("/nonexistent/file.csv", &opts("y", "1")).is_err());
    }

    #[test]
    fn drop_columns_and_delimiter() {
        let csv = "id;a;y\n7;0.5;1\n8;1.5;0\n";
        let o = CsvOptions {
            delimiter: ';',
            drop_columns: vec!["id".into()],
            ..opts("y", "1")
        };
        let t = read_csv(csv.as_bytes(), &o).unwrap();
        assert_eq!(t.columns, vec!["a"]);
        assert_eq!(t.rows, vec![vec!["0.5"], vec!["1.5"]]);
    }

    #[test]
    fn encoding_examples() {
        let csv = "n,c,k,y\n2,a,7,1\n4,b,7,0\n6,a,7,1\n";
        let t = read_csv(csv.as_bytes(), &opts("y", "1")).unwrap();
        let (d, stats) = encode_and_normalize(&t).unwrap();
        assert_eq!(d.feature_names, vec!["n", "c=a", "c=b", "k"]);
        let col = |j: usize| d.features.iter().map(|r| r[j]).collect::<Vec<_>>();
        assert_eq!(col(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(col(1), vec![1.0, 0.0, 1.0]);
        assert_eq!(col(2), vec![0.0, 1.0, 0.0]);
        assert_eq!(col(3), vec![0.5, 0.5, 0.5]);
        let json = serde_json::to_value(&stats).unwrap();
        assert_eq!(json["columns"][0]["min"], 2.0);
        assert_eq!(
            json["columns"][1]["categories"],
            serde_json::json!(["a", "b"])
        );
    }

    #[test]
    fn refit_keeps_vocabulary() {
        let csv = "n,c,y\n0,a,1\n10,b,0\n5,c,1\n";
        let t = read_csv(csv.as_bytes(), &opts("y", "1")).unwrap();
        let global = NormalizationStats::fit(&t).unwrap();
        let local = global.refit_numeric(&t.subset(&[1, 2])).unwrap();
        assert_eq!(local.n_features(), global.n_features());
        let d = local.transform(&t).unwrap();
        // 0 falls below the local range [5, 10] and is clipped.
        assert_eq!(d.features[0][0], 0.0);
        assert_eq!(d.features[2][0], 0.0);
        assert_eq!(d.features[1][0], 1.0);
    }

    #[test]
    fn too_few_rows_to_encode() {
        let t = read_csv("a,y\n1,1\n".as_bytes(), &opts("y", "1")).unwrap();
        assert!(encode_and_normalize(&t).is_err());
    }

    #[test]
    fn partition_counts_largest_remainder() {
        assert_eq!(partition_counts(100, &[0.2; 5]), vec![20; 5]);
        // quotas 28.45, 22.76, 238.98, 113.8, 165.01: floors sum to 566 and the
        // three largest remainders (.98, .80, .76) each take one more row.
        let c = partition_counts(569, &[0.05, 0.04, 0.42, 0.20, 0.29]);
        assert_eq!(c, vec![28, 23, 239, 114, 165]);
        assert_eq!(c.iter().sum::<usize>(), 569);
    }

    fn toy(n: usize) -> Dataset {
        Dataset::new(
            (0..n).map(|i| vec![i as f64 / n as f64]).collect(),
            (0..n).map(|i| i % 3 == 0).collect(),
            vec!["x".into()],
        )
        .unwrap()
    }

    #[test]
    fn identity_partition_reshuffles() {
        let d = toy(30);
        let parts = partition(
            &d,
            &PartitionSpec {
                proportions: vec![1.0],
                shuffle_seed: 4,
            },
        )
        .unwrap();
        assert_eq!(parts.len(), 1);
        let mut got: Vec<f64> = parts[0].features.iter().map(|r| r[0]).collect();
        assert_ne!(got, d.features.iter().map(|r| r[0]).collect::<Vec<_>>());
        got.sort_by(f64::total_cmp);
        assert_eq!(got, d.features.iter().map(|r| r[0]).collect::<Vec<_>>());
    }

    #[test]
    fn partition_errors() {
        let d = toy(10);
        assert!(partition(
            &d,
            &PartitionSpec {
                proportions: vec![0.95, 0.05],
                shuffle_seed: 0
            }
        )
        .is_err());
        assert!(partition(
            &d,
            &PartitionSpec {
                proportions: vec![0.5, 0.6],
                shuffle_seed: 0
            }
        )
        .is_err());
        assert!(partition(
            &d,
            &PartitionSpec {
                proportions: vec![],
                shuffle_seed: 0
            }
        )
        .is_err());
        assert!(partition(
            &d,
            &PartitionSpec {
                proportions: vec![1.5, -0.5],
                shuffle_seed: 0
            }
        )
        .is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let (tr, te) = split_indices(10, 0.2, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        assert!(te.iter().all(|i| !tr.contains(i)));
        assert_eq!(split_indices(10, 0.2, 1).unwrap(), (tr, te));
        let (tr, te) = split_indices(23, 0.2, 5).unwrap();
        assert_eq!((tr.len(), te.len()), (19, 4));
    }

    #[test]
    fn split_errors() {
        assert!(split_indices(3, 0.2, 0).is_err());
        assert!(split_indices(10, 0.0, 0).is_err());
        assert!(split_indices(10, 1.0, 0).is_err());
    }

    #[test]
    fn cached_dataset_with_sidecar() {
        let csv = "n,c,y\n0,a,1\n10,b,0\n";
        let t = read_csv(csv.as_bytes(), &opts("y", "1")).unwrap();
        let (d, stats) = encode_and_normalize(&t).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("part.csv");
        d.save_with_stats(&path, &stats).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "n,c=a,c=b,label\n0,1,0,1\n1,0,1,0\n");
        let back = NormalizationStats::load(dir.path().join("part.csv.stats.json")).unwrap();
        assert_eq!(back, stats);
    }
}
