//! Feature/label ingestion, joining and deterministic splitting.
//!
//! Feature files hold one video per line, `video_id,f0,f1,...,f{D-1}`; label
//! files hold `video_id,short_term,long_term`. Either may start with a header
//! line beginning `video_id`. Features pass through untouched: the model's
//! leading BatchNorm layer does the input normalisation.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Width of the clip descriptors this toolkit was built around.
pub const DEFAULT_FEATURE_DIM: usize = 4096;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: file contains no data lines")]
    Empty { path: PathBuf },
    #[error("{path}:{line}: expected {expected} feature values, found {found}")]
    Dimension {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: column {column}: cannot parse {value:?} as a real number")]
    Parse {
        path: PathBuf,
        line: usize,
        column: String,
        value: String,
    },
    #[error("{path}:{line}: column {column}: value {value} is not finite")]
    NonFinite {
        path: PathBuf,
        line: usize,
        column: String,
        value: f64,
    },
    #[error("{path}:{line}: column {column}: score {value} outside [0, 1]")]
    OutOfRange {
        path: PathBuf,
        line: usize,
        column: String,
        value: f64,
    },
    #[error("{path}:{line}: missing column {column}")]
    MissingColumn {
        path: PathBuf,
        line: usize,
        column: String,
    },
    #[error("{path}:{line}: expected 3 columns, found {found}")]
    ExtraColumns {
        path: PathBuf,
        line: usize,
        found: usize,
    },
    #[error("{path}:{line}: invalid video id {id:?}")]
    InvalidId {
        path: PathBuf,
        line: usize,
        id: String,
    },
    #[error("{path}:{line}: duplicate video id {id:?}")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },
    #[error("feature and label files share no video ids")]
    EmptyIntersection,
    #[error("dataset: {0}")]
    InvalidDataset(String),
    #[error("split: {0}")]
    InvalidSplit(String),
}

pub type Result<T, E = DataError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub video_id: String,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub video_id: String,
    pub short_term: f64,
    pub long_term: f64,
}

/// Which of the two memorability scores a model regresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    ShortTerm,
    LongTerm,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::ShortTerm => "short",
            Target::LongTerm => "long",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "short" | "short_term" => Ok(Target::ShortTerm),
            "long" | "long_term" => Ok(Target::LongTerm),
            other => Err(format!("unknown target {other:?} (expected short or long)")),
        }
    }
}

/// One joined row: features plus both scores.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    pub video_id: String,
    pub features: Vec<f64>,
    pub short_term: f64,
    pub long_term: f64,
}

impl LabeledRecord {
    pub fn score(&self, target: Target) -> f64 {
        match target {
            Target::ShortTerm => self.short_term,
            Target::LongTerm => self.long_term,
        }
    }
}

/// Aligned features and labels with unique ids and a shared feature width.
///
/// Label range is checked when labels are read from disk, not here, so that
/// tests can build datasets with poisoned scores.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    records: Vec<LabeledRecord>,
    feature_dim: usize,
}

impl LabeledDataset {
    pub fn new(records: Vec<LabeledRecord>, feature_dim: usize) -> Result<Self> {
        if feature_dim == 0 {
            return Err(DataError::InvalidDataset(
                "feature_dim must be positive".into(),
            ));
        }
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.features.len() != feature_dim {
                return Err(DataError::InvalidDataset(format!(
                    "record {:?} has {} features, expected {feature_dim}",
                    r.video_id,
                    r.features.len()
                )));
            }
            if !seen.insert(r.video_id.as_str()) {
                return Err(DataError::InvalidDataset(format!(
                    "duplicate video id {:?}",
                    r.video_id
                )));
            }
        }
        Ok(LabeledDataset {
            records,
            feature_dim,
        })
    }

    pub fn records(&self) -> &[LabeledRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn ids(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.video_id.as_str()).collect()
    }

    pub fn targets(&self, target: Target) -> Vec<f64> {
        self.records.iter().map(|r| r.score(target)).collect()
    }

    /// Projects the dataset back onto the feature file schema.
    pub fn feature_records(&self) -> Vec<FeatureRecord> {
        self.records
            .iter()
            .map(|r| FeatureRecord {
                video_id: r.video_id.clone(),
                features: r.features.clone(),
            })
            .collect()
    }

    /// Projects the dataset back onto the label file schema.
    pub fn label_records(&self) -> Vec<LabelRecord> {
        self.records
            .iter()
            .map(|r| LabelRecord {
                video_id: r.video_id.clone(),
                short_term: r.short_term,
                long_term: r.long_term,
            })
            .collect()
    }

    fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            feature_dim: self.feature_dim,
        }
    }
}

/// Result of [`join`]: the dataset plus how many ids each side lost.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinOutcome {
    pub dataset: LabeledDataset,
    pub dropped_features: usize,
    pub dropped_labels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub val_fraction: f64,
    pub seed: u64,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(|c| c == ',' || c.is_whitespace())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Yields `(1-based line number, line)` for data lines, skipping blank lines
/// and a leading `video_id` header.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut header_checked = false;
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .filter(move |(_, l)| {
            if header_checked {
                return true;
            }
            header_checked = true;
            !l.trim_start().starts_with("video_id")
        })
}

fn parse_real(path: &Path, line: usize, column: &str, value: &str) -> Result<f64> {
    let v: f64 = value.trim().parse().map_err(|_| DataError::Parse {
        path: path.to_path_buf(),
        line,
        column: column.to_string(),
        value: value.to_string(),
    })?;
    if !v.is_finite() {
        return Err(DataError::NonFinite {
            path: path.to_path_buf(),
            line,
            column: column.to_string(),
            value: v,
        });
    }
    Ok(v)
}

fn parse_id(path: &Path, line: usize, id: &str) -> Result<String> {
    let id = id.trim();
    if !valid_id(id) {
        return Err(DataError::InvalidId {
            path: path.to_path_buf(),
            line,
            id: id.to_string(),
        });
    }
    Ok(id.to_string())
}

/// Parses feature-file text. `path` is only used in error messages.
pub fn parse_features(text: &str, path: &Path, expected_dim: usize) -> Result<Vec<FeatureRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line, content) in data_lines(text) {
        let mut fields = content.split(',');
        let id = parse_id(path, line, fields.next().unwrap_or(""))?;
        let values: Vec<&str> = fields.collect();
        if values.len() != expected_dim {
            return Err(DataError::Dimension {
                path: path.to_path_buf(),
                line,
                expected: expected_dim,
                found: values.len(),
            });
        }
        let features = values
            .iter()
            .enumerate()
            .map(|(j, v)| parse_real(path, line, &format!("f{j}"), v))
            .collect::<Result<Vec<_>>>()?;
        if !seen.insert(id.clone()) {
            return Err(DataError::DuplicateId {
                path: path.to_path_buf(),
                line,
                id,
            });
        }
        out.push(FeatureRecord {
            video_id: id,
            features,
        });
    }
    if out.is_empty() {
        return Err(DataError::Empty {
            path: path.to_path_buf(),
        });
    }
    Ok(out)
}

pub fn load_features(path: impl AsRef<Path>, expected_dim: usize) -> Result<Vec<FeatureRecord>> {
    let path = path.as_ref();
    parse_features(&read_text(path)?, path, expected_dim)
}

/// Like [`load_features`] but an empty file yields no records instead of an
/// error. Prediction over an empty feature file is a valid no-op.
pub fn load_features_allow_empty(
    path: impl AsRef<Path>,
    expected_dim: usize,
) -> Result<Vec<FeatureRecord>> {
    match load_features(path, expected_dim) {
        Err(DataError::Empty { .. }) => Ok(Vec::new()),
        other => other,
    }
}

pub fn parse_labels(text: &str, path: &Path) -> Result<Vec<LabelRecord>> {
    const COLUMNS: [&str; 2] = ["short_term", "long_term"];
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line, content) in data_lines(text) {
        let fields: Vec<&str> = content.split(',').collect();
        let id = parse_id(path, line, fields[0])?;
        if fields.len() > 3 {
            return Err(DataError::ExtraColumns {
                path: path.to_path_buf(),
                line,
                found: fields.len(),
            });
        }
        let mut scores = [0.0; 2];
        for (k, column) in COLUMNS.iter().enumerate() {
            let raw = fields.get(k + 1).ok_or_else(|| DataError::MissingColumn {
                path: path.to_path_buf(),
                line,
                column: column.to_string(),
            })?;
            let v = parse_real(path, line, column, raw)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(DataError::OutOfRange {
                    path: path.to_path_buf(),
                    line,
                    column: column.to_string(),
                    value: v,
                });
            }
            scores[k] = v;
        }
        if !seen.insert(id.clone()) {
            return Err(DataError::DuplicateId {
                path: path.to_path_buf(),
                line,
                id,
            });
        }
        out.push(LabelRecord {
            video_id: id,
            short_term: scores[0],
            long_term: scores[1],
        });
    }
    if out.is_empty() {
        return Err(DataError::Empty {
            path: path.to_path_buf(),
        });
    }
    Ok(out)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<LabelRecord>> {
    let path = path.as_ref();
    parse_labels(&read_text(path)?, path)
}

/// Inner join on video id, in feature-file order.
pub fn join(features: &[FeatureRecord], labels: &[LabelRecord]) -> Result<JoinOutcome> {
    let by_id: HashMap<&str, &LabelRecord> =
        labels.iter().map(|l| (l.video_id.as_str(), l)).collect();
    let mut records = Vec::new();
    let mut matched = HashSet::new();
    for f in features {
        if let Some(l) = by_id.get(f.video_id.as_str()) {
            matched.insert(f.video_id.as_str());
            records.push(LabeledRecord {
                video_id: f.video_id.clone(),
                features: f.features.clone(),
                short_term: l.short_term,
                long_term: l.long_term,
            });
        }
    }
    if records.is_empty() {
        return Err(DataError::EmptyIntersection);
    }
    let feature_dim = records[0].features.len();
    let dropped_features = features.len() - records.len();
    let dropped_labels = labels
        .iter()
        .filter(|l| !matched.contains(l.video_id.as_str()))
        .count();
    Ok(JoinOutcome {
        dataset: LabeledDataset::new(records, feature_dim)?,
        dropped_features,
        dropped_labels,
    })
}

/// Seeded shuffle, then the first `ceil(val_fraction * N)` records go to
/// validation. Both halves keep the shuffled order.
pub fn split(
    dataset: &LabeledDataset,
    spec: SplitSpec,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let n = dataset.len();
    if n < 2 {
        return Err(DataError::InvalidSplit(format!(
            "need at least 2 records, have {n}"
        )));
    }
    if !(spec.val_fraction > 0.0 && spec.val_fraction < 1.0) {
        return Err(DataError::InvalidSplit(format!(
            "val_fraction {} must lie in (0, 1)",
            spec.val_fraction
        )));
    }
    let n_val = (spec.val_fraction * n as f64).ceil() as usize;
    if n_val == 0 || n_val >= n {
        return Err(DataError::InvalidSplit(format!(
            "val_fraction {} on {n} records leaves an empty side",
            spec.val_fraction
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let (val, train) = order.split_at(n_val);
    Ok((dataset.subset(train), dataset.subset(val)))
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>,
) -> Result<()> {
    let io_err = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err)
}

/// Writes a real with 17 significant digits, enough to round-trip any f64.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_features(path: impl AsRef<Path>, records: &[FeatureRecord]) -> Result<()> {
    write_file(path.as_ref(), |w| {
        for r in records {
            write!(w, "{}", r.video_id)?;
            for v in &r.features {
                write!(w, ",{}", format_real(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    })
}

pub fn write_labels(path: impl AsRef<Path>, records: &[LabelRecord]) -> Result<()> {
    write_file(path.as_ref(), |w| {
        writeln!(w, "video_id,short_term,long_term")?;
        for r in records {
            writeln!(
                w,
                "{},{},{}",
                r.video_id,
                format_real(r.short_term),
                format_real(r.long_term)
            )?;
        }
        Ok(())
    })
}
