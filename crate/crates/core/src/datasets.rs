//! The `together` and `split` feature matrices.
//!
//! `together` runs the feature battery on each whole trip. `split` runs it
//! separately on the daytime and night-time subsequences (each re-differenced
//! after filtering, so a night gap inside the day subsequence becomes one
//! long step) and prefixes the columns with `day_` / `night_`.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featex::{self, is_missing, VelocityThresholds, MISSING};
use crate::geokin;
use crate::matrix::Matrix;
use crate::trajdata::{Corpus, Label, Trajectory, TrajectoryPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetMode {
    Together,
    Split,
}

impl DatasetMode {
    pub const ALL: [DatasetMode; 2] = [DatasetMode::Together, DatasetMode::Split];

    pub fn name(self) -> &'static str {
        match self {
            DatasetMode::Together => "together",
            DatasetMode::Split => "split",
        }
    }

    /// The point subsets whose feature blocks make up a row, in column order.
    pub fn subsets(self) -> &'static [Subset] {
        match self {
            DatasetMode::Together => &[Subset::All],
            DatasetMode::Split => &[Subset::Day, Subset::Night],
        }
    }
}

impl std::fmt::Display for DatasetMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DatasetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "together" => Ok(DatasetMode::Together),
            "split" => Ok(DatasetMode::Split),
            other => Err(Error::Config(format!("unknown dataset mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    All,
    Day,
    Night,
}

impl Subset {
    pub fn name(self) -> &'static str {
        match self {
            Subset::All => "all",
            Subset::Day => "day",
            Subset::Night => "night",
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            Subset::All => "",
            Subset::Day => "day_",
            Subset::Night => "night_",
        }
    }

    pub fn select(self, traj: &Trajectory) -> Vec<TrajectoryPoint> {
        traj.points()
            .iter()
            .filter(|p| match self {
                Subset::All => true,
                Subset::Day => p.daytime,
                Subset::Night => !p.daytime,
            })
            .copied()
            .collect()
    }
}

/// Pools the velocity series of every bird (restricted to `subset`, in bird
/// id order) and reduces them to exceedance thresholds.
pub fn global_velocity_thresholds(corpus: &Corpus, subset: Subset) -> Result<VelocityThresholds> {
    let mut pool = Vec::new();
    for t in corpus.trajectories() {
        pool.extend(geokin::velocities(&subset.select(t)).values);
    }
    VelocityThresholds::from_pool(&pool).ok_or(Error::EmptyPool(subset.name()))
}

/// Thresholds for each block of a dataset mode. A block whose pool is empty
/// (e.g. no night fixes anywhere) has `None`, and its exceedance columns
/// are missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetThresholds {
    pub mode: DatasetMode,
    pub blocks: Vec<Option<VelocityThresholds>>,
}

pub fn fit_thresholds(corpus: &Corpus, mode: DatasetMode) -> Result<DatasetThresholds> {
    let blocks = mode
        .subsets()
        .iter()
        .map(|&s| match global_velocity_thresholds(corpus, s) {
            Ok(th) => Ok(Some(th)),
            Err(Error::EmptyPool(_)) if mode == DatasetMode::Split => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    Ok(DatasetThresholds { mode, blocks })
}

pub fn column_names(mode: DatasetMode) -> Vec<String> {
    let base = featex::feature_names();
    mode.subsets()
        .iter()
        .flat_map(|s| base.iter().map(move |n| format!("{}{n}", s.prefix())))
        .collect()
}

/// Per-bird feature rows with a shared column schema. Missing entries are
/// `NaN` until [`impute`] fills them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub bird_ids: Vec<String>,
    pub columns: Vec<String>,
    pub values: Matrix,
    pub labels: Option<Vec<Label>>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.bird_ids.len()
    }

    pub fn has_missing(&self) -> bool {
        self.values.as_slice().iter().any(|v| is_missing(*v))
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            bird_ids: rows.iter().map(|&r| self.bird_ids[r].clone()).collect(),
            columns: self.columns.clone(),
            values: self.values.select_rows(rows),
            labels: self.labels.as_ref().map(|l| rows.iter().map(|&r| l[r]).collect()),
        }
    }

    pub fn check_schema(&self, other: &FeatureMatrix) -> Result<()> {
        if self.columns != other.columns {
            return Err(Error::SchemaMismatch(format!(
                "{} columns vs {} columns with differing names",
                self.columns.len(),
                other.columns.len()
            )));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bird_id");
        if self.labels.is_some() {
            out.push_str(",label");
        }
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (i, id) in self.bird_ids.iter().enumerate() {
            out.push_str(id);
            if let Some(labels) = &self.labels {
                let _ = write!(out, ",{}", labels[i].as_u8());
            }
            for &v in self.values.row(i) {
                out.push(',');
                if !is_missing(v) {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<FeatureMatrix> {
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        if header.get(0) != Some("bird_id") {
            return Err(Error::MalformedRow {
                line: 1,
                reason: "first column must be `bird_id`".into(),
            });
        }
        let has_label = header.get(1) == Some("label");
        let first = if has_label { 2 } else { 1 };
        let columns: Vec<String> = header.iter().skip(first).map(str::to_owned).collect();

        let mut bird_ids = Vec::new();
        let mut labels = Vec::new();
        let mut data = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != header.len() {
                return Err(Error::MalformedRow {
                    line,
                    reason: format!("expected {} fields, found {}", header.len(), record.len()),
                });
            }
            bird_ids.push(record[0].to_owned());
            if has_label {
                labels.push(match &record[1] {
                    "0" => Label::Female,
                    "1" => Label::Male,
                    other => {
                        return Err(Error::MalformedRow {
                            line,
                            reason: format!("label `{other}` is not 0 or 1"),
                        })
                    }
                });
            }
            for field in record.iter().skip(first) {
                if field.is_empty() {
                    data.push(MISSING);
                } else {
                    data.push(field.parse::<f64>().map_err(|_| Error::MalformedRow {
                        line,
                        reason: format!("`{field}` is not a number"),
                    })?);
                }
            }
        }
        let n = bird_ids.len();
        Ok(FeatureMatrix {
            bird_ids,
            values: Matrix::new(n, columns.len(), data),
            columns,
            labels: has_label.then_some(labels),
        })
    }

    pub fn read(path: &Path) -> Result<FeatureMatrix> {
        let text = crate::io::read_to_string(path)?;
        FeatureMatrix::from_csv(&text).map_err(|e| e.in_file(path))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_csv().as_bytes())
    }
}

/// Builds a matrix using thresholds fitted on this same corpus.
pub fn build_dataset(corpus: &Corpus, mode: DatasetMode) -> Result<FeatureMatrix> {
    let th = fit_thresholds(corpus, mode)?;
    build_dataset_with(corpus, &th)
}

/// Builds a matrix using externally supplied (e.g. training-corpus)
/// thresholds.
pub fn build_dataset_with(corpus: &Corpus, th: &DatasetThresholds) -> Result<FeatureMatrix> {
    let subsets = th.mode.subsets();
    if subsets.len() != th.blocks.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} mode needs {} threshold blocks, got {}",
            th.mode,
            subsets.len(),
            th.blocks.len()
        )));
    }
    let trajectories: Vec<&Trajectory> = corpus.trajectories().collect();
    let rows: Vec<Vec<f64>> = trajectories
        .par_iter()
        .map(|t| {
            let mut row = Vec::with_capacity(featex::N_FEATURES * subsets.len());
            for (s, block) in subsets.iter().zip(&th.blocks) {
                let pts = s.select(t);
                if pts.is_empty() {
                    row.extend(std::iter::repeat_n(MISSING, featex::N_FEATURES));
                } else {
                    row.extend(featex::bird_features(&pts, block.as_ref()).values);
                }
            }
            row
        })
        .collect();

    let labels = corpus.labels().map(|_| {
        trajectories
            .iter()
            .map(|t| corpus.label(t.bird_id()))
            .collect::<Option<Vec<_>>>()
    });
    let labels = match labels {
        Some(None) => return Err(Error::DegenerateLabels("corpus is only partially labeled".into())),
        Some(Some(l)) => Some(l),
        None => None,
    };

    Ok(FeatureMatrix {
        bird_ids: trajectories.iter().map(|t| t.bird_id().to_owned()).collect(),
        columns: column_names(th.mode),
        values: if rows.is_empty() {
            Matrix::zeros(0, featex::N_FEATURES * subsets.len())
        } else {
            Matrix::from_rows(&rows)
        },
        labels,
    })
}

/// Column medians of the non-missing training entries; a column with no
/// observed value falls back to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imputer {
    pub columns: Vec<String>,
    pub fill: Vec<f64>,
}

impl Imputer {
    pub fn fit(train: &FeatureMatrix) -> Imputer {
        let fill = (0..train.columns.len())
            .map(|j| {
                let observed: Vec<f64> = (0..train.n_rows())
                    .map(|i| train.values.get(i, j))
                    .filter(|v| !is_missing(*v))
                    .collect();
                featex::quantile(&observed, 0.5).unwrap_or(0.0)
            })
            .collect();
        Imputer {
            columns: train.columns.clone(),
            fill,
        }
    }

    pub fn apply(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        if m.columns != self.columns {
            return Err(Error::SchemaMismatch(
                "imputer was fitted on a different column schema".into(),
            ));
        }
        let mut out = m.clone();
        let n_cols = self.fill.len();
        for (k, v) in out.values.as_mut_slice().iter_mut().enumerate() {
            if is_missing(*v) {
                *v = self.fill[k % n_cols];
            }
        }
        Ok(out)
    }
}

/// Replaces missing entries of `apply_to` with `train`'s column medians.
pub fn impute(train: &FeatureMatrix, apply_to: &FeatureMatrix) -> Result<FeatureMatrix> {
    train.check_schema(apply_to)?;
    Imputer::fit(train).apply(apply_to)
}
