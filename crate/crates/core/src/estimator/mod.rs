//! Supervised combination of topic metrics with kernel support vector regression.

mod cross_domain;
mod scaler;
mod svr;

use std::collections::HashSet;
use std::path::Path;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

pub use cross_domain::{cross_domain_fit_eval, grid_search, CrossDomainCell, CrossDomainReport, GridPoint, SplitMode};
pub use scaler::{standardize, Scaler};
pub use svr::{linear_kernel, predict, rbf_kernel, train_svr, Kernel, KernelKind, SvrModel, SvrParams};

/// Name of the optional label column in feature CSVs.
pub const RATING_COLUMN: &str = "rating";

/// Per-topic metric values, optionally labeled with a human rating.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub feature_names: Vec<String>,
    pub rows: Array2<f64>,
    pub labels: Option<Vec<f64>>,
    pub dataset_tags: Vec<String>,
    pub topic_ids: Vec<u64>,
}

impl FeatureMatrix {
    pub fn new(
        feature_names: Vec<String>,
        rows: Array2<f64>,
        labels: Option<Vec<f64>>,
        dataset_tags: Vec<String>,
        topic_ids: Vec<u64>,
    ) -> Result<Self> {
        let m = Self {
            feature_names,
            rows,
            labels,
            dataset_tags,
            topic_ids,
        };
        m.validate()?;
        Ok(m)
    }

    /// Single-dataset table with topic ids 0..n.
    pub fn from_columns(dataset: &str, columns: &[(&str, Vec<f64>)], labels: Option<Vec<f64>>) -> Result<Self> {
        let n = columns.first().map_or(0, |c| c.1.len());
        if columns.iter().any(|c| c.1.len() != n) {
            return Err(Error::InvalidInput("feature columns differ in length".into()));
        }
        let rows = Array2::from_shape_fn((n, columns.len()), |(i, j)| columns[j].1[i]);
        Self::new(
            columns.iter().map(|c| c.0.to_string()).collect(),
            rows,
            labels,
            vec![dataset.to_string(); n],
            (0..n as u64).collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rows.nrows();
        if self.rows.ncols() != self.feature_names.len() {
            return Err(Error::InvalidInput(format!(
                "{} feature names for {} columns",
                self.feature_names.len(),
                self.rows.ncols()
            )));
        }
        let unique: HashSet<&String> = self.feature_names.iter().collect();
        if unique.len() != self.feature_names.len() {
            return Err(Error::InvalidInput("duplicate feature names".into()));
        }
        if self.dataset_tags.len() != n || self.topic_ids.len() != n {
            return Err(Error::InvalidInput("row metadata length mismatch".into()));
        }
        if let Some(l) = &self.labels {
            if l.len() != n {
                return Err(Error::InvalidInput(format!("{} labels for {n} rows", l.len())));
            }
            if l.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("non-finite label".into()));
            }
        }
        if let Some(((i, j), _)) = self.rows.indexed_iter().find(|(_, x)| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value for feature {} in row {i}",
                self.feature_names[j]
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.column_index(name).map(|j| self.rows.column(j).to_vec())
    }

    /// Distinct dataset tags joined with `+`, in first-seen order.
    pub fn name(&self) -> String {
        let mut seen = Vec::new();
        for t in &self.dataset_tags {
            if !seen.contains(t) {
                seen.push(t.clone());
            }
        }
        seen.join("+")
    }

    pub fn labels(&self) -> Result<&[f64]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::InvalidInput(format!("table {} has no rating column", self.name())))
    }

    pub fn without_feature(&self, name: &str) -> Result<Self> {
        let j = self
            .column_index(name)
            .ok_or_else(|| Error::FeatureMismatch(format!("no feature named {name}")))?;
        let keep: Vec<usize> = (0..self.num_features()).filter(|&c| c != j).collect();
        Ok(Self {
            feature_names: keep.iter().map(|&c| self.feature_names[c].clone()).collect(),
            rows: self.rows.select(Axis(1), &keep),
            ..self.clone()
        })
    }

    /// Reorders (or subsets) columns to `names`. Every name must exist.
    pub fn select(&self, names: &[String]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::FeatureMismatch(format!("table {} lacks feature {n}", self.name())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            feature_names: names.to_vec(),
            rows: self.rows.select(Axis(1), &idx),
            ..self.clone()
        })
    }

    /// Stacks tables row-wise. Feature sets must match by name; the first
    /// table's column order wins. Labels survive only if every table has them.
    pub fn concat(tables: &[&FeatureMatrix]) -> Result<Self> {
        let first = tables
            .first()
            .ok_or_else(|| Error::InvalidInput("no tables to merge".into()))?;
        let names = first.feature_names.clone();
        let want: HashSet<&String> = names.iter().collect();
        let mut views = Vec::with_capacity(tables.len());
        let mut labels = Some(Vec::new());
        let mut tags = Vec::new();
        let mut ids = Vec::new();
        for t in tables {
            let have: HashSet<&String> = t.feature_names.iter().collect();
            if have != want {
                let missing: Vec<_> = want.difference(&have).collect();
                let extra: Vec<_> = have.difference(&want).collect();
                return Err(Error::FeatureMismatch(format!(
                    "table {} differs from {}: missing {missing:?}, extra {extra:?}",
                    t.name(),
                    first.name()
                )));
            }
            let aligned = t.select(&names)?;
            views.push(aligned.rows);
            match (&mut labels, &t.labels) {
                (Some(acc), Some(l)) => acc.extend_from_slice(l),
                _ => labels = None,
            }
            tags.extend(t.dataset_tags.iter().cloned());
            ids.extend(t.topic_ids.iter().copied());
        }
        let rows = ndarray::concatenate(Axis(0), &views.iter().map(|v| v.view()).collect::<Vec<_>>())
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Self::new(names, rows, labels, tags, ids)
    }

    /// One table per distinct dataset tag, in first-seen order.
    pub fn split_by_dataset(&self) -> Vec<Self> {
        let mut tags: Vec<&String> = Vec::new();
        for t in &self.dataset_tags {
            if !tags.contains(&t) {
                tags.push(t);
            }
        }
        tags.into_iter()
            .map(|tag| {
                let idx: Vec<usize> = (0..self.len()).filter(|&i| &self.dataset_tags[i] == tag).collect();
                Self {
                    feature_names: self.feature_names.clone(),
                    rows: self.rows.select(Axis(0), &idx),
                    labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
                    dataset_tags: vec![tag.clone(); idx.len()],
                    topic_ids: idx.iter().map(|&i| self.topic_ids[i]).collect(),
                }
            })
            .collect()
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.len() < 3 || &headers[0] != "dataset" || &headers[1] != "topic_id" {
            return Err(Error::format(
                path,
                "feature CSV must start with columns dataset,topic_id and have at least one feature",
            ));
        }
        let has_rating = &headers[headers.len() - 1] == RATING_COLUMN;
        let feat_end = if has_rating { headers.len() - 1 } else { headers.len() };
        let names: Vec<String> = headers.iter().take(feat_end).skip(2).map(str::to_string).collect();
        if names.is_empty() {
            return Err(Error::format(path, "no feature columns"));
        }
        let mut values = Vec::new();
        let mut labels = Vec::new();
        let mut tags = Vec::new();
        let mut ids = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec[i].trim().parse::<f64>().map_err(|_| {
                    Error::format(
                        path,
                        format!(
                            "row {}: column {} is not a number: {:?}",
                            line + 2,
                            &headers[i],
                            &rec[i]
                        ),
                    )
                })
            };
            tags.push(rec[0].to_string());
            ids.push(
                rec[1]
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| Error::format(path, format!("row {}: bad topic_id {:?}", line + 2, &rec[1])))?,
            );
            for i in 2..feat_end {
                values.push(parse(i)?);
            }
            if has_rating {
                labels.push(parse(feat_end)?);
            }
        }
        let n = ids.len();
        let rows = Array2::from_shape_vec((n, names.len()), values).expect("row lengths checked by csv reader");
        Self::new(names, rows, has_rating.then_some(labels), tags, ids).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["dataset".to_string(), "topic_id".to_string()];
        header.extend(self.feature_names.iter().cloned());
        if self.labels.is_some() {
            header.push(RATING_COLUMN.into());
        }
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![self.dataset_tags[i].clone(), self.topic_ids[i].to_string()];
            rec.extend(self.rows.row(i).iter().map(|x| format!("{x:?}")));
            if let Some(l) = &self.labels {
                rec.push(format!("{:?}", l[i]));
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}
