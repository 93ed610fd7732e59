//! Agreement with human judgments: correlation, inter-annotator agreement,
//! feature ablation and scatter-plot data.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{cross_domain_fit_eval, FeatureMatrix, SplitMode, SvrParams};

pub const RATING_MIN: f64 = 1.0;
pub const RATING_MAX: f64 = 4.0;

/// Product-moment correlation. Errors on length mismatch, fewer than two
/// points, or a constant argument.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "pearson_r: lengths {} and {} differ",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("pearson_r needs at least 2 points".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("pearson_r: non-finite input".into()));
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Err(Error::Undefined("correlation with a constant vector".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRow {
    pub dataset: String,
    pub topic_id: u64,
    /// One slot per annotator; `None` where a rating is missing.
    pub ratings: Vec<Option<f64>>,
    pub mean_rating: f64,
}

impl RatingRow {
    pub fn new(dataset: impl Into<String>, topic_id: u64, ratings: Vec<Option<f64>>) -> Result<Self> {
        let dataset = dataset.into();
        let present: Vec<f64> = ratings.iter().flatten().copied().collect();
        if present.is_empty() {
            return Err(Error::InvalidInput(format!("{dataset}/{topic_id}: no ratings")));
        }
        if let Some(bad) = present.iter().find(|r| !(RATING_MIN..=RATING_MAX).contains(*r)) {
            return Err(Error::InvalidInput(format!(
                "{dataset}/{topic_id}: rating {bad} outside [{RATING_MIN}, {RATING_MAX}]"
            )));
        }
        let mean_rating = present.iter().sum::<f64>() / present.len() as f64;
        Ok(Self {
            dataset,
            topic_id,
            ratings,
            mean_rating,
        })
    }

    fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.ratings.iter().flatten().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RatingsTable {
    pub rows: Vec<RatingRow>,
}

impl RatingsTable {
    pub fn new(rows: Vec<RatingRow>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, r) in rows.iter().enumerate() {
            if let Some(j) = seen.insert((r.dataset.as_str(), r.topic_id), i) {
                return Err(Error::InvalidInput(format!(
                    "duplicate rating rows {j} and {i} for {}/{}",
                    r.dataset, r.topic_id
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Reads `dataset,topic_id,<rater columns...>`; blank cells are missing.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.len() < 3 || &headers[0] != "dataset" || &headers[1] != "topic_id" {
            return Err(Error::format(
                path,
                "ratings CSV must have columns dataset,topic_id,r1[,r2...]",
            ));
        }
        let raters = headers.len() - 2;
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let at = |msg: String| Error::format(path, format!("row {}: {msg}", line + 2));
            if rec.len() > headers.len() {
                return Err(at(format!("{} fields, header has {}", rec.len(), headers.len())));
            }
            let topic_id = rec
                .get(1)
                .and_then(|s| s.trim().parse::<u64>().ok())
                .ok_or_else(|| at("bad topic_id".into()))?;
            let mut ratings = vec![None; raters];
            for (k, slot) in ratings.iter_mut().enumerate() {
                let cell = rec.get(k + 2).unwrap_or("").trim();
                if !cell.is_empty() {
                    *slot = Some(cell.parse::<f64>().map_err(|_| at(format!("bad rating {cell:?}")))?);
                }
            }
            rows.push(RatingRow::new(&rec[0], topic_id, ratings).map_err(|e| at(e.to_string()))?);
        }
        Self::new(rows).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let raters = self.rows.iter().map(|r| r.ratings.len()).max().unwrap_or(0);
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["dataset".to_string(), "topic_id".to_string()];
        header.extend((1..=raters).map(|k| format!("r{k}")));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.dataset.clone(), r.topic_id.to_string()];
            rec.extend((0..raters).map(|k| match r.ratings.get(k).copied().flatten() {
                Some(v) => format!("{v:?}"),
                None => String::new(),
            }));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct dataset tags in first-seen order.
    pub fn datasets(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.dataset) {
                out.push(r.dataset.clone());
            }
        }
        out
    }

    pub fn for_dataset(&self, dataset: &str) -> RatingsTable {
        RatingsTable {
            rows: self.rows.iter().filter(|r| r.dataset == dataset).cloned().collect(),
        }
    }

    /// Mean ratings in the order of the given `(dataset, topic_id)` keys.
    /// Every key must have a rating row.
    pub fn means_for(&self, datasets: &[String], topic_ids: &[u64]) -> Result<Vec<f64>> {
        let index: HashMap<(&str, u64), f64> = self
            .rows
            .iter()
            .map(|r| ((r.dataset.as_str(), r.topic_id), r.mean_rating))
            .collect();
        datasets
            .iter()
            .zip(topic_ids)
            .map(|(d, &t)| {
                index
                    .get(&(d.as_str(), t))
                    .copied()
                    .ok_or_else(|| Error::InvalidInput(format!("no rating for topic {d}/{t}")))
            })
            .collect()
    }

    /// Returns `features` with its label column replaced by mean ratings.
    pub fn label(&self, features: &FeatureMatrix) -> Result<FeatureMatrix> {
        let labels = self.means_for(&features.dataset_tags, &features.topic_ids)?;
        FeatureMatrix::new(
            features.feature_names.clone(),
            features.rows.clone(),
            Some(labels),
            features.dataset_tags.clone(),
            features.topic_ids.clone(),
        )
    }
}

/// Krippendorff's alpha with interval weights `(a - b)^2`. Items with fewer
/// than two ratings are not pairable and are skipped.
pub fn krippendorff_alpha_weighted(ratings: &RatingsTable) -> Result<f64> {
    let items: Vec<Vec<f64>> = ratings
        .rows
        .iter()
        .map(|r| r.present().collect::<Vec<f64>>())
        .filter(|v| v.len() >= 2)
        .collect();
    if items.is_empty() {
        return Err(Error::InvalidInput("no item has two or more ratings".into()));
    }
    let n: f64 = items.iter().map(|v| v.len() as f64).sum();
    // sum over ordered pairs i != j of (v_i - v_j)^2 = 2m * sum v^2 - 2 (sum v)^2
    let pair_sq = |m: f64, s: f64, s2: f64| 2.0 * m * s2 - 2.0 * s * s;

    let mut d_o = 0.0;
    let (mut tot, mut tot2) = (0.0, 0.0);
    for v in &items {
        let m = v.len() as f64;
        let s: f64 = v.iter().sum();
        let s2: f64 = v.iter().map(|x| x * x).sum();
        tot += s;
        tot2 += s2;
        d_o += pair_sq(m, s, s2) / (m - 1.0);
    }
    d_o /= n;
    if d_o <= 0.0 {
        return Ok(1.0);
    }
    let d_e = pair_sq(n, tot, tot2) / (n * (n - 1.0));
    Ok(1.0 - d_o / d_e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCorrelation {
    pub metric: String,
    pub n: usize,
    pub pearson_r: std::result::Result<f64, String>,
}

/// Pearson r of every feature column against mean human ratings.
pub fn correlate_metrics(scores: &FeatureMatrix, ratings: &RatingsTable) -> Result<Vec<MetricCorrelation>> {
    let gold = ratings.means_for(&scores.dataset_tags, &scores.topic_ids)?;
    Ok(scores
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| MetricCorrelation {
            metric: name.clone(),
            n: gold.len(),
            pearson_r: pearson_r(&scores.rows.column(j).to_vec(), &gold).map_err(|e| e.to_string()),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub removed_feature: String,
    pub test: String,
    /// Mean r over the splits tested on `test` with the feature removed.
    pub r: Option<f64>,
    /// The same quantity with every feature kept.
    pub full_r: Option<f64>,
}

/// Refits the cross-domain protocol once per feature with that feature
/// removed. One row per (feature, test set), ordered by feature then test.
pub fn ablate(tables: &[FeatureMatrix], mode: SplitMode, params: &SvrParams) -> Result<Vec<AblationRow>> {
    let first = tables
        .first()
        .ok_or_else(|| Error::InvalidInput("no feature tables".into()))?;
    if first.num_features() < 2 {
        return Err(Error::InvalidInput(format!(
            "ablation needs at least 2 features, got {}",
            first.num_features()
        )));
    }
    let full = cross_domain_fit_eval(tables, mode, params)?;
    let mut rows = Vec::new();
    for feature in &first.feature_names {
        let reduced = tables
            .iter()
            .map(|t| t.without_feature(feature))
            .collect::<Result<Vec<_>>>()?;
        let rep = cross_domain_fit_eval(&reduced, mode, params)?;
        for (test, r) in &rep.test_means {
            rows.push(AblationRow {
                removed_feature: feature.clone(),
                test: test.clone(),
                r: *r,
                full_r: full.mean_for(test),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub dataset: String,
    pub topic_id: u64,
    pub human_mean: f64,
    pub metric_value: f64,
}

/// Points plus the least-squares line `human = slope * metric + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterData {
    pub points: Vec<ScatterPoint>,
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
}

pub const SCATTER_HEADER: [&str; 8] = [
    "row",
    "dataset",
    "topic_id",
    "human_mean",
    "metric_value",
    "slope",
    "intercept",
    "r",
];

/// Pairs metric values with mean ratings. The two sides must cover exactly
/// the same topics.
pub fn export_scatter(
    datasets: &[String],
    topic_ids: &[u64],
    metric: &[f64],
    ratings: &RatingsTable,
) -> Result<ScatterData> {
    if datasets.len() != topic_ids.len() || topic_ids.len() != metric.len() {
        return Err(Error::InvalidInput("scatter inputs differ in length".into()));
    }
    let human = ratings.means_for(datasets, topic_ids)?;
    let wanted: std::collections::HashSet<(&str, u64)> = datasets
        .iter()
        .map(String::as_str)
        .zip(topic_ids.iter().copied())
        .collect();
    if let Some(extra) = ratings
        .rows
        .iter()
        .find(|r| !wanted.contains(&(r.dataset.as_str(), r.topic_id)))
    {
        return Err(Error::InvalidInput(format!(
            "rating for topic {}/{} has no metric value",
            extra.dataset, extra.topic_id
        )));
    }
    let r = pearson_r(metric, &human)?;
    let n = metric.len() as f64;
    let mx = metric.iter().sum::<f64>() / n;
    let my = human.iter().sum::<f64>() / n;
    let sxy: f64 = metric.iter().zip(&human).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = metric.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let points = (0..metric.len())
        .map(|i| ScatterPoint {
            dataset: datasets[i].clone(),
            topic_id: topic_ids[i],
            human_mean: human[i],
            metric_value: metric[i],
        })
        .collect();
    Ok(ScatterData {
        points,
        slope,
        intercept: my - slope * mx,
        r,
    })
}

impl ScatterData {
    /// One `point` row per topic, then a single `fit` row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(SCATTER_HEADER)?;
        for p in &self.points {
            w.write_record([
                "point".to_string(),
                p.dataset.clone(),
                p.topic_id.to_string(),
                format!("{:?}", p.human_mean),
                format!("{:?}", p.metric_value),
                String::new(),
                String::new(),
                String::new(),
            ])?;
        }
        w.write_record([
            "fit".to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            format!("{:?}", self.slope),
            format!("{:?}", self.intercept),
            format!("{:?}", self.r),
        ])?;
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        if rdr.headers()?.iter().ne(SCATTER_HEADER) {
            return Err(Error::format(path, "unexpected scatter header"));
        }
        let bad = |m: &str| Error::format(path, m.to_string());
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
        let mut points = Vec::new();
        let mut fit = None;
        for rec in rdr.records() {
            let rec = rec?;
            match &rec[0] {
                "point" => points.push(ScatterPoint {
                    dataset: rec[1].to_string(),
                    topic_id: rec[2].parse().map_err(|_| bad("bad topic_id"))?,
                    human_mean: num(&rec[3])?,
                    metric_value: num(&rec[4])?,
                }),
                "fit" if fit.is_none() => fit = Some((num(&rec[5])?, num(&rec[6])?, num(&rec[7])?)),
                _ => return Err(bad("unexpected row kind")),
            }
        }
        let (slope, intercept, r) = fit.ok_or_else(|| bad("missing fit row"))?;
        Ok(Self {
            points,
            slope,
            intercept,
            r,
        })
    }
}
