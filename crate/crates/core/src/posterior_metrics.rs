//! Topic scores derived from posterior samples.
//!
//! * `variability` — per topic, sample std across documents of cv_dk.
//! * `mu_variability` / `sigma_variability` — the same statistic over the
//!   per-document means and standard deviations.
//! * `stability` — mean cosine similarity between each sampled phi_k and
//!   the mean phi_k over all samples.
//!
//! Every standard deviation here uses divisor n - 1.

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{PhiSampleStore, PosteriorSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicScoreVector {
    pub metric_name: String,
    pub scores: Vec<f64>,
}

impl TopicScoreVector {
    pub fn new(metric_name: impl Into<String>, scores: Vec<f64>) -> Result<Self> {
        let metric_name = metric_name.into();
        if let Some(k) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::Undefined(format!(
                "{metric_name}: non-finite score for topic {k}"
            )));
        }
        Ok(Self { metric_name, scores })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Topic ids ordered from lowest to highest score, ties by id.
    pub fn ascending(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| self.scores[a].total_cmp(&self.scores[b]).then(a.cmp(&b)));
        order
    }
}

/// Sample standard deviation (divisor n - 1). Exactly 0 for a constant input.
pub fn sample_std(values: ArrayView1<f64>) -> f64 {
    let first = values[0];
    if values.iter().all(|&x| x == first) {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.sum() / n;
    let ss: f64 = values.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

fn column_std(name: &str, m: &Array2<f64>) -> Result<TopicScoreVector> {
    if m.nrows() < 2 {
        return Err(Error::InvalidInput(format!(
            "{name} needs at least 2 documents, got {}",
            m.nrows()
        )));
    }
    TopicScoreVector::new(name, m.axis_iter(Axis(1)).map(sample_std).collect())
}

fn check_summary(summary: &PosteriorSummary) -> Result<()> {
    if summary.num_samples < 2 {
        return Err(Error::InvalidInput(format!(
            "posterior summary has {} samples, need at least 2",
            summary.num_samples
        )));
    }
    Ok(())
}

pub fn variability(summary: &PosteriorSummary) -> Result<TopicScoreVector> {
    check_summary(summary)?;
    column_std("variability", &summary.cv)
}

pub fn mu_variability(summary: &PosteriorSummary) -> Result<TopicScoreVector> {
    check_summary(summary)?;
    column_std("mu", &summary.mean)
}

pub fn sigma_variability(summary: &PosteriorSummary) -> Result<TopicScoreVector> {
    check_summary(summary)?;
    column_std("sigma", &summary.std)
}

fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let dot = a.dot(&b);
    let norms = a.dot(&a).sqrt() * b.dot(&b).sqrt();
    if norms == 0.0 {
        0.0
    } else {
        dot / norms
    }
}

/// Two passes over the store: the first forms the mean phi, the second
/// averages each sample's cosine similarity to it.
pub fn stability(store: &PhiSampleStore) -> Result<TopicScoreVector> {
    let s = store.num_samples();
    if s < 2 {
        return Err(Error::InvalidInput(format!(
            "phi store has {s} samples, need at least 2"
        )));
    }
    let mut mean = Array2::<f64>::zeros((store.num_topics(), store.vocab_size()));
    for sample in store.samples()? {
        mean += &sample?;
    }
    mean /= s as f64;

    let mut sums = vec![0.0; store.num_topics()];
    for sample in store.samples()? {
        let sample = sample?;
        for (k, acc) in sums.iter_mut().enumerate() {
            *acc += cosine(sample.row(k), mean.row(k));
        }
    }
    TopicScoreVector::new("stability", sums.into_iter().map(|x| x / s as f64).collect())
}
