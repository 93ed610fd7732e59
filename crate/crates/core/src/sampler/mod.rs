//! Collapsed Gibbs sampling for LDA.
//!
//! A chain runs `total_iterations` full sweeps. After burn-in, every `thin`-th
//! sweep is a collection point where the smoothed estimates
//!
//! ```text
//! theta[d][k] = (n_dk + alpha) / (n_d + K alpha)
//! phi[k][w]   = (n_kw + beta)  / (n_k + V beta)
//! ```
//!
//! are formed. Theta feeds streaming moment accumulators and is then
//! discarded; phi is appended to an on-disk [`PhiSampleStore`].

mod moments;
mod phi_store;

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::{EncodedCorpus, Vocabulary};
use crate::error::{Error, Result};
use crate::rng::ChainRng;

pub use moments::{MomentAccumulator, PosteriorSummary};
pub use phi_store::{PhiSampleStore, PhiSamples, PhiStoreWriter};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaPrior {
    /// 50 / K
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub num_topics: usize,
    pub alpha: AlphaPrior,
    pub beta: f64,
    pub total_iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub top_n: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            num_topics: 100,
            alpha: AlphaPrior::Auto,
            beta: 0.01,
            total_iterations: 2000,
            burn_in: 1000,
            thin: 10,
            seed: 0,
            top_n: 10,
        }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        match self.alpha {
            AlphaPrior::Auto => 50.0 / self.num_topics as f64,
            AlphaPrior::Fixed(a) => a,
        }
    }

    /// S = floor((total_iterations - burn_in) / thin).
    pub fn num_samples(&self) -> usize {
        if self.thin == 0 || self.burn_in >= self.total_iterations {
            return 0;
        }
        (self.total_iterations - self.burn_in) / self.thin
    }

    /// Sweeps are numbered from 1.
    pub fn is_collection_point(&self, sweep: usize) -> bool {
        sweep > self.burn_in && (sweep - self.burn_in) % self.thin == 0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.num_topics < 2 {
            return bad(format!("num_topics must be >= 2, got {}", self.num_topics));
        }
        if self.num_topics > u16::MAX as usize {
            return bad(format!("num_topics must be <= {}", u16::MAX));
        }
        let alpha = self.alpha();
        if !(alpha.is_finite() && alpha > 0.0) {
            return bad(format!("alpha must be positive, got {alpha}"));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if self.thin < 1 {
            return bad("thin must be >= 1".into());
        }
        if self.burn_in >= self.total_iterations {
            return bad(format!(
                "burn_in ({}) must be < total_iterations ({})",
                self.burn_in, self.total_iterations
            ));
        }
        if self.num_samples() < 2 {
            return bad(format!(
                "schedule collects {} samples, need at least 2",
                self.num_samples()
            ));
        }
        if self.top_n < 1 {
            return bad("top_n must be >= 1".into());
        }
        Ok(())
    }
}

/// Unnormalized collapsed conditional for one token whose current assignment
/// has already been removed from the counts:
///
/// `weight[k] = (n_dk + alpha) * (n_kw + beta) / (n_k + V beta)`
///
/// `word_topic` holds `n_kw` for the token's word, one entry per topic.
/// Returns the sum of the weights.
pub fn conditional_weights(
    doc_topic: &[u32],
    word_topic: &[u32],
    topic_totals: &[u32],
    alpha: f64,
    beta: f64,
    vocab_size: usize,
    out: &mut [f64],
) -> f64 {
    let v_beta = vocab_size as f64 * beta;
    let mut total = 0.0;
    for k in 0..out.len() {
        let w = (doc_topic[k] as f64 + alpha) * (word_topic[k] as f64 + beta) / (topic_totals[k] as f64 + v_beta);
        out[k] = w;
        total += w;
    }
    total
}

/// Latent assignments and count tables of one chain.
///
/// Word-topic counts are stored word-major (`V x K`) so that the per-token
/// conditional reads one contiguous row.
#[derive(Debug, Clone)]
pub struct LdaState {
    num_topics: usize,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
    z: Vec<Vec<u16>>,
    n_dk: Vec<u32>,
    n_wk: Vec<u32>,
    n_k: Vec<u32>,
    n_d: Vec<u32>,
    rng: ChainRng,
    weights: Vec<f64>,
}

impl LdaState {
    /// Assigns every token a topic drawn uniformly from the seeded generator.
    pub fn init(corpus: &EncodedCorpus, config: &LdaConfig) -> Result<Self> {
        if config.num_topics < 2 {
            return Err(Error::InvalidConfig(format!(
                "num_topics must be >= 2, got {}",
                config.num_topics
            )));
        }
        config.validate()?;
        corpus.validate()?;
        let k = config.num_topics;
        let v = corpus.vocab_size();
        let d = corpus.num_docs();
        let mut rng = ChainRng::from_seed(config.seed);
        let mut state = Self {
            num_topics: k,
            vocab_size: v,
            alpha: config.alpha(),
            beta: config.beta,
            z: Vec::with_capacity(d),
            n_dk: vec![0; d * k],
            n_wk: vec![0; v * k],
            n_k: vec![0; k],
            n_d: corpus.documents.iter().map(|doc| doc.len() as u32).collect(),
            rng: rng.clone(),
            weights: vec![0.0; k],
        };
        for (di, doc) in corpus.documents.iter().enumerate() {
            let mut zd = Vec::with_capacity(doc.len());
            for &w in doc {
                let t = rng.below(k as u32) as usize;
                zd.push(t as u16);
                state.n_dk[di * k + t] += 1;
                state.n_wk[w as usize * k + t] += 1;
                state.n_k[t] += 1;
            }
            state.z.push(zd);
        }
        state.rng = rng;
        Ok(state)
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn num_docs(&self) -> usize {
        self.z.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn assignments(&self) -> &[Vec<u16>] {
        &self.z
    }

    pub fn doc_topic_count(&self, d: usize, k: usize) -> u32 {
        self.n_dk[d * self.num_topics + k]
    }

    pub fn topic_word_count(&self, k: usize, w: usize) -> u32 {
        self.n_wk[w * self.num_topics + k]
    }

    pub fn topic_total(&self, k: usize) -> u32 {
        self.n_k[k]
    }

    pub fn doc_length(&self, d: usize) -> u32 {
        self.n_d[d]
    }

    /// Position of the generator in its stream.
    pub fn rng_position(&self) -> u128 {
        self.rng.word_pos()
    }

    /// One full Gibbs sweep over every token of every document.
    pub fn sweep(&mut self, corpus: &EncodedCorpus) {
        let k = self.num_topics;
        for (d, doc) in corpus.documents.iter().enumerate() {
            let dk = &mut self.n_dk[d * k..(d + 1) * k];
            for (i, &w) in doc.iter().enumerate() {
                let w = w as usize;
                let wk = &mut self.n_wk[w * k..(w + 1) * k];
                let old = self.z[d][i] as usize;
                dk[old] -= 1;
                wk[old] -= 1;
                self.n_k[old] -= 1;

                let total = conditional_weights(
                    dk,
                    wk,
                    &self.n_k,
                    self.alpha,
                    self.beta,
                    self.vocab_size,
                    &mut self.weights,
                );
                let mut u = self.rng.next_f64() * total;
                let mut new = k - 1;
                for (t, &p) in self.weights.iter().enumerate() {
                    if u < p {
                        new = t;
                        break;
                    }
                    u -= p;
                }

                self.z[d][i] = new as u16;
                dk[new] += 1;
                wk[new] += 1;
                self.n_k[new] += 1;
            }
        }
    }

    /// Recounts every table from the assignments and compares.
    pub fn check_invariants(&self) -> Result<()> {
        let k = self.num_topics;
        let mut n_dk = vec![0u32; self.n_dk.len()];
        let mut n_k = vec![0u32; k];
        for (d, zd) in self.z.iter().enumerate() {
            if zd.len() as u32 != self.n_d[d] {
                return Err(Error::InvalidInput(format!("document {d}: length mismatch")));
            }
            for &t in zd {
                n_dk[d * k + t as usize] += 1;
                n_k[t as usize] += 1;
            }
            let row: u32 = self.n_dk[d * k..(d + 1) * k].iter().sum();
            if row != self.n_d[d] {
                return Err(Error::InvalidInput(format!(
                    "document {d}: sum_k n_dk = {row} but n_d = {}",
                    self.n_d[d]
                )));
            }
        }
        if n_dk != self.n_dk {
            return Err(Error::InvalidInput("n_dk disagrees with assignments".into()));
        }
        if n_k != self.n_k {
            return Err(Error::InvalidInput("n_k disagrees with assignments".into()));
        }
        for t in 0..k {
            let col: u32 = (0..self.vocab_size).map(|w| self.n_wk[w * k + t]).sum();
            if col != self.n_k[t] {
                return Err(Error::InvalidInput(format!(
                    "topic {t}: sum_w n_kw = {col} but n_k = {}",
                    self.n_k[t]
                )));
            }
        }
        let tokens: u64 = self.n_d.iter().map(|&n| u64::from(n)).sum();
        let assigned: u64 = self.n_k.iter().map(|&n| u64::from(n)).sum();
        if tokens != assigned {
            return Err(Error::InvalidInput(format!(
                "{assigned} assigned tokens but corpus has {tokens}"
            )));
        }
        Ok(())
    }

    /// Smoothed document-topic estimate, `D x K`.
    pub fn theta(&self) -> Array2<f64> {
        let k = self.num_topics;
        let k_alpha = k as f64 * self.alpha;
        Array2::from_shape_fn((self.num_docs(), k), |(d, t)| {
            (self.n_dk[d * k + t] as f64 + self.alpha) / (self.n_d[d] as f64 + k_alpha)
        })
    }

    /// Smoothed topic-word estimate, `K x V`.
    pub fn phi(&self) -> Array2<f64> {
        let k = self.num_topics;
        let v_beta = self.vocab_size as f64 * self.beta;
        Array2::from_shape_fn((k, self.vocab_size), |(t, w)| {
            (self.n_wk[w * k + t] as f64 + self.beta) / (self.n_k[t] as f64 + v_beta)
        })
    }
}

/// Hooks into a running chain. Both callbacks default to no-ops.
pub trait ChainObserver {
    /// Called after every sweep (1-based).
    fn after_sweep(&mut self, _sweep: usize, _state: &LdaState) -> Result<()> {
        Ok(())
    }

    /// Called at every collection point with the sample index (0-based).
    fn on_sample(&mut self, _index: usize, _theta: &Array2<f64>, _phi: &Array2<f64>) -> Result<()> {
        Ok(())
    }
}

/// Keeps every theta sample in memory. Only meant for small verification runs.
#[derive(Debug, Default)]
pub struct ThetaRecorder {
    pub samples: Vec<Array2<f64>>,
}

impl ChainObserver for ThetaRecorder {
    fn on_sample(&mut self, _index: usize, theta: &Array2<f64>, _phi: &Array2<f64>) -> Result<()> {
        self.samples.push(theta.clone());
        Ok(())
    }
}

/// Highest-probability words per topic under the mean phi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopWords {
    pub ids: Vec<Vec<u32>>,
    pub probs: Vec<Vec<f64>>,
}

impl TopWords {
    /// Ranks each row of `phi` by descending probability, ties by lower id.
    pub fn from_phi(phi: &Array2<f64>, top_n: usize) -> Self {
        let n = top_n.min(phi.ncols());
        let mut ids = Vec::with_capacity(phi.nrows());
        let mut probs = Vec::with_capacity(phi.nrows());
        for row in phi.rows() {
            let mut order: Vec<u32> = (0..row.len() as u32).collect();
            order.sort_by(|&a, &b| row[b as usize].total_cmp(&row[a as usize]).then(a.cmp(&b)));
            order.truncate(n);
            probs.push(order.iter().map(|&w| row[w as usize]).collect());
            ids.push(order);
        }
        Self { ids, probs }
    }

    pub fn num_topics(&self) -> usize {
        self.ids.len()
    }

    /// Long format, one row per (topic, rank): `topic,rank,word_id,term,probability`.
    pub fn write_csv(&self, vocabulary: &Vocabulary, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["topic", "rank", "word_id", "term", "probability"])?;
        for (k, (ids, probs)) in self.ids.iter().zip(&self.probs).enumerate() {
            for (rank, (&id, &p)) in ids.iter().zip(probs).enumerate() {
                w.write_record([
                    k.to_string(),
                    rank.to_string(),
                    id.to_string(),
                    vocabulary.term(id).unwrap_or("").to_string(),
                    format!("{p:?}"),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        if rdr
            .headers()?
            .iter()
            .ne(["topic", "rank", "word_id", "term", "probability"])
        {
            return Err(Error::format(
                path,
                "expected header topic,rank,word_id,term,probability",
            ));
        }
        let mut ids: Vec<Vec<u32>> = Vec::new();
        let mut probs: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = || Error::format(path, format!("row {}: malformed", line + 2));
            let k: usize = rec[0].parse().map_err(|_| bad())?;
            let rank: usize = rec[1].parse().map_err(|_| bad())?;
            let id: u32 = rec[2].parse().map_err(|_| bad())?;
            let p: f64 = rec[4].parse().map_err(|_| bad())?;
            if k == ids.len() {
                ids.push(Vec::new());
                probs.push(Vec::new());
            }
            if k + 1 != ids.len() || rank != ids[k].len() {
                return Err(Error::format(path, format!("row {}: rows out of order", line + 2)));
            }
            ids[k].push(id);
            probs[k].push(p);
        }
        Ok(Self { ids, probs })
    }
}

#[derive(Debug)]
pub struct ChainOutput {
    pub summary: PosteriorSummary,
    pub phi_store: PhiSampleStore,
    pub top_words: TopWords,
    pub mean_phi: Array2<f64>,
}

/// Runs one chain to completion, writing phi samples to `phi_path`.
pub fn run_chain(
    corpus: &EncodedCorpus,
    config: &LdaConfig,
    phi_path: &Path,
    observers: &mut [&mut dyn ChainObserver],
) -> Result<ChainOutput> {
    config.validate()?;
    let mut state = LdaState::init(corpus, config)?;
    let k = config.num_topics;
    let v = corpus.vocab_size();
    let mut moments = MomentAccumulator::new(corpus.num_docs(), k);
    let mut writer = PhiStoreWriter::create(phi_path, k, v)?;
    let mut phi_sum = Array2::<f64>::zeros((k, v));
    let mut collected = 0usize;

    for sweep in 1..=config.total_iterations {
        state.sweep(corpus);
        if cfg!(debug_assertions) {
            state.check_invariants()?;
        }
        for obs in observers.iter_mut() {
            obs.after_sweep(sweep, &state)?;
        }
        if config.is_collection_point(sweep) {
            let theta = state.theta();
            let phi = state.phi();
            moments.push(&theta)?;
            writer.append(&phi)?;
            phi_sum += &phi;
            for obs in observers.iter_mut() {
                obs.on_sample(collected, &theta, &phi)?;
            }
            collected += 1;
        }
        if sweep % 100 == 0 {
            log::debug!("sweep {sweep}/{}", config.total_iterations);
        }
    }
    debug_assert_eq!(collected, config.num_samples());

    let phi_store = writer.finish()?;
    let mean_phi = phi_sum / collected as f64;
    let top_words = TopWords::from_phi(&mean_phi, config.top_n);
    Ok(ChainOutput {
        summary: moments.finish()?,
        phi_store,
        top_words,
        mean_phi,
    })
}
