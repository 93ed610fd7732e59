//! Text ingestion, filtering, and vocabulary encoding.
//!
//! Filtering runs in a fixed order: stopwords, tokens containing digits,
//! proper nouns (capitalization heuristic), then terms whose corpus count is
//! below `min_term_count`. Documents left empty are dropped with a warning.

mod io;

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use io::{read_corpus, read_documents, write_corpus, InputFormat};

/// Default English stopword list shipped with the crate (318 entries).
pub const DEFAULT_STOPWORDS: &str = include_str!("../../assets/stopwords_en.txt");

pub fn default_stopwords() -> HashSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

/// One word per line; blank lines and `#` comments are ignored. Entries are lowercased.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub stopwords: HashSet<String>,
    pub min_term_count: usize,
    pub strip_digits: bool,
    pub strip_proper_nouns: bool,
    pub lowercase: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            stopwords: default_stopwords(),
            min_term_count: 3,
            strip_digits: true,
            strip_proper_nouns: true,
            lowercase: true,
        }
    }
}

impl PreprocessConfig {
    /// Config with no stopwords and no count threshold; the other defaults are kept.
    pub fn permissive() -> Self {
        Self {
            stopwords: HashSet::new(),
            min_term_count: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_term_count < 1 {
            return Err(Error::InvalidConfig("min_term_count must be >= 1".into()));
        }
        Ok(())
    }

    pub fn settings(&self) -> PreprocessSettings {
        PreprocessSettings {
            min_term_count: self.min_term_count as u64,
            strip_digits: self.strip_digits,
            strip_proper_nouns: self.strip_proper_nouns,
            lowercase: self.lowercase,
        }
    }
}

/// The scalar part of [`PreprocessConfig`], persisted alongside a corpus so
/// reference corpora can be tokenized the same way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessSettings {
    pub min_term_count: u64,
    pub strip_digits: bool,
    pub strip_proper_nouns: bool,
    pub lowercase: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct RawToken {
    /// Punctuation-trimmed surface form, original case.
    text: String,
    sentence_start: bool,
}

fn closes_sentence(chunk: &str) -> bool {
    let trimmed = chunk.trim_end_matches(['"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}']);
    trimmed.ends_with(['.', '!', '?'])
}

fn scan(text: &str) -> Vec<RawToken> {
    let mut out = Vec::new();
    let mut sentence_start = true;
    for chunk in text.split_whitespace() {
        let stripped = chunk.trim_matches(|c: char| !c.is_alphanumeric());
        if !stripped.is_empty() {
            out.push(RawToken {
                text: stripped.to_string(),
                sentence_start,
            });
            sentence_start = false;
        }
        if closes_sentence(chunk) {
            sentence_start = true;
        }
    }
    out
}

fn has_digit(token: &str) -> bool {
    token.chars().any(char::is_numeric)
}

fn is_capitalized(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_uppercase)
}

/// Split on Unicode whitespace, trim non-alphanumeric characters from both
/// ends of each piece, then apply the `lowercase` and `strip_digits` rules.
pub fn tokenize(text: &str, config: &PreprocessConfig) -> Vec<String> {
    scan(text)
        .into_iter()
        .filter(|t| !(config.strip_digits && has_digit(&t.text)))
        .map(|t| {
            if config.lowercase {
                t.text.to_lowercase()
            } else {
                t.text
            }
        })
        .collect()
}

/// Token-level filtering (everything except the corpus-count threshold).
fn filter_tokens(text: &str, config: &PreprocessConfig) -> Vec<String> {
    scan(text)
        .into_iter()
        .filter_map(|t| {
            let lower = t.text.to_lowercase();
            if config.stopwords.contains(&lower) {
                return None;
            }
            if config.strip_digits && has_digit(&t.text) {
                return None;
            }
            if config.strip_proper_nouns && !t.sentence_start && is_capitalized(&t.text) {
                return None;
            }
            Some(if config.lowercase { lower } else { t.text })
        })
        .collect()
}

/// Per-document tokens after stopword, digit and proper-noun filtering but
/// before the count threshold.
pub fn filter_documents(raw_docs: &[RawDocument], config: &PreprocessConfig) -> Vec<(String, Vec<String>)> {
    raw_docs
        .iter()
        .map(|d| (d.id.clone(), filter_tokens(&d.text, config)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds a vocabulary with ids assigned in lexicographic term order.
    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = terms.into_iter().map(Into::into).collect();
        let terms: Vec<String> = sorted.into_iter().collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self { terms, index }
    }

    /// Keeps the given order; fails on duplicates.
    pub fn from_ordered(terms: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::InvalidInput(format!("duplicate vocabulary term {t:?}")));
            }
        }
        Ok(Self { terms, index })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: u32) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedCorpus {
    pub vocabulary: Vocabulary,
    pub documents: Vec<Vec<u32>>,
    pub doc_ids: Vec<String>,
    pub settings: PreprocessSettings,
}

impl EncodedCorpus {
    /// Assembles a corpus from already-encoded documents and checks invariants.
    pub fn new(
        vocabulary: Vocabulary,
        documents: Vec<Vec<u32>>,
        doc_ids: Vec<String>,
        settings: PreprocessSettings,
    ) -> Result<Self> {
        let corpus = Self {
            vocabulary,
            documents,
            doc_ids,
            settings,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    /// Convenience for synthetic corpora: terms are named `w0`, `w1`, ... and
    /// documents get ids `0`, `1`, ...
    pub fn from_ids(vocab_size: usize, documents: Vec<Vec<u32>>) -> Result<Self> {
        let terms = (0..vocab_size).map(|i| format!("w{i}")).collect();
        let vocabulary = Vocabulary::from_ordered(terms)?;
        let doc_ids = (0..documents.len()).map(|i| i.to_string()).collect();
        Self::new(
            vocabulary,
            documents,
            doc_ids,
            PreprocessConfig::permissive().settings(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.documents.len() != self.doc_ids.len() {
            return Err(Error::InvalidInput(format!(
                "{} documents but {} ids",
                self.documents.len(),
                self.doc_ids.len()
            )));
        }
        if self.documents.is_empty() {
            return Err(Error::EmptyCorpus("no documents".into()));
        }
        if self.vocabulary.is_empty() {
            return Err(Error::EmptyCorpus("empty vocabulary".into()));
        }
        let v = self.vocabulary.len() as u32;
        for (d, doc) in self.documents.iter().enumerate() {
            if doc.is_empty() {
                return Err(Error::InvalidInput(format!("document {} is empty", self.doc_ids[d])));
            }
            if let Some(&bad) = doc.iter().find(|&&w| w >= v) {
                return Err(Error::InvalidInput(format!(
                    "document {} has token id {bad} >= vocabulary size {v}",
                    self.doc_ids[d]
                )));
            }
        }
        Ok(())
    }

    pub fn num_docs(&self) -> usize {
        self.documents.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.documents.iter().map(Vec::len).sum()
    }

    pub fn decode(&self, doc: usize) -> Vec<&str> {
        self.documents[doc]
            .iter()
            .map(|&w| self.vocabulary.terms[w as usize].as_str())
            .collect()
    }

    pub fn term_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.vocab_size()];
        for doc in &self.documents {
            for &w in doc {
                counts[w as usize] += 1;
            }
        }
        counts
    }

    /// SHA-256 over the canonical binary encoding, hex encoded.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(io::encode(self));
        hex::encode(hasher.finalize())
    }
}

/// Tokenize, filter and encode raw documents against a freshly built vocabulary.
pub fn preprocess(raw_docs: &[RawDocument], config: &PreprocessConfig) -> Result<EncodedCorpus> {
    config.validate()?;
    if raw_docs.is_empty() {
        return Err(Error::EmptyCorpus("no input documents".into()));
    }
    let filtered = filter_documents(raw_docs, config);

    let mut counts: HashMap<&str, usize> = HashMap::new();
    for (_, tokens) in &filtered {
        for t in tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let vocabulary = Vocabulary::from_terms(
        counts
            .iter()
            .filter(|(_, &c)| c >= config.min_term_count)
            .map(|(t, _)| *t),
    );
    if vocabulary.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "no term reaches min_term_count={}",
            config.min_term_count
        )));
    }

    let mut documents = Vec::with_capacity(filtered.len());
    let mut doc_ids = Vec::with_capacity(filtered.len());
    for (id, tokens) in filtered {
        let encoded: Vec<u32> = tokens.iter().filter_map(|t| vocabulary.id(t)).collect();
        if encoded.is_empty() {
            log::warn!("dropping document {id:?}: empty after preprocessing");
            continue;
        }
        documents.push(encoded);
        doc_ids.push(id);
    }
    if documents.is_empty() {
        return Err(Error::EmptyCorpus("every document is empty after preprocessing".into()));
    }
    log::info!(
        "preprocessed {} of {} documents, vocabulary {}",
        documents.len(),
        raw_docs.len(),
        vocabulary.len()
    );
    EncodedCorpus::new(vocabulary, documents, doc_ids, config.settings())
}

/// Encodes a reference corpus against an existing vocabulary. Tokens outside
/// the vocabulary are dropped, and so are documents left empty. No count
/// threshold is applied.
pub fn encode_with_vocabulary(
    raw_docs: &[RawDocument],
    vocabulary: &Vocabulary,
    config: &PreprocessConfig,
) -> Result<EncodedCorpus> {
    let mut documents = Vec::new();
    let mut doc_ids = Vec::new();
    for (id, tokens) in filter_documents(raw_docs, config) {
        let encoded: Vec<u32> = tokens.iter().filter_map(|t| vocabulary.id(t)).collect();
        if !encoded.is_empty() {
            documents.push(encoded);
            doc_ids.push(id);
        }
    }
    if documents.is_empty() {
        return Err(Error::EmptyCorpus(
            "reference corpus shares no terms with the vocabulary".into(),
        ));
    }
    EncodedCorpus::new(vocabulary.clone(), documents, doc_ids, config.settings())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> PreprocessConfig {
        PreprocessConfig {
            stopwords: parse_stopwords("the\na\nand\nof\nis"),
            ..PreprocessConfig::permissive()
        }
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("", &cfg()).is_empty());
        assert!(tokenize("   \n\t", &cfg()).is_empty());
    }

    #[test]
    fn tokenize_strips_punctuation_and_lowercases() {
        assert_eq!(tokenize("Banks, banks!", &cfg()), vec!["banks", "banks"]);
    }

    #[test]
    fn tokenize_drops_digit_tokens() {
        assert_eq!(tokenize("debt-fund 2016", &cfg()), vec!["debt-fund"]);
        let keep = PreprocessConfig {
            strip_digits: false,
            ..cfg()
        };
        assert_eq!(tokenize("debt-fund 2016", &keep), vec!["debt-fund", "2016"]);
    }

    #[test]
    fn tokenize_keeps_case_when_asked() {
        let c = PreprocessConfig {
            lowercase: false,
            ..cfg()
        };
        assert_eq!(tokenize("Banks (banks)", &c), vec!["Banks", "banks"]);
    }

    #[test]
    fn min_count_counts_across_documents() {
        let docs: Vec<_> = (0..3)
            .map(|i| RawDocument::new(i.to_string(), if i < 2 { "apple apple pear" } else { "apple apple" }))
            .collect();
        let c = PreprocessConfig {
            min_term_count: 3,
            ..cfg()
        };
        let corpus = preprocess(&docs, &c).unwrap();
        assert_eq!(corpus.vocabulary.terms(), ["apple"]);
        assert_eq!(corpus.term_counts(), vec![6]);
        assert_eq!(corpus.num_docs(), 3);
    }

    #[test]
    fn stopword_only_document_is_dropped() {
        let docs = vec![
            RawDocument::new("a", "the and of"),
            RawDocument::new("b", "money debt money"),
        ];
        let corpus = preprocess(&docs, &cfg()).unwrap();
        assert_eq!(corpus.doc_ids, vec!["b"]);
    }

    #[test]
    fn proper_noun_mid_sentence_removed() {
        let docs = vec![RawDocument::new("a", "Banks lend money in Paris. Banks lend again")];
        let corpus = preprocess(&docs, &cfg()).unwrap();
        assert_eq!(
            corpus.decode(0),
            vec!["banks", "lend", "money", "in", "banks", "lend", "again"]
        );
        let keep = PreprocessConfig {
            strip_proper_nouns: false,
            ..cfg()
        };
        let corpus = preprocess(&docs, &keep).unwrap();
        assert!(corpus.vocabulary.id("paris").is_some());
    }

    #[test]
    fn sentence_start_after_quoted_terminator() {
        let toks = scan("he said \"stop.\" Then left? Maybe");
        let starts: Vec<_> = toks
            .iter()
            .filter(|t| t.sentence_start)
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(starts, vec!["he", "Then", "Maybe"]);
    }

    #[test]
    fn empty_results_are_errors() {
        assert!(matches!(preprocess(&[], &cfg()), Err(Error::EmptyCorpus(_))));
        let docs = vec![RawDocument::new("a", "the a of")];
        assert!(matches!(preprocess(&docs, &cfg()), Err(Error::EmptyCorpus(_))));
        let docs = vec![RawDocument::new("a", "rare words only")];
        let c = PreprocessConfig {
            min_term_count: 2,
            ..cfg()
        };
        assert!(matches!(preprocess(&docs, &c), Err(Error::EmptyCorpus(_))));
    }

    #[test]
    fn zero_min_count_rejected() {
        let c = PreprocessConfig {
            min_term_count: 0,
            ..cfg()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn reference_corpus_uses_existing_ids() {
        let vocab = Vocabulary::from_terms(["bank", "money"]);
        let docs = vec![
            RawDocument::new("x", "Money and bank and river"),
            RawDocument::new("y", "river only"),
        ];
        let corpus = encode_with_vocabulary(&docs, &vocab, &cfg()).unwrap();
        assert_eq!(corpus.documents, vec![vec![1, 0]]);
        assert_eq!(corpus.doc_ids, vec!["x"]);
    }

    #[test]
    fn default_stopwords_loaded() {
        let s = default_stopwords();
        assert_eq!(s.len(), 318);
        assert!(s.contains("the"));
    }

    fn word() -> impl Strategy<Value = String> {
        prop_oneof![
            "[a-z]{1,6}",
            "[A-Z][a-z]{1,5}",
            Just("the".to_string()),
            Just("x1".to_string()),
            Just("end.".to_string()),
            Just("(well,".to_string()),
        ]
    }

    fn docs() -> impl Strategy<Value = Vec<RawDocument>> {
        prop::collection::vec(prop::collection::vec(word(), 1..30), 1..8).prop_map(|ds| {
            ds.into_iter()
                .enumerate()
                .map(|(i, ws)| RawDocument::new(i.to_string(), ws.join(" ")))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn vocabulary_respects_min_count_and_stopwords(raw in docs(), min in 1usize..4) {
            let c = PreprocessConfig { min_term_count: min, ..cfg() };
            if let Ok(corpus) = preprocess(&raw, &c) {
                for (w, &n) in corpus.term_counts().iter().enumerate() {
                    prop_assert!(n as usize >= min);
                    let t = corpus.vocabulary.term(w as u32).unwrap();
                    prop_assert!(!c.stopwords.contains(t));
                    prop_assert_eq!(corpus.vocabulary.id(t), Some(w as u32));
                }
            }
        }

        #[test]
        fn decode_reproduces_filtered_tokens(raw in docs(), min in 1usize..3) {
            let c = PreprocessConfig { min_term_count: min, ..cfg() };
            if let Ok(corpus) = preprocess(&raw, &c) {
                let filtered = filter_documents(&raw, &c);
                let mut d = 0;
                for (id, tokens) in filtered {
                    let kept: Vec<&str> = tokens
                        .iter()
                        .map(String::as_str)
                        .filter(|t| corpus.vocabulary.id(t).is_some())
                        .collect();
                    if kept.is_empty() {
                        continue;
                    }
                    prop_assert_eq!(&corpus.doc_ids[d], &id);
                    prop_assert_eq!(corpus.decode(d), kept);
                    d += 1;
                }
                prop_assert_eq!(d, corpus.num_docs());
            }
        }

        #[test]
        fn preprocessing_is_idempotent(raw in docs()) {
            let c = cfg();
            if let Ok(first) = preprocess(&raw, &c) {
                let again: Vec<RawDocument> = (0..first.num_docs())
                    .map(|d| RawDocument::new(first.doc_ids[d].clone(), first.decode(d).join(" ")))
                    .collect();
                let second = preprocess(&again, &c).unwrap();
                prop_assert_eq!(first, second);
            }
        }
    }
}
