//! Co-occurrence statistics and the PMI, NPMI and Coherence topic scores.
//!
//! A unit is either a whole document or a sliding window. Windows start at
//! every token position and hold up to `width` tokens, so a document of
//! length L yields L windows and the trailing ones are shorter. A term
//! counts at most once per unit. All logarithms are natural.
//!
//! Conventions for degenerate pairs:
//! * PMI: a pair that never co-occurs uses `joint + eps` and `df + eps` with
//!   `eps = 1e-12` in place of the raw counts.
//! * NPMI: a pair that never co-occurs scores exactly -1; a pair present in
//!   every unit scores +1; everything else is clamped to [-1, 1].
//!
//! Cache file layout, little-endian:
//!
//! ```text
//! 0    8   magic b"TVCOOCC\0"
//! 8    4   version u32 = 1
//! 12   4   unit kind u32 (0 = document, 1 = sliding window)
//! 16   8   window width u64 (0 for documents)
//! 24   32  SHA-256 of the corpus file encoding
//! 56   32  SHA-256 of the focus term set (all zero when unrestricted)
//! 88   8   N u64 (units)
//! 96   8   V u64
//! 104  8   P u64 (stored pairs)
//! 112  ... V x u64 document frequencies,
//!          then P x (u32 a, u32 b, u64 joint) with a < b, sorted
//! ```

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::EncodedCorpus;
use crate::error::{Error, Result};

pub const ZERO_JOINT_EPSILON: f64 = 1e-12;
pub const DEFAULT_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Document,
    SlidingWindow(usize),
}

impl UnitKind {
    pub fn validate(self) -> Result<()> {
        match self {
            UnitKind::SlidingWindow(w) if w < 2 => {
                Err(Error::InvalidConfig(format!("window width must be >= 2, got {w}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceCounts {
    unit_kind: UnitKind,
    num_units: u64,
    df: Vec<u64>,
    joint: HashMap<(u32, u32), u64>,
}

fn ordered(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl CooccurrenceCounts {
    fn empty(unit_kind: UnitKind, vocab_size: usize) -> Self {
        Self {
            unit_kind,
            num_units: 0,
            df: vec![0; vocab_size],
            joint: HashMap::new(),
        }
    }

    pub fn unit_kind(&self) -> UnitKind {
        self.unit_kind
    }

    pub fn num_units(&self) -> u64 {
        self.num_units
    }

    pub fn vocab_size(&self) -> usize {
        self.df.len()
    }

    /// Units containing `w`; 0 for ids outside the counted vocabulary.
    pub fn df(&self, w: u32) -> u64 {
        self.df.get(w as usize).copied().unwrap_or(0)
    }

    /// Units containing both terms. `None` for a self-pair.
    pub fn joint_df(&self, a: u32, b: u32) -> Option<u64> {
        if a == b {
            return None;
        }
        Some(self.joint.get(&ordered(a, b)).copied().unwrap_or(0))
    }

    pub fn num_pairs(&self) -> usize {
        self.joint.len()
    }

    /// Adds another partial count over the same unit kind and vocabulary.
    pub fn merge(&mut self, other: CooccurrenceCounts) -> Result<()> {
        if other.unit_kind != self.unit_kind || other.df.len() != self.df.len() {
            return Err(Error::InvalidInput("cannot merge counts of different shape".into()));
        }
        self.num_units += other.num_units;
        for (a, b) in self.df.iter_mut().zip(other.df) {
            *a += b;
        }
        for (pair, n) in other.joint {
            *self.joint.entry(pair).or_default() += n;
        }
        Ok(())
    }

    fn add_unit(&mut self, unit: &[u32], focus: Option<&HashSet<u32>>, scratch: &mut Vec<u32>) {
        scratch.clear();
        scratch.extend_from_slice(unit);
        scratch.sort_unstable();
        scratch.dedup();
        self.num_units += 1;
        for &w in scratch.iter() {
            self.df[w as usize] += 1;
        }
        if let Some(f) = focus {
            scratch.retain(|w| f.contains(w));
        }
        for i in 0..scratch.len() {
            for j in i + 1..scratch.len() {
                *self.joint.entry((scratch[i], scratch[j])).or_default() += 1;
            }
        }
    }

    fn count_docs(docs: &[Vec<u32>], unit_kind: UnitKind, vocab_size: usize, focus: Option<&HashSet<u32>>) -> Self {
        let mut counts = Self::empty(unit_kind, vocab_size);
        let mut scratch = Vec::new();
        for doc in docs {
            match unit_kind {
                UnitKind::Document => counts.add_unit(doc, focus, &mut scratch),
                UnitKind::SlidingWindow(w) => {
                    for start in 0..doc.len() {
                        let end = (start + w).min(doc.len());
                        counts.add_unit(&doc[start..end], focus, &mut scratch);
                    }
                }
            }
        }
        counts
    }

    pub fn to_bytes(&self, corpus_digest: &[u8; 32], focus_digest: &[u8; 32]) -> Vec<u8> {
        let mut pairs: Vec<_> = self.joint.iter().map(|(&(a, b), &n)| (a, b, n)).collect();
        pairs.sort_unstable();
        let (kind, width) = match self.unit_kind {
            UnitKind::Document => (0u32, 0u64),
            UnitKind::SlidingWindow(w) => (1, w as u64),
        };
        let mut buf = Vec::with_capacity(112 + 8 * self.df.len() + 16 * pairs.len());
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&kind.to_le_bytes());
        buf.extend_from_slice(&width.to_le_bytes());
        buf.extend_from_slice(corpus_digest);
        buf.extend_from_slice(focus_digest);
        buf.extend_from_slice(&self.num_units.to_le_bytes());
        buf.extend_from_slice(&(self.df.len() as u64).to_le_bytes());
        buf.extend_from_slice(&(pairs.len() as u64).to_le_bytes());
        for d in &self.df {
            buf.extend_from_slice(&d.to_le_bytes());
        }
        for (a, b, n) in pairs {
            buf.extend_from_slice(&a.to_le_bytes());
            buf.extend_from_slice(&b.to_le_bytes());
            buf.extend_from_slice(&n.to_le_bytes());
        }
        buf
    }

    /// Decodes a cache file, returning `None` when its key does not match.
    pub fn from_bytes(
        bytes: &[u8],
        path: &Path,
        corpus_digest: &[u8; 32],
        unit_kind: UnitKind,
        focus_digest: &[u8; 32],
    ) -> Result<Option<Self>> {
        let bad = |r: &str| Error::format(path, r);
        if bytes.len() < 112 || &bytes[..8] != CACHE_MAGIC {
            return Err(bad("not a co-occurrence cache"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        if u32_at(8) != 1 {
            return Err(bad("unsupported cache version"));
        }
        let kind = match (u32_at(12), u64_at(16)) {
            (0, _) => UnitKind::Document,
            (1, w) => UnitKind::SlidingWindow(w as usize),
            _ => return Err(bad("unknown unit kind")),
        };
        if kind != unit_kind || &bytes[24..56] != corpus_digest || &bytes[56..88] != focus_digest {
            return Ok(None);
        }
        let (n, v, p) = (u64_at(88), u64_at(96) as usize, u64_at(104) as usize);
        let expected = v
            .checked_mul(8)
            .and_then(|x| p.checked_mul(16).and_then(|y| x.checked_add(y)))
            .and_then(|x| x.checked_add(112));
        if expected != Some(bytes.len()) {
            return Err(bad("cache body length does not match header"));
        }
        let df = (0..v).map(|i| u64_at(112 + 8 * i)).collect();
        let base = 112 + 8 * v;
        let joint = (0..p)
            .map(|i| {
                let o = base + 16 * i;
                ((u32_at(o), u32_at(o + 4)), u64_at(o + 8))
            })
            .collect();
        Ok(Some(Self {
            unit_kind: kind,
            num_units: n,
            df,
            joint,
        }))
    }
}

const CACHE_MAGIC: &[u8; 8] = b"TVCOOCC\0";

/// Digest of a focus set; all zeros for `None`.
pub fn focus_digest(focus: Option<&HashSet<u32>>) -> [u8; 32] {
    match focus {
        None => [0; 32],
        Some(f) => {
            let sorted: BTreeSet<u32> = f.iter().copied().collect();
            let mut h = Sha256::new();
            for w in sorted {
                h.update(w.to_le_bytes());
            }
            h.finalize().into()
        }
    }
}

/// Counts every term pair over all units.
pub fn count_units(corpus: &EncodedCorpus, unit_kind: UnitKind) -> Result<CooccurrenceCounts> {
    count_units_focused(corpus, unit_kind, None)
}

/// Like [`count_units`], but joint frequencies are kept only for pairs whose
/// terms are both in `focus`. Unit frequencies are always complete.
pub fn count_units_focused(
    corpus: &EncodedCorpus,
    unit_kind: UnitKind,
    focus: Option<&HashSet<u32>>,
) -> Result<CooccurrenceCounts> {
    unit_kind.validate()?;
    if corpus.documents.is_empty() {
        return Err(Error::EmptyCorpus("no documents to count".into()));
    }
    let v = corpus.vocab_size();
    let docs = &corpus.documents;
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(docs.len())
        .max(1);
    if workers == 1 || docs.len() < 64 {
        return Ok(CooccurrenceCounts::count_docs(docs, unit_kind, v, focus));
    }
    let chunk = docs.len().div_ceil(workers);
    let parts: Vec<CooccurrenceCounts> = std::thread::scope(|s| {
        let handles: Vec<_> = docs
            .chunks(chunk)
            .map(|c| s.spawn(move || CooccurrenceCounts::count_docs(c, unit_kind, v, focus)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("counting thread panicked"))
            .collect()
    });
    let mut parts = parts.into_iter();
    let mut total = parts.next().expect("at least one chunk");
    for p in parts {
        total.merge(p)?;
    }
    Ok(total)
}

/// Loads counts from `cache` when its key matches, otherwise counts and writes the cache.
pub fn count_units_cached(
    corpus: &EncodedCorpus,
    unit_kind: UnitKind,
    focus: Option<&HashSet<u32>>,
    cache: &Path,
) -> Result<CooccurrenceCounts> {
    let corpus_digest: [u8; 32] = hex::decode(corpus.digest())
        .expect("hex digest")
        .try_into()
        .expect("32-byte digest");
    let fdigest = focus_digest(focus);
    if cache.exists() {
        let bytes = fs::read(cache).map_err(|e| Error::io(cache, e))?;
        if let Some(c) = CooccurrenceCounts::from_bytes(&bytes, cache, &corpus_digest, unit_kind, &fdigest)? {
            log::info!("loaded co-occurrence counts from {}", cache.display());
            return Ok(c);
        }
        log::info!("cache {} is for a different key, recounting", cache.display());
    }
    let counts = count_units_focused(corpus, unit_kind, focus)?;
    fs::write(cache, counts.to_bytes(&corpus_digest, &fdigest)).map_err(|e| Error::io(cache, e))?;
    Ok(counts)
}

fn check_words(words: &[u32]) -> Result<()> {
    let distinct: HashSet<u32> = words.iter().copied().collect();
    if distinct.len() != words.len() {
        return Err(Error::InvalidInput("topic word list contains duplicates".into()));
    }
    if words.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 distinct topic words, got {}",
            words.len()
        )));
    }
    Ok(())
}

pub fn pmi_pair(a: u32, b: u32, counts: &CooccurrenceCounts) -> f64 {
    let n = counts.num_units as f64;
    let joint = counts.joint_df(a, b).unwrap_or(0);
    let (da, db) = (counts.df(a) as f64, counts.df(b) as f64);
    if joint == 0 {
        let eps = ZERO_JOINT_EPSILON;
        ((eps * n) / ((da + eps) * (db + eps))).ln()
    } else {
        (joint as f64 * n / (da * db)).ln()
    }
}

pub fn npmi_pair(a: u32, b: u32, counts: &CooccurrenceCounts) -> f64 {
    let joint = counts.joint_df(a, b).unwrap_or(0);
    if joint == 0 {
        return -1.0;
    }
    if joint == counts.num_units {
        return 1.0;
    }
    let p_joint = joint as f64 / counts.num_units as f64;
    (pmi_pair(a, b, counts) / -p_joint.ln()).clamp(-1.0, 1.0)
}

fn sum_over_pairs(words: &[u32], counts: &CooccurrenceCounts, f: fn(u32, u32, &CooccurrenceCounts) -> f64) -> f64 {
    let mut total = 0.0;
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            total += f(words[i], words[j], counts);
        }
    }
    total
}

/// Sum of PMI over all unordered pairs of topic words.
pub fn pmi_topic(words: &[u32], counts: &CooccurrenceCounts) -> Result<f64> {
    check_words(words)?;
    Ok(sum_over_pairs(words, counts, pmi_pair))
}

/// Sum of NPMI over all unordered pairs of topic words.
pub fn npmi_topic(words: &[u32], counts: &CooccurrenceCounts) -> Result<f64> {
    check_words(words)?;
    Ok(sum_over_pairs(words, counts, npmi_pair))
}

/// `sum_{m=2..N} sum_{l<m} ln((D(v_m, v_l) + 1) / D(v_l))` over words ranked
/// by descending probability. Requires document units. Only words that act
/// as a denominator (all but the last) need a non-zero document frequency.
pub fn coherence_topic(ranked_words: &[u32], counts: &CooccurrenceCounts) -> Result<f64> {
    check_words(ranked_words)?;
    if counts.unit_kind != UnitKind::Document {
        return Err(Error::InvalidInput("coherence requires document-unit counts".into()));
    }
    let n = ranked_words.len();
    if let Some(&w) = ranked_words[..n - 1].iter().find(|&&w| counts.df(w) == 0) {
        return Err(Error::Undefined(format!(
            "coherence: word id {w} never occurs in the reference corpus"
        )));
    }
    let mut total = 0.0;
    for m in 1..n {
        for l in 0..m {
            let (vm, vl) = (ranked_words[m], ranked_words[l]);
            let joint = counts.joint_df(vm, vl).unwrap_or(0) as f64;
            total += ((joint + 1.0) / counts.df(vl) as f64).ln();
        }
    }
    Ok(total)
}

#[cfg(test)]
#[allow(clippy::approx_constant, clippy::needless_range_loop)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Builds counts directly for two words.
    pub(crate) fn pair_counts(n: u64, df: [u64; 2], joint: u64) -> CooccurrenceCounts {
        let mut c = CooccurrenceCounts::empty(UnitKind::Document, 2);
        c.num_units = n;
        c.df = df.to_vec();
        if joint > 0 {
            c.joint.insert((0, 1), joint);
        }
        c
    }

    fn corpus(v: usize, docs: Vec<Vec<u32>>) -> EncodedCorpus {
        EncodedCorpus::from_ids(v, docs).unwrap()
    }

    #[test]
    fn document_units() {
        let c = count_units(&corpus(2, vec![vec![0, 1, 0], vec![0]]), UnitKind::Document).unwrap();
        assert_eq!(c.num_units(), 2);
        assert_eq!(c.df(0), 2);
        assert_eq!(c.df(1), 1);
        assert_eq!(c.joint_df(0, 1), Some(1));
        assert_eq!(c.joint_df(0, 0), None);
    }

    #[test]
    fn sliding_window_includes_trailing_units() {
        let c = count_units(&corpus(2, vec![vec![0, 1, 0]]), UnitKind::SlidingWindow(2)).unwrap();
        assert_eq!(c.num_units(), 3);
        assert_eq!(c.df(0), 3);
        assert_eq!(c.joint_df(0, 1), Some(2));
        assert_eq!(c.joint_df(1, 0), Some(2));
    }

    #[test]
    fn narrow_window_rejected() {
        let k = corpus(2, vec![vec![0, 1]]);
        assert!(count_units(&k, UnitKind::SlidingWindow(1)).is_err());
    }

    #[test]
    fn pmi_examples() {
        assert!(pmi_topic(&[0, 1], &pair_counts(100, [50, 50], 25)).unwrap().abs() < 1e-12);
        let v = pmi_topic(&[0, 1], &pair_counts(100, [50, 50], 50)).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-12);
        assert!((v - 0.693_147).abs() < 1e-6);
    }

    #[test]
    fn duplicate_or_short_lists_rejected() {
        let c = pair_counts(10, [5, 5], 2);
        assert!(pmi_topic(&[0, 0], &c).is_err());
        assert!(npmi_topic(&[1], &c).is_err());
        assert!(coherence_topic(&[0, 1, 0], &c).is_err());
    }

    #[test]
    fn npmi_examples() {
        assert!((npmi_topic(&[0, 1], &pair_counts(100, [50, 50], 50)).unwrap() - 1.0).abs() < 1e-12);
        assert!(npmi_topic(&[0, 1], &pair_counts(100, [50, 50], 25)).unwrap().abs() < 1e-12);
        assert_eq!(npmi_topic(&[0, 1], &pair_counts(100, [50, 50], 0)).unwrap(), -1.0);
        assert_eq!(npmi_topic(&[0, 1], &pair_counts(7, [7, 7], 7)).unwrap(), 1.0);
    }

    #[test]
    fn zero_joint_pmi_is_finite_and_very_negative() {
        let v = pmi_topic(&[0, 1], &pair_counts(100, [50, 50], 0)).unwrap();
        assert!(v.is_finite() && v < -20.0);
        // A word absent from the reference corpus still yields a finite value.
        assert!(pmi_topic(&[0, 1], &pair_counts(100, [0, 50], 0)).unwrap().is_finite());
    }

    #[test]
    fn coherence_examples() {
        // D(v1) = 10, D(v1, v2) = 4
        let c = pair_counts(20, [10, 6], 4);
        assert!((coherence_topic(&[0, 1], &c).unwrap() - 0.5f64.ln()).abs() < 1e-12);
        assert!((coherence_topic(&[0, 1], &c).unwrap() + 0.693_147).abs() < 1e-6);
        let exact = pair_counts(20, [5, 5], 4);
        assert_eq!(coherence_topic(&[0, 1], &exact).unwrap(), 0.0);
        // order sensitive: denominator is the higher-ranked word
        let c = pair_counts(20, [10, 4], 3);
        assert_ne!(
            coherence_topic(&[0, 1], &c).unwrap(),
            coherence_topic(&[1, 0], &c).unwrap()
        );
    }

    #[test]
    fn coherence_errors() {
        let c = pair_counts(20, [0, 6], 0);
        assert!(matches!(coherence_topic(&[0, 1], &c), Err(Error::Undefined(_))));
        assert!(coherence_topic(&[1, 0], &c).is_ok());
        let k = corpus(2, vec![vec![0, 1]]);
        let windows = count_units(&k, UnitKind::SlidingWindow(2)).unwrap();
        assert!(coherence_topic(&[0, 1], &windows).is_err());
    }

    #[test]
    fn focus_restricts_pairs_only() {
        let k = corpus(4, vec![vec![0, 1, 2, 3], vec![2, 3]]);
        let focus: HashSet<u32> = [2, 3].into_iter().collect();
        let full = count_units(&k, UnitKind::Document).unwrap();
        let part = count_units_focused(&k, UnitKind::Document, Some(&focus)).unwrap();
        assert_eq!(part.num_pairs(), 1);
        assert_eq!(part.joint_df(2, 3), full.joint_df(2, 3));
        for w in 0..4 {
            assert_eq!(part.df(w), full.df(w));
        }
    }

    #[test]
    fn cache_round_trip_and_key_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cooc.bin");
        let k = corpus(3, vec![vec![0, 1, 2], vec![1, 2]]);
        let first = count_units_cached(&k, UnitKind::SlidingWindow(2), None, &path).unwrap();
        let again = count_units_cached(&k, UnitKind::SlidingWindow(2), None, &path).unwrap();
        assert_eq!(first, again);
        let other = count_units_cached(&k, UnitKind::Document, None, &path).unwrap();
        assert_eq!(other.unit_kind(), UnitKind::Document);
        fs::write(&path, b"garbage").unwrap();
        assert!(count_units_cached(&k, UnitKind::Document, None, &path).is_err());
    }

    #[test]
    fn parallel_counting_matches_sequential() {
        let docs: Vec<Vec<u32>> = (0..300u32)
            .map(|i| (0..12).map(|j| (i * 7 + j * 3) % 40).collect())
            .collect();
        let k = corpus(40, docs);
        for kind in [UnitKind::Document, UnitKind::SlidingWindow(5)] {
            let par = count_units(&k, kind).unwrap();
            let seq = CooccurrenceCounts::count_docs(&k.documents, kind, 40, None);
            assert_eq!(par, seq);
        }
    }

    /// Dense recount: for every unit and every ordered term pair, test presence directly.
    fn dense_recount(docs: &[Vec<u32>], v: usize, kind: UnitKind) -> (u64, Vec<u64>, Vec<Vec<u64>>) {
        let mut units: Vec<&[u32]> = Vec::new();
        for d in docs {
            match kind {
                UnitKind::Document => units.push(d),
                UnitKind::SlidingWindow(w) => {
                    for s in 0..d.len() {
                        units.push(&d[s..(s + w).min(d.len())]);
                    }
                }
            }
        }
        let mut df = vec![0; v];
        let mut joint = vec![vec![0; v]; v];
        for u in &units {
            for a in 0..v {
                let has_a = u.contains(&(a as u32));
                if has_a {
                    df[a] += 1;
                }
                for b in 0..v {
                    if a != b && has_a && u.contains(&(b as u32)) {
                        joint[a][b] += 1;
                    }
                }
            }
        }
        (units.len() as u64, df, joint)
    }

    fn small_docs() -> impl Strategy<Value = (usize, Vec<Vec<u32>>)> {
        (2usize..8).prop_flat_map(|v| {
            (
                Just(v),
                prop::collection::vec(prop::collection::vec(0..v as u32, 1..12), 1..20),
            )
        })
    }

    proptest! {
        #[test]
        fn sparse_counts_match_dense_recount((v, docs) in small_docs(), w in 2usize..6, by_doc in any::<bool>()) {
            let kind = if by_doc { UnitKind::Document } else { UnitKind::SlidingWindow(w) };
            let c = count_units(&corpus(v, docs.clone()), kind).unwrap();
            let (n, df, joint) = dense_recount(&docs, v, kind);
            prop_assert_eq!(c.num_units(), n);
            for a in 0..v {
                prop_assert_eq!(c.df(a as u32), df[a]);
                for b in 0..v {
                    if a != b {
                        let j = c.joint_df(a as u32, b as u32).unwrap();
                        prop_assert_eq!(j, joint[a][b]);
                        prop_assert!(j <= df[a].min(df[b]));
                    }
                }
            }
        }

        #[test]
        fn pair_metrics_bounded_and_permutation_invariant((v, docs) in small_docs(), seed in any::<u64>()) {
            prop_assume!(v >= 3);
            let k = corpus(v, docs);
            let c = count_units(&k, UnitKind::Document).unwrap();
            let words: Vec<u32> = (0..v as u32).filter(|&w| c.df(w) > 0).collect();
            prop_assume!(words.len() >= 2);
            let mut rev = words.clone();
            rev.rotate_left((seed % words.len() as u64) as usize);
            rev.reverse();
            let p = words.len() * (words.len() - 1) / 2;
            let npmi = npmi_topic(&words, &c).unwrap();
            prop_assert!(npmi.abs() <= p as f64 + 1e-12);
            prop_assert!((npmi - npmi_topic(&rev, &c).unwrap()).abs() < 1e-9);
            prop_assert!((pmi_topic(&words, &c).unwrap() - pmi_topic(&rev, &c).unwrap()).abs() < 1e-6);
            for i in 0..words.len() {
                for j in i + 1..words.len() {
                    let x = npmi_pair(words[i], words[j], &c);
                    prop_assert!((-1.0..=1.0).contains(&x));
                }
            }
        }

        #[test]
        fn raising_joint_never_lowers_scores(n in 10u64..200, da in 1u64..10, db in 1u64..10, j in 0u64..9) {
            let j = j.min(da.min(db) - 1);
            let lo = pair_counts(n, [da, db], j);
            let hi = pair_counts(n, [da, db], j + 1);
            prop_assert!(pmi_topic(&[0, 1], &hi).unwrap() >= pmi_topic(&[0, 1], &lo).unwrap());
            prop_assert!(npmi_topic(&[0, 1], &hi).unwrap() >= npmi_topic(&[0, 1], &lo).unwrap());
            prop_assert!(coherence_topic(&[0, 1], &hi).unwrap() >= coherence_topic(&[0, 1], &lo).unwrap());
        }
    }
}
