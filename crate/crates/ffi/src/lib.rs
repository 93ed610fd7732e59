//! C ABI over the `topicvar` library.
//!
//! Every fallible function returns a [`TvStatus`]. On failure the message is
//! kept per thread and can be read with [`tv_last_error_message`]. Objects are
//! handed out as opaque pointers and must be released with the matching
//! `*_free` function. Array outputs are written into caller buffers whose
//! length must match exactly; the required lengths are available from the
//! accessor functions.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use topicvar::cooccurrence::{coherence_topic, count_units, npmi_topic, pmi_topic, CooccurrenceCounts, UnitKind};
use topicvar::corpus::{
    preprocess, read_corpus, read_documents, write_corpus, EncodedCorpus, InputFormat, PreprocessConfig,
};
use topicvar::estimator::{predict, train_svr, FeatureMatrix, KernelKind, SvrModel, SvrParams};
use topicvar::evaluation::{krippendorff_alpha_weighted, pearson_r, RatingRow, RatingsTable};
use topicvar::posterior_metrics::{mu_variability, sigma_variability, stability, variability};
use topicvar::sampler::{run_chain, AlphaPrior, ChainOutput, LdaConfig};
use topicvar::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// An output buffer length does not match the required length.
    BufferLength = 3,
    Io = 10,
    InvalidConfig = 11,
    InvalidInput = 12,
    EmptyCorpus = 13,
    Format = 14,
    FeatureMismatch = 15,
    NotConverged = 16,
    Undefined = 17,
    Panic = 99,
}

impl From<&Error> for TvStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } => TvStatus::Io,
            Error::InvalidConfig(_) => TvStatus::InvalidConfig,
            Error::InvalidInput(_) => TvStatus::InvalidInput,
            Error::EmptyCorpus(_) => TvStatus::EmptyCorpus,
            Error::Format { .. } | Error::Csv(_) | Error::Json(_) => TvStatus::Format,
            Error::FeatureMismatch(_) => TvStatus::FeatureMismatch,
            Error::NotConverged { .. } => TvStatus::NotConverged,
            Error::Undefined(_) => TvStatus::Undefined,
        }
    }
}

struct Failure(TvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(TvStatus::from(&e), e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> TvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            TvStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(TvStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> FfiResult<PathBuf> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Failure(TvStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T: Copy>(values: &[T], out: *mut T, len: usize) -> FfiResult<()> {
    if len != values.len() {
        return Err(Failure(
            TvStatus::BufferLength,
            format!("output buffer has length {len}, need {}", values.len()),
        ));
    }
    if values.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, len);
    Ok(())
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn tv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

// ---- corpus ----

pub struct TvCorpus {
    inner: EncodedCorpus,
}

/// Reads a binary corpus written by `topicvar preprocess`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_corpus_load(path: *const c_char, out: *mut *mut TvCorpus) -> TvStatus {
    guard(|| {
        let p = path_arg(path, "path")?;
        put(
            out,
            TvCorpus {
                inner: read_corpus(&p)?,
            },
        )
    })
}

/// Tokenizes and encodes a raw document file (`.jsonl` with `id`/`text`
/// fields, otherwise one document per line) using the default filters.
/// A `min_term_count` of 0 keeps the default threshold.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_corpus_preprocess(
    path: *const c_char,
    min_term_count: usize,
    out: *mut *mut TvCorpus,
) -> TvStatus {
    guard(|| {
        let p = path_arg(path, "path")?;
        let docs = read_documents(&p, InputFormat::from_path(&p))?;
        let mut config = PreprocessConfig::default();
        if min_term_count > 0 {
            config.min_term_count = min_term_count;
        }
        put(
            out,
            TvCorpus {
                inner: preprocess(&docs, &config)?,
            },
        )
    })
}

/// Builds a corpus from word ids. `ids` holds the documents back to back;
/// `doc_lengths[d]` tokens belong to document `d`.
///
/// # Safety
/// `doc_lengths` must point to `num_docs` values and `ids` to their sum.
#[no_mangle]
pub unsafe extern "C" fn tv_corpus_from_ids(
    vocab_size: usize,
    doc_lengths: *const usize,
    num_docs: usize,
    ids: *const u32,
    out: *mut *mut TvCorpus,
) -> TvStatus {
    guard(|| {
        let lengths = slice_arg(doc_lengths, num_docs, "doc_lengths")?;
        let total: usize = lengths.iter().sum();
        let ids = slice_arg(ids, total, "ids")?;
        let mut docs = Vec::with_capacity(num_docs);
        let mut at = 0;
        for &n in lengths {
            docs.push(ids[at..at + n].to_vec());
            at += n;
        }
        put(
            out,
            TvCorpus {
                inner: EncodedCorpus::from_ids(vocab_size, docs)?,
            },
        )
    })
}

/// # Safety
/// `corpus` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tv_corpus_save(corpus: *const TvCorpus, path: *const c_char) -> TvStatus {
    guard(|| {
        let c = deref(corpus, "corpus")?;
        let p = path_arg(path, "path")?;
        Ok(write_corpus(&c.inner, &p)?)
    })
}

/// # Safety
/// `corpus` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tv_corpus_num_docs(corpus: *const TvCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.inner.num_docs())
}

/// # Safety
/// `corpus` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tv_corpus_vocab_size(corpus: *const TvCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.inner.vocab_size())
}

/// # Safety
/// `corpus` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tv_corpus_num_tokens(corpus: *const TvCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.inner.num_tokens())
}

/// Copies the term for `id` into `buf` (NUL-terminated, truncated to fit) and
/// returns the full term length in bytes, or -1 if there is no such id.
///
/// # Safety
/// `corpus` must be a live handle; `buf` must hold `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn tv_corpus_term(corpus: *const TvCorpus, id: u32, buf: *mut c_char, capacity: usize) -> i64 {
    let Some(term) = corpus.as_ref().and_then(|c| c.inner.vocabulary.term(id)) else {
        return -1;
    };
    if !buf.is_null() && capacity > 0 {
        let n = term.len().min(capacity - 1);
        ptr::copy_nonoverlapping(term.as_ptr().cast(), buf, n);
        *buf.add(n) = 0;
    }
    term.len() as i64
}

/// # Safety
/// `corpus` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tv_corpus_free(corpus: *mut TvCorpus) {
    free(corpus)
}

// ---- sampler ----

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TvLdaConfig {
    pub num_topics: usize,
    /// When true, alpha is 50 / num_topics and `alpha` is ignored.
    pub alpha_auto: bool,
    pub alpha: f64,
    pub beta: f64,
    pub total_iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub top_n: usize,
}

impl From<TvLdaConfig> for LdaConfig {
    fn from(c: TvLdaConfig) -> Self {
        LdaConfig {
            num_topics: c.num_topics,
            alpha: if c.alpha_auto {
                AlphaPrior::Auto
            } else {
                AlphaPrior::Fixed(c.alpha)
            },
            beta: c.beta,
            total_iterations: c.total_iterations,
            burn_in: c.burn_in,
            thin: c.thin,
            seed: c.seed,
            top_n: c.top_n,
        }
    }
}

#[no_mangle]
pub extern "C" fn tv_lda_config_default() -> TvLdaConfig {
    let d = LdaConfig::default();
    TvLdaConfig {
        num_topics: d.num_topics,
        alpha_auto: d.alpha == AlphaPrior::Auto,
        alpha: d.alpha(),
        beta: d.beta,
        total_iterations: d.total_iterations,
        burn_in: d.burn_in,
        thin: d.thin,
        seed: d.seed,
        top_n: d.top_n,
    }
}

pub struct TvRun {
    out: ChainOutput,
    top_n: usize,
}

/// Runs one Gibbs chain. Phi samples are streamed to `phi_path`, which must
/// stay in place while stability is computed from the run.
///
/// # Safety
/// `corpus` and `config` must be valid; `phi_path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tv_run_chain(
    corpus: *const TvCorpus,
    config: *const TvLdaConfig,
    phi_path: *const c_char,
    out: *mut *mut TvRun,
) -> TvStatus {
    guard(|| {
        let c = deref(corpus, "corpus")?;
        let cfg: LdaConfig = (*deref(config, "config")?).into();
        let p = path_arg(phi_path, "phi_path")?;
        let chain = run_chain(&c.inner, &cfg, &p, &mut [])?;
        let top_n = chain.top_words.ids.first().map_or(0, Vec::len);
        put(out, TvRun { out: chain, top_n })
    })
}

/// # Safety
/// `run` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tv_run_num_topics(run: *const TvRun) -> usize {
    run.as_ref().map_or(0, |r| r.out.summary.num_topics())
}

/// # Safety
/// `run` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tv_run_num_docs(run: *const TvRun) -> usize {
    run.as_ref().map_or(0, |r| r.out.summary.num_docs())
}

/// # Safety
/// `run` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tv_run_num_samples(run: *const TvRun) -> usize {
    run.as_ref().map_or(0, |r| r.out.summary.num_samples)
}

/// Words per topic in [`tv_run_top_words`].
///
/// # Safety
/// `run` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tv_run_top_n(run: *const TvRun) -> usize {
    run.as_ref().map_or(0, |r| r.top_n)
}

/// Top word ids, row-major `num_topics x top_n`.
///
/// # Safety
/// `run` must be a live handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tv_run_top_words(run: *const TvRun, out: *mut u32, len: usize) -> TvStatus {
    guard(|| {
        let r = deref(run, "run")?;
        let flat: Vec<u32> = r.out.top_words.ids.concat();
        write_out(&flat, out, len)
    })
}

/// Posterior mean of theta, row-major `num_docs x num_topics`.
///
/// # Safety
/// `run` must be a live handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tv_run_theta_mean(run: *const TvRun, out: *mut f64, len: usize) -> TvStatus {
    guard(|| {
        let r = deref(run, "run")?;
        let flat: Vec<f64> = r.out.summary.mean.iter().copied().collect();
        write_out(&flat, out, len)
    })
}

type ScoreFn = fn(&TvRun) -> topicvar::Result<Vec<f64>>;

unsafe fn run_scores(run: *const TvRun, out: *mut f64, len: usize, f: ScoreFn) -> TvStatus {
    guard(|| {
        let r = deref(run, "run")?;
        write_out(&f(r)?, out, len)
    })
}

/// Per-topic variability; `len` must equal the number of topics.
///
/// # Safety
/// `run` must be a live handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tv_run_variability(run: *const TvRun, out: *mut f64, len: usize) -> TvStatus {
    run_scores(run, out, len, |r| Ok(variability(&r.out.summary)?.scores))
}

/// # Safety
/// `run` must be a live handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tv_run_mu_variability(run: *const TvRun, out: *mut f64, len: usize) -> TvStatus {
    run_scores(run, out, len, |r| Ok(mu_variability(&r.out.summary)?.scores))
}

/// # Safety
/// `run` must be a live handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tv_run_sigma_variability(run: *const TvRun, out: *mut f64, len: usize) -> TvStatus {
    run_scores(run, out, len, |r| Ok(sigma_variability(&r.out.summary)?.scores))
}

/// Reads the phi sample file written by the chain.
///
/// # Safety
/// `run` must be a live handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tv_run_stability(run: *const TvRun, out: *mut f64, len: usize) -> TvStatus {
    run_scores(run, out, len, |r| Ok(stability(&r.out.phi_store)?.scores))
}

/// # Safety
/// `run` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tv_run_free(run: *mut TvRun) {
    free(run)
}

// ---- co-occurrence ----

pub struct TvCounts {
    inner: CooccurrenceCounts,
}

/// Counts word and pair frequencies over `corpus`. A `window` of 0 uses whole
/// documents as units, otherwise sliding windows of that width.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_counts_new(corpus: *const TvCorpus, window: usize, out: *mut *mut TvCounts) -> TvStatus {
    guard(|| {
        let c = deref(corpus, "corpus")?;
        let unit = if window == 0 {
            UnitKind::Document
        } else {
            UnitKind::SlidingWindow(window)
        };
        put(
            out,
            TvCounts {
                inner: count_units(&c.inner, unit)?,
            },
        )
    })
}

/// # Safety
/// `counts` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tv_counts_num_units(counts: *const TvCounts) -> u64 {
    counts.as_ref().map_or(0, |c| c.inner.num_units())
}

type TopicFn = fn(&[u32], &CooccurrenceCounts) -> topicvar::Result<f64>;

unsafe fn topic_score(counts: *const TvCounts, words: *const u32, n: usize, out: *mut f64, f: TopicFn) -> TvStatus {
    guard(|| {
        let c = deref(counts, "counts")?;
        let w = slice_arg(words, n, "words")?;
        let v = f(w, &c.inner)?;
        write_out(&[v], out, 1)
    })
}

/// Sum of PMI over all unordered pairs of `words`.
///
/// # Safety
/// `counts` must be a live handle, `words` must hold `n` ids, `out` one value.
#[no_mangle]
pub unsafe extern "C" fn tv_pmi(counts: *const TvCounts, words: *const u32, n: usize, out: *mut f64) -> TvStatus {
    topic_score(counts, words, n, out, pmi_topic)
}

/// Sum of NPMI over all unordered pairs of `words`.
///
/// # Safety
/// As for [`tv_pmi`].
#[no_mangle]
pub unsafe extern "C" fn tv_npmi(counts: *const TvCounts, words: *const u32, n: usize, out: *mut f64) -> TvStatus {
    topic_score(counts, words, n, out, npmi_topic)
}

/// Coherence of `words`, ranked by descending probability. Needs counts built
/// with `window = 0`.
///
/// # Safety
/// As for [`tv_pmi`].
#[no_mangle]
pub unsafe extern "C" fn tv_coherence(counts: *const TvCounts, words: *const u32, n: usize, out: *mut f64) -> TvStatus {
    topic_score(counts, words, n, out, coherence_topic)
}

/// # Safety
/// `counts` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tv_counts_free(counts: *mut TvCounts) {
    free(counts)
}

// ---- estimator ----

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvKernel {
    Rbf = 0,
    Linear = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TvSvrParams {
    pub kernel: TvKernel,
    pub c: f64,
    pub epsilon: f64,
    /// Values <= 0 select 1 / number of features.
    pub gamma: f64,
    pub tol: f64,
    pub max_iterations: usize,
}

impl From<TvSvrParams> for SvrParams {
    fn from(p: TvSvrParams) -> Self {
        SvrParams {
            kernel: match p.kernel {
                TvKernel::Rbf => KernelKind::Rbf,
                TvKernel::Linear => KernelKind::Linear,
            },
            c: p.c,
            epsilon: p.epsilon,
            gamma: (p.gamma > 0.0).then_some(p.gamma),
            tol: p.tol,
            max_iterations: p.max_iterations,
        }
    }
}

#[no_mangle]
pub extern "C" fn tv_svr_params_default() -> TvSvrParams {
    let d = SvrParams::default();
    TvSvrParams {
        kernel: TvKernel::Rbf,
        c: d.c,
        epsilon: d.epsilon,
        gamma: d.gamma.unwrap_or(0.0),
        tol: d.tol,
        max_iterations: d.max_iterations,
    }
}

pub struct TvSvrModel {
    inner: SvrModel,
}

/// Column names, or `f0 .. f{n-1}` when `names` is NULL.
unsafe fn feature_names(names: *const *const c_char, n: usize) -> FfiResult<Vec<String>> {
    if names.is_null() {
        return Ok((0..n).map(|j| format!("f{j}")).collect());
    }
    std::slice::from_raw_parts(names, n)
        .iter()
        .map(|&p| path_arg(p, "feature name").map(|s| s.to_string_lossy().into_owned()))
        .collect()
}

unsafe fn feature_matrix(
    rows: *const f64,
    num_rows: usize,
    num_features: usize,
    names: *const *const c_char,
    labels: Option<Vec<f64>>,
) -> FfiResult<FeatureMatrix> {
    let cells = num_rows
        .checked_mul(num_features)
        .ok_or_else(|| Failure(TvStatus::InvalidInput, "matrix size overflows".into()))?;
    let data = slice_arg(rows, cells, "rows")?.to_vec();
    let arr = ndarray::Array2::from_shape_vec((num_rows, num_features), data)
        .map_err(|e| Failure(TvStatus::InvalidInput, e.to_string()))?;
    Ok(FeatureMatrix::new(
        feature_names(names, num_features)?,
        arr,
        labels,
        vec!["ffi".into(); num_rows],
        (0..num_rows as u64).collect(),
    )?)
}

/// Fits an epsilon-SVR on a row-major `num_rows x num_features` matrix.
/// `feature_names` may be NULL; prediction matches columns by these names.
///
/// # Safety
/// `rows` must hold `num_rows * num_features` values, `labels` `num_rows`,
/// `feature_names` NULL or `num_features` strings.
#[no_mangle]
pub unsafe extern "C" fn tv_svr_train(
    rows: *const f64,
    num_rows: usize,
    num_features: usize,
    feature_names: *const *const c_char,
    labels: *const f64,
    params: *const TvSvrParams,
    out: *mut *mut TvSvrModel,
) -> TvStatus {
    guard(|| {
        let y = slice_arg(labels, num_rows, "labels")?.to_vec();
        let m = feature_matrix(rows, num_rows, num_features, feature_names, Some(y))?;
        let p: SvrParams = (*deref(params, "params")?).into();
        put(
            out,
            TvSvrModel {
                inner: train_svr(&m, &p)?,
            },
        )
    })
}

/// Predicts one value per row. Columns are matched to the training columns by
/// name, as for [`tv_svr_train`].
///
/// # Safety
/// `model` must be a live handle; buffers as for [`tv_svr_train`], and `out`
/// must hold `len == num_rows` values.
#[no_mangle]
pub unsafe extern "C" fn tv_svr_predict(
    model: *const TvSvrModel,
    rows: *const f64,
    num_rows: usize,
    num_features: usize,
    feature_names: *const *const c_char,
    out: *mut f64,
    len: usize,
) -> TvStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let x = feature_matrix(rows, num_rows, num_features, feature_names, None)?;
        write_out(&predict(&m.inner, &x)?, out, len)
    })
}

/// Writes the model as JSON, the same format `topicvar train-estimator` writes.
///
/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tv_svr_save(model: *const TvSvrModel, path: *const c_char) -> TvStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let p = path_arg(path, "path")?;
        let json = m.inner.to_json()?;
        std::fs::write(&p, json + "\n").map_err(|e| io_failure(&p, e))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_svr_load(path: *const c_char, out: *mut *mut TvSvrModel) -> TvStatus {
    guard(|| {
        let p = path_arg(path, "path")?;
        let text = std::fs::read_to_string(&p).map_err(|e| io_failure(&p, e))?;
        put(
            out,
            TvSvrModel {
                inner: SvrModel::from_json(&text)?,
            },
        )
    })
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure(TvStatus::Io, format!("io error on {}: {e}", path.display()))
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tv_svr_free(model: *mut TvSvrModel) {
    free(model)
}

// ---- evaluation ----

/// # Safety
/// `x` and `y` must each hold `n` values; `out` one value.
#[no_mangle]
pub unsafe extern "C" fn tv_pearson_r(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> TvStatus {
    guard(|| {
        let r = pearson_r(slice_arg(x, n, "x")?, slice_arg(y, n, "y")?)?;
        write_out(&[r], out, 1)
    })
}

/// Interval-weighted Krippendorff's alpha over a row-major
/// `num_items x num_raters` matrix of ratings in [1, 4]. NaN marks a missing
/// rating; items with no rating at all are skipped.
///
/// # Safety
/// `ratings` must hold `num_items * num_raters` values; `out` one value.
#[no_mangle]
pub unsafe extern "C" fn tv_krippendorff_alpha(
    ratings: *const f64,
    num_items: usize,
    num_raters: usize,
    out: *mut f64,
) -> TvStatus {
    guard(|| {
        let cells = num_items
            .checked_mul(num_raters)
            .ok_or_else(|| Failure(TvStatus::InvalidInput, "matrix size overflows".into()))?;
        let data = slice_arg(ratings, cells, "ratings")?;
        let mut rows = Vec::new();
        for (i, item) in data.chunks(num_raters.max(1)).enumerate().take(num_items) {
            let vals: Vec<Option<f64>> = item.iter().map(|&v| (!v.is_nan()).then_some(v)).collect();
            if vals.iter().any(Option::is_some) {
                rows.push(RatingRow::new("ffi", i as u64, vals)?);
            }
        }
        let a = krippendorff_alpha_weighted(&RatingsTable::new(rows)?)?;
        write_out(&[a], out, 1)
    })
}
