//! The `topicvar` command-line tool. Each subcommand reads files, writes
//! files, and leaves a manifest describing what it did.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error. Failures print one
//! JSON line `{"error": <kind>, "message": <text>}` on stderr and remove any
//! outputs the command had started writing.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::cooccurrence::{self, CooccurrenceCounts, UnitKind};
use crate::corpus::{self, EncodedCorpus, InputFormat, PreprocessConfig};
use crate::error::Error;
use crate::estimator::{self, FeatureMatrix, KernelKind, SplitMode, SvrModel, SvrParams};
use crate::evaluation::{self, RatingsTable};
use crate::manifest::{sidecar_path, RunManifest};
use crate::posterior_metrics;
use crate::sampler::{self, AlphaPrior, LdaConfig, PhiSampleStore, PosteriorSummary, TopWords};

pub const LOG_ENV: &str = "TOPICVAR_LOG";

const SUMMARY_FILE: &str = "summary.bin";
const PHI_FILE: &str = "phi.bin";
const TOPICS_FILE: &str = "topics.csv";
const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "topicvar", version, about = "Topic quality from posterior variability")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize and filter raw documents into a binary corpus.
    Preprocess(PreprocessArgs),
    /// Run the Gibbs sampler and collect posterior samples.
    Train(TrainArgs),
    /// Score the topics of a trained run.
    Score(ScoreArgs),
    /// Fit the SVR estimator on rated feature tables.
    TrainEstimator(TrainEstimatorArgs),
    /// Apply a fitted estimator to a feature table.
    Predict(PredictArgs),
    /// Pearson r of every score column against mean human ratings.
    Evaluate(EvaluateArgs),
    /// Weighted Krippendorff's alpha per dataset.
    Agreement(AgreementArgs),
    /// Train on some datasets, test on another.
    CrossEval(CrossEvalArgs),
    /// Cross-domain evaluation with each feature removed in turn.
    Ablate(AblateArgs),
    /// Scatter-plot data (metric vs mean rating) per score column.
    ExportScatter(ExportScatterArgs),
    /// Per (document, topic) posterior mean, std and cv as CSV.
    ExportPosterior(ExportPosteriorArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Auto,
    Jsonl,
    Text,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// One stopword per line. Defaults to the bundled English list.
    #[arg(long, conflicts_with = "no_stopwords")]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub no_stopwords: bool,
    #[arg(long, default_value_t = 3)]
    pub min_count: usize,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,
    #[arg(long)]
    pub keep_digits: bool,
    #[arg(long)]
    pub keep_proper_nouns: bool,
    #[arg(long)]
    pub keep_case: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_alpha(s: &str) -> Result<AlphaPrior, String> {
    if s == "auto" {
        return Ok(AlphaPrior::Auto);
    }
    match s.parse::<f64>() {
        Ok(a) if a > 0.0 && a.is_finite() => Ok(AlphaPrior::Fixed(a)),
        _ => Err(format!("expected `auto` or a positive number, got {s:?}")),
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub topics: usize,
    /// `auto` (50 / K) or a positive number.
    #[arg(long, default_value = "auto", value_parser = parse_alpha)]
    pub alpha: AlphaPrior,
    #[arg(long, default_value_t = 0.01)]
    pub beta: f64,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub top_n: usize,
    /// Run directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum MetricArg {
    Variability,
    Stability,
    Mu,
    Sigma,
    Pmi,
    Npmi,
    Coherence,
}

impl MetricArg {
    fn name(self) -> &'static str {
        match self {
            MetricArg::Variability => "variability",
            MetricArg::Stability => "stability",
            MetricArg::Mu => "mu",
            MetricArg::Sigma => "sigma",
            MetricArg::Pmi => "pmi",
            MetricArg::Npmi => "npmi",
            MetricArg::Coherence => "coherence",
        }
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "variability,stability,mu,sigma,pmi,npmi,coherence"
    )]
    pub metrics: Vec<MetricArg>,
    /// Corpus to use instead of the one recorded in the run manifest.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Raw documents for co-occurrence counts; defaults to the training corpus.
    #[arg(long)]
    pub ref_corpus: Option<PathBuf>,
    /// Sliding-window width for PMI and NPMI.
    #[arg(long, default_value_t = cooccurrence::DEFAULT_WINDOW)]
    pub window: usize,
    /// Count PMI and NPMI over whole documents instead of windows.
    #[arg(long)]
    pub doc_units: bool,
    /// Dataset tag for the output rows; defaults to the run directory name.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Attach mean ratings as the label column.
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Precomputed feature CSV joined on (dataset, topic_id).
    #[arg(long)]
    pub extra: Option<PathBuf>,
    /// Directory for reusable co-occurrence count caches.
    #[arg(long)]
    pub counts_cache: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Rbf,
    Linear,
}

#[derive(Debug, Args)]
pub struct SvrArgs {
    #[arg(long, value_enum, default_value_t = KernelArg::Rbf)]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// RBF width; defaults to 1 / number of features.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

impl SvrArgs {
    fn params(&self) -> SvrParams {
        SvrParams {
            kernel: match self.kernel {
                KernelArg::Rbf => KernelKind::Rbf,
                KernelArg::Linear => KernelKind::Linear,
            },
            c: self.c,
            epsilon: self.epsilon,
            gamma: self.gamma,
            tol: self.tol,
            ..SvrParams::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainEstimatorArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub features: Vec<PathBuf>,
    /// Labels from a ratings file instead of the `rating` column.
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    #[command(flatten)]
    pub svr: SvrArgs,
    /// Choose C and gamma by leave-one-dataset-out search first.
    #[arg(long)]
    pub grid_search: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub ratings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    #[arg(long)]
    pub ratings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    OneToOne,
    TwoToOne,
    All,
}

impl From<ModeArg> for SplitMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::OneToOne => SplitMode::OneToOne,
            ModeArg::TwoToOne => SplitMode::TwoToOne,
            ModeArg::All => SplitMode::Both,
        }
    }
}

#[derive(Debug, Args)]
pub struct CrossEvalArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub features: Vec<PathBuf>,
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::OneToOne)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub svr: SvrArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub features: Vec<PathBuf>,
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::TwoToOne)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub svr: SvrArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportScatterArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub ratings: PathBuf,
    /// Output directory, one `<metric>.csv` per score column.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportPosteriorArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Files and directories a command has started to write. Unless
/// [`Outputs::commit`] is called they are deleted on drop.
#[derive(Default)]
struct Outputs {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn file(&mut self, p: impl Into<PathBuf>) -> PathBuf {
        let p = p.into();
        self.files.push(p.clone());
        p
    }

    fn dir(&mut self, p: &Path) -> anyhow::Result<()> {
        if !p.is_dir() {
            fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))?;
            self.dirs.push(p.to_path_buf());
        }
        Ok(())
    }

    fn commit(&mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        for d in self.dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", json!({"error": "usage", "message": first}));
            return 1;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let (kind, code) = match e.downcast_ref::<Error>() {
                Some(Error::InvalidConfig(_)) => ("invalid_config", 1),
                Some(inner) => (inner.kind(), 2),
                None => ("runtime", 2),
            };
            // error displays may already embed their source
            let mut parts: Vec<String> = Vec::new();
            for cause in e.chain() {
                let s = cause.to_string();
                if !parts.last().is_some_and(|p| p.contains(&s)) {
                    parts.push(s);
                }
            }
            let message = parts.join(": ").replace('\n', " ");
            eprintln!("{}", json!({"error": kind, "message": message}));
            code
        }
    }
}

pub fn execute(command: Command) -> anyhow::Result<()> {
    let mut outputs = Outputs::default();
    match command {
        Command::Preprocess(a) => preprocess(a, &mut outputs)?,
        Command::Train(a) => train(a, &mut outputs)?,
        Command::Score(a) => score(a, &mut outputs)?,
        Command::TrainEstimator(a) => train_estimator(a, &mut outputs)?,
        Command::Predict(a) => predict(a, &mut outputs)?,
        Command::Evaluate(a) => evaluate(a, &mut outputs)?,
        Command::Agreement(a) => agreement(a, &mut outputs)?,
        Command::CrossEval(a) => cross_eval(a, &mut outputs)?,
        Command::Ablate(a) => ablate(a, &mut outputs)?,
        Command::ExportScatter(a) => export_scatter(a, &mut outputs)?,
        Command::ExportPosterior(a) => export_posterior(a, &mut outputs)?,
    }
    outputs.commit();
    Ok(())
}

fn parent_dir(p: &Path) -> &Path {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    }
}

/// Writes `<out>.manifest.json` recording `out` and the given inputs.
fn write_sidecar(mut manifest: RunManifest, inputs: &[&Path], out: &Path, outputs: &mut Outputs) -> anyhow::Result<()> {
    for p in inputs {
        manifest.add_input(p)?;
    }
    manifest.add_output(parent_dir(out), out)?;
    let mp = outputs.file(sidecar_path(out));
    manifest.write(&mp)?;
    Ok(())
}

fn preprocess(a: PreprocessArgs, outputs: &mut Outputs) -> anyhow::Result<()> {
    let stopwords: HashSet<String> = match (&a.stopwords, a.no_stopwords) {
        (_, true) => HashSet::new(),
        (Some(p), _) => corpus::parse_stopwords(
            &fs::read_to_string(p).with_context(|| format!("reading stopwords {}", p.display()))?,
        ),
        (None, false) => corpus::default_stopwords(),
    };
    let cfg = PreprocessConfig {
        stopwords,
        min_term_count: a.min_count,
        strip_digits: !a.keep_digits,
        strip_proper_nouns: !a.keep_proper_nouns,
        lowercase: !a.keep_case,
    };
    cfg.validate()?;
    let format = match a.format {
        FormatArg::Auto => InputFormat::from_path(&a.input),
        FormatArg::Jsonl => InputFormat::JsonLines,
        FormatArg::Text => InputFormat::PlainText,
    };
    let raw = corpus::read_documents(&a.input, format)?;
    let encoded = corpus::preprocess(&raw, &cfg)?;
    log::info!(
        "{} documents, {} terms, {} tokens",
        encoded.num_docs(),
        encoded.vocab_size(),
        encoded.num_tokens()
    );
    let out = outputs.file(&a.out);
    corpus::write_corpus(&encoded, &out)?;

    let mut m = RunManifest::new("preprocess");
    m.corpus_digest = Some(encoded.digest());
    m.config = json!({
        "preprocess": cfg.settings(),
        "stopwords": match (&a.stopwords, a.no_stopwords) {
            (_, true) => json!("none"),
            (Some(p), _) => json!(p.display().to_string()),
            (None, false) => json!("builtin"),
        },
        "stopword_count": cfg.stopwords.len(),
        "input_documents": raw.len(),
        "documents": encoded.num_docs(),
        "vocab_size": encoded.vocab_size(),
        "tokens": encoded.num_tokens(),
    });
    let mut inputs = vec![a.input.as_path()];
    if let Some(p) = &a.stopwords {
        inputs.push(p);
    }
    write_sidecar(m, &inputs, &out, outputs)
}

fn train(a: TrainArgs, outputs: &mut Outputs) -> anyhow::Result<()> {
    let cfg = LdaConfig {
        num_topics: a.topics,
        alpha: a.alpha,
        beta: a.beta,
        total_iterations: a.iters,
        burn_in: a.burnin,
        thin: a.thin,
        seed: a.seed,
        top_n: a.top_n,
    };
    cfg.validate()?;
    let corpus = corpus::read_corpus(&a.corpus)?;
    outputs.dir(&a.out)?;
    let phi_path = outputs.file(a.out.join(PHI_FILE));
    let summary_path = outputs.file(a.out.join(SUMMARY_FILE));
    let topics_path = outputs.file(a.out.join(TOPICS_FILE));
    let manifest_path = outputs.file(a.out.join(MANIFEST_FILE));

    let chain = sampler::run_chain(&corpus, &cfg, &phi_path, &mut [])?;
    chain.summary.write(&summary_path)?;
    chain.top_words.write_csv(&corpus.vocabulary, &topics_path)?;

    let mut m = RunManifest::new("train");
    m.seed = Some(cfg.seed);
    m.corpus_digest = Some(corpus.digest());
    let corpus_abs = fs::canonicalize(&a.corpus).unwrap_or_else(|_| a.corpus.clone());
    m.config = json!({
        "lda": {
            "num_topics": cfg.num_topics,
            "alpha_mode": match cfg.alpha { AlphaPrior::Auto => "auto", AlphaPrior::Fixed(_) => "fixed" },
            "alpha": cfg.alpha(),
            "beta": cfg.beta,
            "total_iterations": cfg.total_iterations,
            "burn_in": cfg.burn_in,
            "thin": cfg.thin,
            "seed": cfg.seed,
            "top_n": cfg.top_n,
        },
        "collected_samples": chain.summary.num_samples,
        "corpus_path": corpus_abs.display().to_string(),
        "documents": corpus.num_docs(),
        "vocab_size": corpus.vocab_size(),
        "rng": "ChaCha8",
    });
    m.add_input(&a.corpus)?;
    for p in [&summary_path, &phi_path, &topics_path] {
        m.add_output(&a.out, p)?;
    }
    m.write(&manifest_path)?;
    Ok(())
}

fn read_run_manifest(run: &Path) -> anyhow::Result<RunManifest> {
    let mp = run.join(MANIFEST_FILE);
    let m = RunManifest::read(&mp)?;
    m.verify_outputs(&mp)?;
    Ok(m)
}

fn run_corpus(
    run: &Path,
    manifest: &RunManifest,
    override_path: Option<&Path>,
) -> anyhow::Result<(PathBuf, EncodedCorpus)> {
    let path = match override_path {
        Some(p) => p.to_path_buf(),
        None => manifest.config["corpus_path"]
            .as_str()
            .map(PathBuf::from)
            .ok_or_else(|| anyhow!("{} does not record a corpus path", run.join(MANIFEST_FILE).display()))?,
    };
    let corpus = corpus::read_corpus(&path)?;
    if manifest.corpus_digest.as_deref() != Some(corpus.digest().as_str()) {
        bail!(Error::InvalidInput(format!(
            "corpus {} is not the one run {} was trained on",
            path.display(),
            run.display()
        )));
    }
    Ok((path, corpus))
}

fn counts_for(
    corpus: &EncodedCorpus,
    unit: UnitKind,
    focus: &HashSet<u32>,
    cache_dir: Option<&Path>,
) -> anyhow::Result<CooccurrenceCounts> {
    Ok(match cache_dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let name = match unit {
                UnitKind::Document => "cooc-doc.bin".to_string(),
                UnitKind::SlidingWindow(w) => format!("cooc-win{w}.bin"),
            };
            cooccurrence::count_units_cached(corpus, unit, Some(focus), &dir.join(name))?
        }
        None => cooccurrence::count_units_focused(corpus, unit, Some(focus))?,
    })
}

fn score(a: ScoreArgs, outputs: &mut Outputs) -> anyhow::Result<()> {
    let mut seen = HashSet::new();
    let metrics: Vec<MetricArg> = a.metrics.iter().copied().filter(|m| seen.insert(*m)).collect();
    if metrics.is_empty() {
        bail!(Error::InvalidConfig("no metrics requested".into()));
    }
    let needs = |set: &[MetricArg]| metrics.iter().any(|m| set.contains(m));
    if needs(&[MetricArg::Pmi, MetricArg::Npmi]) && !a.doc_units {
        UnitKind::SlidingWindow(a.window).validate()?;
    }
    let manifest = read_run_manifest(&a.run)?;
    let top = TopWords::read_csv(&a.run.join(TOPICS_FILE))?;
    let k = top.num_topics();
    let dataset = match &a.dataset {
        Some(d) => d.clone(),
        None => fs::canonicalize(&a.run)?
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into()),
    };

    let mut columns: Vec<(&str, Vec<f64>)> = Vec::new();
    let mut inputs: Vec<PathBuf> = vec![a.run.join(MANIFEST_FILE)];

    if needs(&[MetricArg::Variability, MetricArg::Mu, MetricArg::Sigma]) {
        let p = a.run.join(SUMMARY_FILE);
        let summary = PosteriorSummary::read(&p)?;
        inputs.push(p);
        for m in &metrics {
            let v = match m {
                MetricArg::Variability => posterior_metrics::variability(&summary)?,
                MetricArg::Mu => posterior_metrics::mu_variability(&summary)?,
                MetricArg::Sigma => posterior_metrics::sigma_variability(&summary)?,
                _ => continue,
            };
            columns.push((m.name(), v.scores));
        }
    }
    if needs(&[MetricArg::Stability]) {
        let p = a.run.join(PHI_FILE);
        let store = PhiSampleStore::open(&p)?;
        inputs.push(p);
        columns.push(("stability", posterior_metrics::stability(&store)?.scores));
    }
    if needs(&[MetricArg::Pmi, MetricArg::Npmi, MetricArg::Coherence]) {
        let (corpus_path, corpus) = run_corpus(&a.run, &manifest, a.corpus.as_deref())?;
        inputs.push(corpus_path);
        let reference = match &a.ref_corpus {
            Some(p) => {
                let raw = corpus::read_documents(p, InputFormat::from_path(p))?;
                inputs.push(p.clone());
                let s = corpus.settings;
                let cfg = PreprocessConfig {
                    stopwords: HashSet::new(),
                    min_term_count: 1,
                    strip_digits: s.strip_digits,
                    strip_proper_nouns: s.strip_proper_nouns,
                    lowercase: s.lowercase,
                };
                corpus::encode_with_vocabulary(&raw, &corpus.vocabulary, &cfg)?
            }
            None => corpus,
        };
        let focus: HashSet<u32> = top.ids.iter().flatten().copied().collect();
        let cache = a.counts_cache.as_deref();
        if needs(&[MetricArg::Pmi, MetricArg::Npmi]) {
            let unit = if a.doc_units {
                UnitKind::Document
            } else {
                UnitKind::SlidingWindow(a.window)
            };
            let counts = counts_for(&reference, unit, &focus, cache)?;
            for m in &metrics {
                let f = match m {
                    MetricArg::Pmi => cooccurrence::pmi_topic,
                    MetricArg::Npmi => cooccurrence::npmi_topic,
                    _ => continue,
                };
                let scores = top
                    .ids
                    .iter()
                    .map(|w| f(w, &counts))
                    .collect::<crate::Result<Vec<f64>>>()?;
                columns.push((m.name(), scores));
            }
        }
        if needs(&[MetricArg::Coherence]) {
            let counts = counts_for(&reference, UnitKind::Document, &focus, cache)?;
            let scores = top
                .ids
                .iter()
                .map(|w| cooccurrence::coherence_topic(w, &counts))
                .collect::<crate::Result<Vec<f64>>>()?;
            columns.push(("coherence", scores));
        }
    }
    // keep the requested column order
    columns.sort_by_key(|(name, _)| metrics.iter().position(|m| m.name() == *name));

    let mut table = FeatureMatrix::from_columns(&dataset, &columns, None)?;
    debug_assert_eq!(table.len(), k);
    if let Some(extra) = &a.extra {
        table = join_extra(&table, &FeatureMatrix::read_csv(extra)?)?;
        inputs.push(extra.clone());
    }
    if let Some(r) = &a.ratings {
        table = RatingsTable::read_csv(r)?.for_dataset(&dataset).label(&table)?;
        inputs.push(r.clone());
    }
    let out = outputs.file(&a.out);
    table.write_csv(&out)?;

    let mut m = RunManifest::new("score");
    m.seed = manifest.seed;
    m.corpus_digest = manifest.corpus_digest.clone();
    m.config = json!({
        "dataset": dataset,
        "metrics": metrics.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "pmi_units": if a.doc_units { json!("document") } else { json!({"window": a.window}) },
        "coherence_units": "document",
        "zero_joint_epsilon": cooccurrence::ZERO_JOINT_EPSILON,
        "reference_corpus": a.ref_corpus.as_ref().map(|p| p.display().to_string()),
    });
    let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    write_sidecar(m, &inputs, &out, outputs)
}

/// Appends the columns of `extra` to `base`, matching rows on (dataset, topic_id).
fn join_extra(base: &FeatureMatrix, extra: &FeatureMatrix) -> anyhow::Result<FeatureMatrix> {
    let index: HashMap<(&str, u64), usize> = (0..extra.len())
        .map(|i| ((extra.dataset_tags[i].as_str(), extra.topic_ids[i]), i))
        .collect();
    let mut names = base.feature_names.clone();
    for n in &extra.feature_names {
        if names.contains(n) {
            bail!(Error::FeatureMismatch(format!(
                "extra column {n} duplicates a computed metric"
            )));
        }
        names.push(n.clone());
    }
    let mut rows = ndarray::Array2::<f64>::zeros((base.len(), names.len()));
    for i in 0..base.len() {
        let key = (base.dataset_tags[i].as_str(), base.topic_ids[i]);
        let j = *index
            .get(&key)
            .ok_or_else(|| Error::FeatureMismatch(format!("extra features lack topic {}/{}", key.0, key.1)))?;
        let mut row = rows.row_mut(i);
        for (c, v) in base.rows.row(i).iter().chain(extra.rows.row(j).iter()).enumerate() {
            row[c] = *v;
        }
    }
    Ok(FeatureMatrix::new(
        names,
        rows,
        base.labels.clone(),
        base.dataset_tags.clone(),
        base.topic_ids.clone(),
    )?)
}

/// Reads feature CSVs, optionally labels them from a ratings file, and splits
/// the rows into one table per dataset.
fn load_tables(files: &[PathBuf], ratings: Option<&Path>) -> anyhow::Result<Vec<FeatureMatrix>> {
    let read = files
        .iter()
        .map(|p| FeatureMatrix::read_csv(p))
        .collect::<crate::Result<Vec<_>>>()?;
    let mut merged = FeatureMatrix::concat(&read.iter().collect::<Vec<_>>())?;
    if let Some(r) = ratings {
        merged = RatingsTable::read_csv(r)?.label(&merged)?;
    }
    merged.labels()?;
    Ok(merged.split_by_dataset())
}

fn input_list<'a>(files: &'a [PathBuf], ratings: Option<&'a PathBuf>) -> Vec<&'a Path> {
    files.iter().chain(ratings).map(PathBuf::as_path).collect()
}

fn train_estimator(a: TrainEstimatorArgs, outputs: &mut Outputs) -> anyhow::Result<()> {
    let tables = load_tables(&a.features, a.ratings.as_deref())?;
    let mut params = a.svr.params();
    let mut grid = None;
    if a.grid_search {
        let (best, points) = estimator::grid_search(&tables, &params)?;
        params = best;
        grid = Some(points);
    }
    let merged = FeatureMatrix::concat(&tables.iter().collect::<Vec<_>>())?;
    let model = estimator::train_svr(&merged, &params)?;
    let out = outputs.file(&a.out);
    fs::write(&out, model.to_json()? + "\n").with_context(|| format!("writing {}", out.display()))?;

    let mut m = RunManifest::new("train-estimator");
    m.config = json!({
        "svr": params,
        "resolved_kernel": model.kernel,
        "datasets": tables.iter().map(FeatureMatrix::name).collect::<Vec<_>>(),
        "rows": merged.len(),
        "grid_search": grid,
        "support_vectors": model.support_vectors.len(),
        "solver_iterations": model.iterations,
    });
    write_sidecar(m, &input_list(&a.features, a.ratings.as_ref()), &out, outputs)
}

fn predict(a: PredictArgs, outputs: &mut Outputs) -> anyhow::Result<()> {
    let text = fs::read_to_string(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let model = SvrModel::from_json(&text)?;
    let features = FeatureMatrix::read_csv(&a.features)?;
    let pred = estimator::predict(&model, &features)?;
    let table = FeatureMatrix::new(
        vec!["predicted".into()],
        ndarray::Array2::from_shape_vec((pred.len(), 1), pred)?,
        features.labels.clone(),
        features.dataset_tags.clone(),
        features.topic_ids.clone(),
    )?;
    let out = outputs.file(&a.out);
    table.write_csv(&out)?;
    let mut m = RunManifest::new("predict");
    m.config = json!({ "rows": table.len() });
    write_sidecar(m, &[&a.model, &a.features], &out, outputs)
}

fn evaluate(a: EvaluateArgs, outputs: &mut Outputs) -> anyhow::Result<()> {
    let scores = FeatureMatrix::read_csv(&a.scores)?;
    let ratings = RatingsTable::read_csv(&a.ratings)?;
    let rows = evaluation::correlate_metrics(&scores, &ratings)?;
    let out = outputs.file(&a.out);
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record(["metric", "pearson_r", "n", "error"])?;
    for r in &rows {
        let (v, e) = split_result(&r.pearson_r);
        w.write_record([r.metric.clone(), v, r.n.to_string(), e])?;
    }
    w.flush()?;
    drop(w);
    let mut m = RunManifest::new("evaluate");
    m.config = json!({ "statistic": "pearson_r", "against": "mean_rating" });
    write_sidecar(m, &[&a.scores, &a.ratings], &out, outputs)
}

fn split_result(r: &Result<f64, String>) -> (String, String) {
    match r {
        Ok(v) => (format!("{v:?}"), String::new()),
        Err(e) => (String::new(), e.clone()),
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn agreement(a: AgreementArgs, outputs: &mut Outputs) -> anyhow::Result<()> {
    let ratings = RatingsTable::read_csv(&a.ratings)?;
    let out = outputs.file(&a.out);
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record(["dataset", "alpha", "items", "error"])?;
    for d in ratings.datasets() {
        let t = ratings.for_dataset(&d);
        let r = evaluation::krippendorff_alpha_weighted(&t).map_err(|e| e.to_string());
        let (v, e) = split_result(&r);
        w.write_record([d, v, t.len().to_string(), e])?;
    }
    w.flush()?;
    drop(w);
    let mut m = RunManifest::new("agreement");
    m.config = json!({ "statistic": "krippendorff_alpha", "distance": "interval" });
    write_sidecar(m, &[&a.ratings], &out, outputs)
}

fn cross_eval(a: CrossEvalArgs, outputs: &mut Outputs) -> anyhow::Result<()> {
    let tables = load_tables(&a.features, a.ratings.as_deref())?;
    let params = a.svr.params();
    let report = estimator::cross_domain_fit_eval(&tables, a.mode.into(), &params)?;
    let out = outputs.file(&a.out);
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record(["test", "train", "pearson_r", "error"])?;
    for c in &report.cells {
        let (v, e) = split_result(&c.r);
        w.write_record([c.test.clone(), c.train_label(), v, e])?;
    }
    for (test, mean) in &report.test_means {
        w.write_record([test.clone(), "mean".into(), opt_num(*mean), String::new()])?;
    }
    w.flush()?;
    drop(w);
    let mut m = RunManifest::new("cross-eval");
    m.config = json!({ "mode": SplitMode::from(a.mode), "svr": params });
    write_sidecar(m, &input_list(&a.features, a.ratings.as_ref()), &out, outputs)
}

fn ablate(a: AblateArgs, outputs: &mut Outputs) -> anyhow::Result<()> {
    let tables = load_tables(&a.features, a.ratings.as_deref())?;
    let params = a.svr.params();
    let rows = evaluation::ablate(&tables, a.mode.into(), &params)?;
    let out = outputs.file(&a.out);
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record(["removed_feature", "test", "pearson_r", "full_pearson_r"])?;
    for r in &rows {
        w.write_record([
            r.removed_feature.clone(),
            r.test.clone(),
            opt_num(r.r),
            opt_num(r.full_r),
        ])?;
    }
    w.flush()?;
    drop(w);
    let mut m = RunManifest::new("ablate");
    m.config = json!({ "mode": SplitMode::from(a.mode), "svr": params });
    write_sidecar(m, &input_list(&a.features, a.ratings.as_ref()), &out, outputs)
}

fn safe_file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn export_scatter(a: ExportScatterArgs, outputs: &mut Outputs) -> anyhow::Result<()> {
    let scores = FeatureMatrix::read_csv(&a.scores)?;
    let all = RatingsTable::read_csv(&a.ratings)?;
    let present: BTreeSet<&String> = scores.dataset_tags.iter().collect();
    let ratings = RatingsTable::new(
        all.rows
            .iter()
            .filter(|r| present.contains(&r.dataset))
            .cloned()
            .collect(),
    )?;
    outputs.dir(&a.out)?;
    let mut m = RunManifest::new("export-scatter");
    let mut stems = HashSet::new();
    for (j, name) in scores.feature_names.iter().enumerate() {
        let stem = safe_file_stem(name);
        if !stems.insert(stem.clone()) {
            bail!(Error::InvalidInput(format!(
                "two metrics map to the file name {stem}.csv"
            )));
        }
        let data = evaluation::export_scatter(
            &scores.dataset_tags,
            &scores.topic_ids,
            &scores.rows.column(j).to_vec(),
            &ratings,
        )
        .with_context(|| format!("metric {name}"))?;
        let p = outputs.file(a.out.join(format!("{stem}.csv")));
        data.write_csv(&p)?;
        m.add_output(&a.out, &p)?;
    }
    m.add_input(&a.scores)?;
    m.add_input(&a.ratings)?;
    m.config = json!({ "fit": "least_squares human_mean ~ metric_value" });
    let mp = outputs.file(a.out.join(MANIFEST_FILE));
    m.write(&mp)?;
    Ok(())
}

fn export_posterior(a: ExportPosteriorArgs, outputs: &mut Outputs) -> anyhow::Result<()> {
    let run_manifest = read_run_manifest(&a.run)?;
    let p = a.run.join(SUMMARY_FILE);
    let s = PosteriorSummary::read(&p)?;
    let out = outputs.file(&a.out);
    let mut w = csv::Writer::from_path(&out)?;
    w.write_record(["doc", "topic", "mu", "sigma", "cv"])?;
    for d in 0..s.num_docs() {
        for k in 0..s.num_topics() {
            w.write_record([
                d.to_string(),
                k.to_string(),
                format!("{:?}", s.mean[[d, k]]),
                format!("{:?}", s.std[[d, k]]),
                format!("{:?}", s.cv[[d, k]]),
            ])?;
        }
    }
    w.flush()?;
    drop(w);
    let mut m = RunManifest::new("export-posterior");
    m.seed = run_manifest.seed;
    m.corpus_digest = run_manifest.corpus_digest;
    m.config = json!({ "num_samples": s.num_samples });
    write_sidecar(m, &[&p], &out, outputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn alpha_parsing() {
        assert_eq!(parse_alpha("auto"), Ok(AlphaPrior::Auto));
        assert_eq!(parse_alpha("0.5"), Ok(AlphaPrior::Fixed(0.5)));
        assert!(parse_alpha("-1").is_err());
        assert!(parse_alpha("x").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_from(["topicvar", "train"]), 1);
        assert_eq!(run_from(["topicvar", "bogus"]), 1);
        assert_eq!(run_from(["topicvar", "--help"]), 0);
    }

    #[test]
    fn failed_command_removes_partial_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("docs.txt");
        fs::write(&input, "the of and\n").unwrap();
        let out = dir.path().join("corpus.bin");
        let code = run_from([
            OsString::from("topicvar"),
            "preprocess".into(),
            "--input".into(),
            input.into_os_string(),
            "--out".into(),
            out.clone().into_os_string(),
        ]);
        assert_eq!(code, 2);
        assert!(!out.exists());
        assert!(!sidecar_path(&out).exists());
    }

    #[test]
    fn join_extra_matches_on_keys() {
        let base = FeatureMatrix::from_columns("a", &[("x", vec![1.0, 2.0])], None).unwrap();
        let mut extra = FeatureMatrix::from_columns("a", &[("cv", vec![0.3, 0.4])], None).unwrap();
        extra.topic_ids = vec![1, 0];
        let j = join_extra(&base, &extra).unwrap();
        assert_eq!(j.column("cv"), Some(vec![0.4, 0.3]));
        extra.topic_ids = vec![1, 5];
        assert!(join_extra(&base, &extra).is_err());
    }
}
