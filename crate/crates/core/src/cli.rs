//! Command-line entry point. Every run prints its resolved configuration to
//! stderr; usage errors exit with 2, stage failures with 1.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cluster::{self, lemma_baseline, read_score_records, write_score_records, Partition, ScoreMatrix};
use crate::corpus::{self, load_corpus, Corpus, MentionKind, Scope, SynthConfig};
use crate::encoder::{EncoderConfig, SyntheticEncoder};
use crate::metrics::{self, Metric, MetricReport};
use crate::pairrep::{self, ModelParams, Optimizer, Symmetrize, TrainConfig};
use crate::topics;

#[derive(Debug, Parser, Serialize)]
#[command(name = "paircoref", version, about = "Pairwise event and entity coreference toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Write a synthetic corpus with planted clusters.
    GenSynth(GenSynthArgs),
    /// Predict document topics with TF-IDF k-means.
    Topics(TopicsArgs),
    /// Train a pair scorer on gold clusters.
    Train(TrainArgs),
    /// Score mention pairs with a trained model.
    Predict(PredictArgs),
    /// Cluster scored pairs into a partition.
    Cluster(ClusterArgs),
    /// Score a predicted partition against gold.
    Score(ScoreArgs),
    /// Same-head-lemma baseline partition.
    BaselineLemma(BaselineArgs),
    /// Topics, prediction, clustering and scoring in one run.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskArg {
    Event,
    Entity,
}

impl From<TaskArg> for MentionKind {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Event => MentionKind::Event,
            TaskArg::Entity => MentionKind::Entity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeArg {
    #[value(name = "within_doc")]
    WithinDoc,
    #[value(name = "cross_doc")]
    CrossDoc,
}

impl From<ScopeArg> for Scope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::WithinDoc => Scope::WithinDoc,
            ScopeArg::CrossDoc => Scope::CrossDoc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetrizeArg {
    Ordered,
    Mean,
}

#[derive(Debug, Args, Serialize)]
pub struct CorpusOpts {
    /// Corpus as JSON lines, one document per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Overrides the task inferred from the corpus.
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
    #[arg(long, value_enum, default_value = "within_doc")]
    pub scope: ScopeArg,
}

#[derive(Debug, Args, Serialize)]
pub struct EncoderOpts {
    /// `synthetic` or `file:<path>` for a PREMB embedding file.
    #[arg(long, default_value = "synthetic")]
    pub encoder: String,
    /// Synthetic encoder width; defaults to the model's width, else 32.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.25)]
    pub beta: f64,
    #[arg(long, default_value_t = 3)]
    pub window: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TopicOpts {
    /// Topic assignment file from `topics`.
    #[arg(long, conflicts_with = "kmax")]
    pub topics: Option<PathBuf>,
    /// Predict topics with K chosen in `2..=kmax`. Gold topics are used when
    /// neither this nor `--topics` is given.
    #[arg(long)]
    pub kmax: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct ThresholdOpts {
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Tune the threshold on a development set.
    #[arg(long)]
    pub tune: bool,
    #[arg(long, default_value = "conll")]
    pub metric: String,
}

#[derive(Debug, Args, Serialize)]
pub struct GenSynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub docs: usize,
    #[arg(long, default_value_t = 16)]
    pub clusters: usize,
    #[arg(long, default_value_t = 5)]
    pub mentions_per_cluster: usize,
    #[arg(long, default_value_t = 30)]
    pub vocab: usize,
    #[arg(long, default_value_t = 4)]
    pub topics: usize,
    #[arg(long, value_enum, default_value = "event")]
    pub task: TaskArg,
    #[arg(long, default_value_t = 0.75)]
    pub arg_prob: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct TopicsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub kmax: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusOpts,
    #[command(flatten)]
    pub encoder: EncoderOpts,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 128)]
    pub h1: usize,
    #[arg(long, default_value_t = 128)]
    pub h2: usize,
    /// Fraction of negative pairs kept.
    #[arg(long, default_value_t = 1.0)]
    pub neg_ratio: f64,
    #[arg(long, value_enum, default_value = "adam")]
    pub optimizer: OptimizerArg,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[command(flatten)]
    pub corpus: CorpusOpts,
    #[command(flatten)]
    pub encoder: EncoderOpts,
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub topic: TopicOpts,
    /// Seed for topic prediction.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "ordered")]
    pub symmetrize: SymmetrizeArg,
    /// Output score records.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterArgs {
    #[arg(long)]
    pub scores: PathBuf,
    /// Corpus whose mentions form the universe; unscored mentions stay singletons.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[command(flatten)]
    pub threshold: ThresholdOpts,
    /// Development scores for `--tune`.
    #[arg(long)]
    pub dev_scores: Option<PathBuf>,
    /// Development corpus with gold clusters for `--tune`.
    #[arg(long)]
    pub dev_corpus: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "within_doc")]
    pub scope: ScopeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    /// Gold partition records, or a corpus with gold clusters.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Scope used when the gold side is a corpus.
    #[arg(long, value_enum, default_value = "within_doc")]
    pub scope: ScopeArg,
    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub corpus: CorpusOpts,
    #[command(flatten)]
    pub topic: TopicOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub corpus: CorpusOpts,
    #[command(flatten)]
    pub encoder: EncoderOpts,
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub topic: TopicOpts,
    #[command(flatten)]
    pub threshold: ThresholdOpts,
    /// Development corpus for `--tune`.
    #[arg(long)]
    pub dev_corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "ordered")]
    pub symmetrize: SymmetrizeArg,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Stage { stage: &'static str, error: anyhow::Error },
}

trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> StageExt<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure::Stage { stage, error: e.into() })
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    eprintln!("config: {}", serde_json::to_string(&cli.command).expect("config serializes"));
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            2
        }
        Err(Failure::Stage { stage, error }) => {
            eprintln!("error [stage {stage}]: {error:#}");
            1
        }
    }
}

fn dispatch(cmd: &Command) -> Result<(), Failure> {
    match cmd {
        Command::GenSynth(a) => gen_synth(a),
        Command::Topics(a) => topics_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Cluster(a) => cluster_cmd(a),
        Command::Score(a) => score_cmd(a),
        Command::BaselineLemma(a) => baseline_cmd(a),
        Command::Pipeline(a) => pipeline_cmd(a),
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn check_distinct(inputs: &[&Path], output: &Path) -> Result<(), Failure> {
    match inputs.iter().find(|i| same_file(i, output)) {
        Some(i) => usage(format!("output path {} is also an input", i.display())),
        None => Ok(()),
    }
}

fn load(opts: &CorpusOpts) -> Result<Corpus, Failure> {
    load_with(&opts.corpus, opts.task, opts.scope)
}

fn load_with(path: &Path, task: Option<TaskArg>, scope: ScopeArg) -> Result<Corpus, Failure> {
    let c = load_corpus(path).with_context(|| format!("loading {}", path.display())).stage("load-corpus")?;
    let c = match task {
        Some(t) => c.with_task(t.into()).stage("load-corpus")?,
        None => c,
    };
    Ok(c.with_scope(scope.into()))
}

fn encoder_config(opts: &EncoderOpts, model_dim: Option<usize>) -> Result<EncoderConfig, Failure> {
    if opts.encoder == "synthetic" {
        let dim = opts.dim.or(model_dim).unwrap_or(SyntheticEncoder::default().dim);
        return Ok(EncoderConfig::Synthetic(SyntheticEncoder {
            dim,
            alpha: opts.alpha,
            beta: opts.beta,
            window: opts.window,
        }));
    }
    match opts.encoder.strip_prefix("file:") {
        Some(path) if !path.is_empty() => Ok(EncoderConfig::File { path: path.into() }),
        _ => usage(format!("--encoder must be `synthetic` or `file:<path>`, got `{}`", opts.encoder)),
    }
}

fn metric(name: &str) -> Result<Metric, Failure> {
    name.parse().or_else(|e: metrics::MetricError| usage(e.to_string()))
}

fn resolve_topics(c: &Corpus, opts: &TopicOpts, seed: u64) -> Result<BTreeMap<String, String>, Failure> {
    if c.scope == Scope::WithinDoc {
        return Ok(BTreeMap::new());
    }
    if let Some(path) = &opts.topics {
        return topics::read_topics(path).with_context(|| format!("reading {}", path.display())).stage("topics");
    }
    if let Some(k_max) = opts.kmax {
        let a = topics::predict_topics(c, k_max, seed).stage("topics")?;
        eprintln!("topics: K = {} (silhouette {:.4})", a.k, a.silhouette);
        return Ok(a.labels());
    }
    c.gold_topics().stage("topics")
}

fn gen_synth(a: &GenSynthArgs) -> Result<(), Failure> {
    let cfg = SynthConfig {
        topics: a.topics,
        task: a.task.into(),
        arg_prob: a.arg_prob,
        ..SynthConfig::new(a.docs, a.clusters, a.mentions_per_cluster, a.vocab, a.seed)
    };
    let c = corpus::gen_synthetic(&cfg).stage("gen-synth")?;
    c.write(&a.out).stage("write")?;
    let s = corpus::corpus_stats(&c);
    eprintln!("wrote {} documents, {} mentions, {} clusters", s.documents, s.mentions, s.clusters);
    Ok(())
}

fn topics_cmd(a: &TopicsArgs) -> Result<(), Failure> {
    check_distinct(&[&a.corpus], &a.out)?;
    let c = load_with(&a.corpus, None, ScopeArg::CrossDoc)?;
    let t = topics::predict_topics(&c, a.kmax, a.seed).stage("topics")?;
    t.write(&a.out).stage("write")?;
    eprintln!("topics: K = {} (silhouette {:.4})", t.k, t.silhouette);
    Ok(())
}

fn train_cmd(a: &TrainArgs) -> Result<(), Failure> {
    check_distinct(&[&a.corpus.corpus], &a.model)?;
    let c = load(&a.corpus)?;
    let encoder = encoder_config(&a.encoder, None)?.build().stage("encoder")?;
    let cfg = TrainConfig {
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
        h1: a.h1,
        h2: a.h2,
        neg_keep_ratio: a.neg_ratio,
        optimizer: match a.optimizer {
            OptimizerArg::Adam => Optimizer::Adam,
            OptimizerArg::Sgd => Optimizer::Sgd,
        },
    };
    let (model, log) = pairrep::train(&c, &encoder, &cfg).stage("train")?;
    eprintln!(
        "trained on {} pairs ({} positive): loss {:.6} -> {:.6}",
        log.pairs, log.positives, log.initial_loss, log.final_loss
    );
    model.save(&a.model).stage("write")?;
    Ok(())
}

fn score_blocks(
    c: &Corpus,
    enc: &EncoderOpts,
    model_path: &Path,
    topics: &BTreeMap<String, String>,
    symmetrize: SymmetrizeArg,
) -> Result<Vec<ScoreMatrix>, Failure> {
    let model = ModelParams::load(model_path).with_context(|| format!("loading {}", model_path.display())).stage("load-model")?;
    if model.task != c.task {
        return Err(Failure::Stage {
            stage: "predict",
            error: anyhow!("model was trained for {} mentions, corpus has {}", model.task, c.task),
        });
    }
    let encoder = encoder_config(enc, Some(model.dim))?.build().stage("encoder")?;
    let sym = match symmetrize {
        SymmetrizeArg::Ordered => Symmetrize::Ordered,
        SymmetrizeArg::Mean => Symmetrize::Mean,
    };
    pairrep::predict_blocks(c, &model, &encoder, c.scope, topics, sym).stage("predict")
}

fn records_of(blocks: &[ScoreMatrix]) -> Vec<cluster::ScoreRecord> {
    blocks.iter().flat_map(ScoreMatrix::records).collect()
}

fn predict_cmd(a: &PredictArgs) -> Result<(), Failure> {
    let mut inputs: Vec<&Path> = vec![&a.corpus.corpus, &a.model];
    inputs.extend(a.topic.topics.as_deref());
    check_distinct(&inputs, &a.out)?;
    let c = load(&a.corpus)?;
    let topics = resolve_topics(&c, &a.topic, a.seed)?;
    let blocks = score_blocks(&c, &a.encoder, &a.model, &topics, a.symmetrize)?;
    let records = records_of(&blocks);
    write_score_records(&a.out, &records).stage("write")?;
    eprintln!("scored {} pairs in {} blocks", records.len(), blocks.len());
    Ok(())
}

fn universe_of(c: &Corpus) -> Vec<String> {
    c.mentions().map(|(_, m)| m.mention_id.clone()).collect()
}

/// Resolves the clustering threshold, tuning on `dev` when requested.
fn threshold(opts: &ThresholdOpts, dev: Option<(Vec<ScoreMatrix>, Partition)>) -> Result<f64, Failure> {
    match (opts.threshold, opts.tune) {
        (Some(_), true) => usage("--threshold and --tune are mutually exclusive"),
        (None, false) => usage("one of --threshold or --tune is required"),
        (Some(t), false) => {
            if (0.0..=1.0).contains(&t) {
                Ok(t)
            } else {
                usage(format!("--threshold must lie in [0, 1], got {t}"))
            }
        }
        (None, true) => {
            let objective = metric(&opts.metric)?;
            let (blocks, gold) = dev.expect("callers supply dev data when tuning");
            let tuned = cluster::tune_threshold(&blocks, &gold, objective).stage("tune")?;
            eprintln!("tuned threshold {:.2} ({} = {:.4} on dev)", tuned.threshold, tuned.objective, tuned.value);
            Ok(tuned.threshold)
        }
    }
}

fn cluster_cmd(a: &ClusterArgs) -> Result<(), Failure> {
    let mut inputs: Vec<&Path> = vec![&a.scores];
    inputs.extend(a.corpus.as_deref());
    inputs.extend(a.dev_scores.as_deref());
    inputs.extend(a.dev_corpus.as_deref());
    check_distinct(&inputs, &a.out)?;
    let dev = if a.threshold.tune {
        let (Some(ds), Some(dc)) = (&a.dev_scores, &a.dev_corpus) else {
            return usage("--tune requires --dev-scores and --dev-corpus");
        };
        let dev_corpus = load_with(dc, None, a.scope)?;
        let records = read_score_records(ds).with_context(|| format!("reading {}", ds.display())).stage("load-scores")?;
        let blocks = ScoreMatrix::blocks_from_records(&records, &universe_of(&dev_corpus)).stage("load-scores")?;
        let gold = dev_corpus.gold_partition(a.scope.into()).stage("tune")?;
        Some((blocks, gold))
    } else {
        None
    };
    let tau = threshold(&a.threshold, dev)?;
    let records =
        read_score_records(&a.scores).with_context(|| format!("reading {}", a.scores.display())).stage("load-scores")?;
    let universe = match &a.corpus {
        Some(p) => universe_of(&load_with(p, None, a.scope)?),
        None => Vec::new(),
    };
    let blocks = ScoreMatrix::blocks_from_records(&records, &universe).stage("cluster")?;
    let partition = cluster::agglomerate_all(&blocks, tau);
    partition.write(&a.out).stage("write")?;
    eprintln!("{} mentions in {} clusters at threshold {tau:.2}", partition.mention_count(), partition.len());
    Ok(())
}

fn emit_report(r: &MetricReport, out: Option<&Path>) -> Result<(), Failure> {
    print!("{}", r.table());
    let json = serde_json::to_string(r).expect("report serializes");
    println!("{json}");
    if let Some(path) = out {
        fs::write(path, format!("{json}\n")).with_context(|| format!("writing {}", path.display())).stage("write")?;
    }
    Ok(())
}

fn read_gold(path: &Path, scope: Scope) -> Result<Partition, Failure> {
    match Partition::read(path) {
        Ok(p) => Ok(p),
        Err(part_err) => match load_corpus(path) {
            Ok(c) => c.gold_partition(scope).stage("score"),
            Err(_) => Err(part_err).with_context(|| format!("reading {}", path.display())).stage("load-gold"),
        },
    }
}

fn score_cmd(a: &ScoreArgs) -> Result<(), Failure> {
    if let Some(out) = &a.out {
        check_distinct(&[&a.gold, &a.pred], out)?;
    }
    let gold = read_gold(&a.gold, a.scope.into())?;
    let pred = Partition::read(&a.pred).with_context(|| format!("reading {}", a.pred.display())).stage("load-pred")?;
    let r = metrics::report(&gold, &pred).stage("score")?;
    emit_report(&r, a.out.as_deref())
}

fn baseline_cmd(a: &BaselineArgs) -> Result<(), Failure> {
    let mut inputs: Vec<&Path> = vec![&a.corpus.corpus];
    inputs.extend(a.topic.topics.as_deref());
    check_distinct(&inputs, &a.out)?;
    let c = load(&a.corpus)?;
    let topics = resolve_topics(&c, &a.topic, a.seed)?;
    let p = lemma_baseline(&c, c.scope, &topics).stage("baseline")?;
    p.write(&a.out).stage("write")?;
    eprintln!("{} mentions in {} clusters", p.mention_count(), p.len());
    Ok(())
}

fn pipeline_cmd(a: &PipelineArgs) -> Result<(), Failure> {
    let mut inputs: Vec<&Path> = vec![&a.corpus.corpus, &a.model];
    inputs.extend(a.topic.topics.as_deref());
    inputs.extend(a.dev_corpus.as_deref());
    check_distinct(&inputs, &a.out)?;
    if a.threshold.tune && a.dev_corpus.is_none() {
        return usage("--tune requires --dev-corpus");
    }
    if a.threshold.tune && a.topic.topics.is_some() {
        return usage("--topics applies to one corpus; use --kmax or gold topics with --tune");
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display())).stage("write")?;
    let c = load(&a.corpus)?;

    let dev = match (&a.dev_corpus, a.threshold.tune) {
        (Some(dc), true) => {
            let dev_c = load_with(dc, a.corpus.task, a.corpus.scope)?;
            let dev_topics = resolve_topics(&dev_c, &a.topic, a.seed)?;
            let blocks = score_blocks(&dev_c, &a.encoder, &a.model, &dev_topics, a.symmetrize)?;
            let gold = dev_c.gold_partition(dev_c.scope).stage("tune")?;
            Some((blocks, gold))
        }
        _ => None,
    };
    let tau = threshold(&a.threshold, dev)?;

    let topics = resolve_topics(&c, &a.topic, a.seed)?;
    if c.scope == Scope::CrossDoc {
        let path = a.out.join("topics.jsonl");
        topics::write_topics(&path, &topics).stage("write")?;
    }
    let blocks = score_blocks(&c, &a.encoder, &a.model, &topics, a.symmetrize)?;
    write_score_records(a.out.join("scores.jsonl"), &records_of(&blocks)).stage("write")?;
    let partition = cluster::agglomerate_all(&blocks, tau);
    partition.write(a.out.join("partition.jsonl")).stage("write")?;
    let gold = c.gold_partition(c.scope).stage("score")?;
    let r = metrics::report(&gold, &partition).stage("score")?;
    emit_report(&r, Some(&a.out.join("report.json")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["paircoref", "score", "--bogus"]), 2);
        assert_eq!(run(["paircoref"]), 2);
        assert_eq!(run(["paircoref", "train", "--corpus", "x", "--model", "y"]), 2);
        assert_eq!(run(["paircoref", "--help"]), 0);
    }

    #[test]
    fn encoder_flag_parsing() {
        let opts = |e: &str| EncoderOpts { encoder: e.into(), dim: None, alpha: 0.5, beta: 0.25, window: 3 };
        assert!(matches!(encoder_config(&opts("synthetic"), Some(8)), Ok(EncoderConfig::Synthetic(s)) if s.dim == 8));
        assert!(matches!(encoder_config(&opts("file:e.bin"), None), Ok(EncoderConfig::File { .. })));
        assert!(matches!(encoder_config(&opts("file:"), None), Err(Failure::Usage(_))));
        assert!(matches!(encoder_config(&opts("roberta"), None), Err(Failure::Usage(_))));
    }
}
