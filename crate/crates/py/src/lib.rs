use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;

use paircoref_core::cluster::{self, Partition, ScoreMatrix};
use paircoref_core::corpus::{self, Corpus, MentionKind, Scope, SynthConfig};
use paircoref_core::encoder::{Encoder, EncoderConfig, SyntheticEncoder};
use paircoref_core::metrics::{self, Metric, MetricReport, Prf};
use paircoref_core::pairrep::{self, ModelParams, Optimizer, Symmetrize, TrainConfig};
use paircoref_core::topics;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(paircoref, PaircorefError, PyException);

fn err(e: impl Display) -> PyErr {
    PaircorefError::new_err(e.to_string())
}

fn parse_scope(s: &str) -> PyResult<Scope> {
    match s {
        "within_doc" => Ok(Scope::WithinDoc),
        "cross_doc" => Ok(Scope::CrossDoc),
        _ => Err(err(format!("unknown scope `{s}` (expected within_doc or cross_doc)"))),
    }
}

fn parse_task(s: &str) -> PyResult<MentionKind> {
    match s {
        "event" => Ok(MentionKind::Event),
        "entity" => Ok(MentionKind::Entity),
        _ => Err(err(format!("unknown task `{s}` (expected event or entity)"))),
    }
}

/// Topic labels for cross-document work: the given map, else gold topics.
fn topic_labels(c: &Corpus, scope: Scope, topics: Option<BTreeMap<String, String>>) -> PyResult<BTreeMap<String, String>> {
    match (scope, topics) {
        (_, Some(t)) => Ok(t),
        (Scope::CrossDoc, None) => c.gold_topics().map_err(err),
        (Scope::WithinDoc, None) => Ok(BTreeMap::new()),
    }
}

#[pyclass(name = "Corpus", module = "paircoref", frozen)]
struct PyCorpus(Corpus);

#[pymethods]
impl PyCorpus {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        corpus::load_corpus(path).map(PyCorpus).map_err(err)
    }

    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        Corpus::from_jsonl(text).map(PyCorpus).map_err(err)
    }

    fn to_jsonl(&self) -> String {
        self.0.to_jsonl()
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.0.write(path).map_err(err)
    }

    #[getter]
    fn task(&self) -> String {
        self.0.task.to_string()
    }

    fn doc_ids(&self) -> Vec<String> {
        self.0.documents.iter().map(|d| d.doc_id.clone()).collect()
    }

    fn mention_ids(&self) -> Vec<String> {
        self.0.mentions().map(|(_, m)| m.mention_id.clone()).collect()
    }

    fn stats(&self) -> BTreeMap<&'static str, usize> {
        let s = corpus::corpus_stats(&self.0);
        BTreeMap::from([
            ("topics", s.topics),
            ("documents", s.documents),
            ("sentences", s.sentences),
            ("mentions", s.mentions),
            ("singletons", s.singletons),
            ("clusters", s.clusters),
        ])
    }

    fn gold_topics(&self) -> PyResult<BTreeMap<String, String>> {
        self.0.gold_topics().map_err(err)
    }

    #[pyo3(signature = (scope = "within_doc"))]
    fn gold_partition(&self, scope: &str) -> PyResult<PyPartition> {
        self.0.gold_partition(parse_scope(scope)?).map(PyPartition).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.mention_count()
    }

    fn __repr__(&self) -> String {
        format!("Corpus(task={}, documents={}, mentions={})", self.0.task, self.0.documents.len(), self.0.mention_count())
    }
}

#[pyclass(name = "Partition", module = "paircoref", frozen, eq)]
#[derive(PartialEq)]
struct PyPartition(Partition);

#[pymethods]
impl PyPartition {
    #[new]
    fn new(clusters: Vec<Vec<String>>) -> PyResult<Self> {
        Partition::from_clusters(clusters).map(PyPartition).map_err(err)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Partition::read(path).map(PyPartition).map_err(err)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.0.write(path).map_err(err)
    }

    fn clusters(&self) -> Vec<Vec<String>> {
        self.0.clusters().to_vec()
    }

    fn mention_count(&self) -> usize {
        self.0.mention_count()
    }

    fn is_coarsening_of(&self, finer: &PyPartition) -> bool {
        self.0.is_coarsening_of(&finer.0)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Partition(clusters={}, mentions={})", self.0.len(), self.0.mention_count())
    }
}

#[pyclass(name = "ScoreMatrix", module = "paircoref", frozen)]
struct PyScoreMatrix(ScoreMatrix);

#[pymethods]
impl PyScoreMatrix {
    /// Square matrix of pairwise scores indexed by `ids`.
    #[new]
    fn new(ids: Vec<String>, rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let n = ids.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(err(format!("score matrix must be {n}x{n}")));
        }
        ScoreMatrix::new(ids, rows.concat()).map(PyScoreMatrix).map_err(err)
    }

    fn ids(&self) -> Vec<String> {
        self.0.ids().to_vec()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        let n = self.0.len();
        if i >= n || j >= n {
            return Err(err(format!("index ({i}, {j}) out of range for {n} mentions")));
        }
        Ok(self.0.get(i, j))
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        let n = self.0.len();
        (0..n).map(|i| (0..n).map(|j| self.0.get(i, j)).collect()).collect()
    }

    /// Upper-triangle `(mention_i, mention_j, score)` records.
    fn records(&self) -> Vec<(String, String, f64)> {
        self.0.records().into_iter().map(|r| (r.mention_i, r.mention_j, r.score)).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "Encoder", module = "paircoref", frozen)]
struct PyEncoder(Encoder);

#[pymethods]
impl PyEncoder {
    #[staticmethod]
    #[pyo3(signature = (dim = 32, alpha = 0.5, beta = 0.25, window = 3))]
    fn synthetic(dim: usize, alpha: f64, beta: f64, window: usize) -> PyResult<Self> {
        EncoderConfig::Synthetic(SyntheticEncoder { dim, alpha, beta, window }).build().map(PyEncoder).map_err(err)
    }

    /// Precomputed embeddings from a PREMB file.
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        EncoderConfig::File { path }.build().map(PyEncoder).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }
}

#[pyclass(name = "Report", module = "paircoref", frozen)]
struct PyReport {
    #[pyo3(get)]
    muc: (f64, f64, f64),
    #[pyo3(get)]
    b3: (f64, f64, f64),
    #[pyo3(get)]
    ceaf_e: (f64, f64, f64),
    #[pyo3(get)]
    blanc: (f64, f64, f64),
    #[pyo3(get)]
    conll_f1: f64,
    #[pyo3(get)]
    avg_f: f64,
}

fn prf(p: Prf) -> (f64, f64, f64) {
    (p.recall, p.precision, p.f1)
}

impl From<MetricReport> for PyReport {
    fn from(r: MetricReport) -> Self {
        PyReport {
            muc: prf(r.muc),
            b3: prf(r.b3),
            ceaf_e: prf(r.ceaf_e),
            blanc: prf(r.blanc),
            conll_f1: r.conll_f1,
            avg_f: r.avg_f,
        }
    }
}

#[pymethods]
impl PyReport {
    fn __repr__(&self) -> String {
        format!(
            "Report(muc_f1={:.4}, b3_f1={:.4}, ceaf_e_f1={:.4}, blanc_f1={:.4}, conll_f1={:.4}, avg_f={:.4})",
            self.muc.2, self.b3.2, self.ceaf_e.2, self.blanc.2, self.conll_f1, self.avg_f
        )
    }
}

#[pyclass(name = "Model", module = "paircoref", frozen)]
struct PyModel(ModelParams);

#[pymethods]
impl PyModel {
    /// Trains a pair scorer; returns the model and per-epoch mean losses.
    #[staticmethod]
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (
        corpus, encoder, seed, scope = "within_doc", epochs = 20, lr = 1e-3, batch_size = 32,
        h1 = 128, h2 = 128, neg_ratio = 1.0, optimizer = "adam"
    ))]
    fn train(
        py: Python<'_>,
        corpus: &PyCorpus,
        encoder: &PyEncoder,
        seed: u64,
        scope: &str,
        epochs: usize,
        lr: f64,
        batch_size: usize,
        h1: usize,
        h2: usize,
        neg_ratio: f64,
        optimizer: &str,
    ) -> PyResult<(PyModel, Vec<f64>)> {
        let optimizer = match optimizer {
            "adam" => Optimizer::Adam,
            "sgd" => Optimizer::Sgd,
            o => return Err(err(format!("unknown optimizer `{o}` (expected adam or sgd)"))),
        };
        let cfg = TrainConfig { learning_rate: lr, epochs, batch_size, h1, h2, neg_keep_ratio: neg_ratio, optimizer, ..TrainConfig::new(seed) };
        let c = corpus.0.clone().with_scope(parse_scope(scope)?);
        let (p, log) = py.detach(|| pairrep::train(&c, &encoder.0, &cfg)).map_err(err)?;
        Ok((PyModel(p), log.epoch_losses))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        ModelParams::load(path).map(PyModel).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(path).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim
    }

    #[getter]
    fn task(&self) -> String {
        self.0.task.to_string()
    }

    fn num_params(&self) -> usize {
        self.0.num_params()
    }

    /// One score matrix per document (within_doc) or topic (cross_doc).
    /// Cross-document scoring uses gold topics unless `topics` is given.
    #[pyo3(signature = (corpus, encoder, scope = "within_doc", topics = None, symmetrize = "ordered"))]
    fn predict(
        &self,
        py: Python<'_>,
        corpus: &PyCorpus,
        encoder: &PyEncoder,
        scope: &str,
        topics: Option<BTreeMap<String, String>>,
        symmetrize: &str,
    ) -> PyResult<Vec<PyScoreMatrix>> {
        let scope = parse_scope(scope)?;
        let sym = match symmetrize {
            "ordered" => Symmetrize::Ordered,
            "mean" => Symmetrize::Mean,
            s => return Err(err(format!("unknown symmetrize mode `{s}` (expected ordered or mean)"))),
        };
        let labels = topic_labels(&corpus.0, scope, topics)?;
        let blocks =
            py.detach(|| pairrep::predict_blocks(&corpus.0, &self.0, &encoder.0, scope, &labels, sym)).map_err(err)?;
        Ok(blocks.into_iter().map(PyScoreMatrix).collect())
    }
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (
    seed, docs = 8, clusters = 16, mentions_per_cluster = 5, vocab = 30, topics = 4, task = "event", arg_prob = 0.75
))]
fn gen_synthetic(
    seed: u64,
    docs: usize,
    clusters: usize,
    mentions_per_cluster: usize,
    vocab: usize,
    topics: usize,
    task: &str,
    arg_prob: f64,
) -> PyResult<PyCorpus> {
    let cfg = SynthConfig { topics, task: parse_task(task)?, arg_prob, ..SynthConfig::new(docs, clusters, mentions_per_cluster, vocab, seed) };
    corpus::gen_synthetic(&cfg).map(PyCorpus).map_err(err)
}

/// All coreference metrics of `response` against `key`.
#[pyfunction]
fn score(key: &PyPartition, response: &PyPartition) -> PyResult<PyReport> {
    metrics::report(&key.0, &response.0).map(PyReport::from).map_err(err)
}

/// Greedy average-link clustering; clusters merge while linkage exceeds `tau`.
#[pyfunction]
fn agglomerate(matrix: &PyScoreMatrix, tau: f64) -> PyPartition {
    PyPartition(cluster::agglomerate(&matrix.0, tau))
}

/// Clusters each block independently and unions the results.
#[pyfunction]
fn agglomerate_all(blocks: Vec<PyRef<'_, PyScoreMatrix>>, tau: f64) -> PyPartition {
    let blocks: Vec<ScoreMatrix> = blocks.iter().map(|b| b.0.clone()).collect();
    PyPartition(cluster::agglomerate_all(&blocks, tau))
}

/// Best threshold on the grid for `metric`; returns `(tau, value)`.
#[pyfunction]
#[pyo3(signature = (dev, gold, metric = "conll"))]
fn tune_threshold(dev: Vec<PyRef<'_, PyScoreMatrix>>, gold: &PyPartition, metric: &str) -> PyResult<(f64, f64)> {
    let metric: Metric = metric.parse().map_err(err)?;
    let dev: Vec<ScoreMatrix> = dev.iter().map(|b| b.0.clone()).collect();
    let t = cluster::tune_threshold(&dev, &gold.0, metric).map_err(err)?;
    Ok((t.threshold, t.value))
}

/// Clusters mentions sharing a trigger lemma within each scoring group.
#[pyfunction]
#[pyo3(signature = (corpus, scope = "within_doc", topics = None))]
fn lemma_baseline(corpus: &PyCorpus, scope: &str, topics: Option<BTreeMap<String, String>>) -> PyResult<PyPartition> {
    let scope = parse_scope(scope)?;
    let labels = topic_labels(&corpus.0, scope, topics)?;
    cluster::lemma_baseline(&corpus.0, scope, &labels).map(PyPartition).map_err(err)
}

/// Document topics by TF-IDF k-means; returns `(labels, k, silhouette)`.
#[pyfunction]
#[pyo3(signature = (corpus, k_max, seed = 0))]
fn predict_topics(
    py: Python<'_>,
    corpus: &PyCorpus,
    k_max: usize,
    seed: u64,
) -> PyResult<(BTreeMap<String, String>, usize, f64)> {
    let t = py.detach(|| topics::predict_topics(&corpus.0, k_max, seed)).map_err(err)?;
    Ok((t.labels(), t.k, t.silhouette))
}

#[pymodule]
fn paircoref(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PaircorefError", m.py().get_type::<PaircorefError>())?;
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyPartition>()?;
    m.add_class::<PyScoreMatrix>()?;
    m.add_class::<PyEncoder>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(gen_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(agglomerate, m)?)?;
    m.add_function(wrap_pyfunction!(agglomerate_all, m)?)?;
    m.add_function(wrap_pyfunction!(tune_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(lemma_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(predict_topics, m)?)?;
    Ok(())
}
