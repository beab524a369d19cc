//! Document pre-clustering for cross-document coreference: TF-IDF over word
//! 1-3 grams, k-means++ / Lloyd, and silhouette-based choice of K.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;

#[derive(Debug, thiserror::Error)]
pub enum TopicError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("K = {k} exceeds the {n} documents")]
    TooManyClusters { k: usize, n: usize },
    #[error("K must be at least 1")]
    ZeroClusters,
    #[error("topic prediction needs at least 2 documents, got {0}")]
    TooFewDocuments(usize),
    #[error("k_max must be at least 2, got {0}")]
    KMaxTooSmall(usize),
}

pub type Result<T, E = TopicError> = std::result::Result<T, E>;

pub const MAX_ITERATIONS: usize = 300;
/// k-means++ restarts per K; the lowest-inertia run is kept.
pub const DEFAULT_RESTARTS: usize = 50;

/// Sparse TF-IDF vector of one document, entries sorted by term index.
#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    pub doc_id: String,
    pub entries: Vec<(usize, f64)>,
}

impl DocVector {
    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(t, w)| w * dense[t]).sum()
    }

    fn dist_sq(&self, other: &DocVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() || j < b.len() {
            let d = match (a.get(i), b.get(j)) {
                (Some(&(ta, wa)), Some(&(tb, wb))) if ta == tb => {
                    i += 1;
                    j += 1;
                    wa - wb
                }
                (Some(&(ta, wa)), Some(&(tb, _))) if ta < tb => {
                    i += 1;
                    wa
                }
                (Some(&(_, wa)), None) => {
                    i += 1;
                    wa
                }
                (_, Some(&(_, wb))) => {
                    j += 1;
                    wb
                }
                (None, None) => unreachable!(),
            };
            acc += d * d;
        }
        acc
    }
}

/// TF-IDF vectors over a shared n-gram vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfVectors {
    pub vocab: Vec<String>,
    pub idf: Vec<f64>,
    pub docs: Vec<DocVector>,
}

impl TfidfVectors {
    pub fn term_index(&self, ngram: &str) -> Option<usize> {
        self.vocab.iter().position(|v| v == ngram)
    }

    /// Weights keyed by n-gram text.
    pub fn weights(&self, doc: usize) -> BTreeMap<&str, f64> {
        self.docs[doc].entries.iter().map(|&(t, w)| (self.vocab[t].as_str(), w)).collect()
    }
}

/// Lowercased word 1-, 2- and 3-grams of a document, per sentence.
pub fn doc_ngrams(sentences: &[Vec<String>]) -> Vec<String> {
    let mut out = Vec::new();
    for s in sentences {
        for n in 1..=3 {
            for w in s.windows(n) {
                out.push(w.join(" "));
            }
        }
    }
    out
}

/// Raw-count TF with smooth IDF `ln((1 + N) / (1 + df)) + 1`, L2-normalized.
pub fn tfidf_vectors(c: &Corpus) -> TfidfVectors {
    let ngrams: Vec<Vec<String>> = c
        .documents
        .iter()
        .map(|d| {
            let sents: Vec<Vec<String>> =
                d.sentences.iter().map(|s| s.iter().map(|t| t.text.to_lowercase()).collect()).collect();
            doc_ngrams(&sents)
        })
        .collect();
    let mut sorted: Vec<&str> = ngrams.iter().flatten().map(String::as_str).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let vocab: Vec<String> = sorted.iter().map(|s| s.to_string()).collect();
    let index: HashMap<&str, usize> = sorted.iter().enumerate().map(|(i, s)| (*s, i)).collect();

    let counts: Vec<BTreeMap<usize, f64>> = ngrams
        .iter()
        .map(|g| {
            let mut m = BTreeMap::new();
            for t in g {
                *m.entry(index[t.as_str()]).or_insert(0.0) += 1.0;
            }
            m
        })
        .collect();
    let mut df = vec![0usize; vocab.len()];
    for m in &counts {
        for &t in m.keys() {
            df[t] += 1;
        }
    }
    let n = c.documents.len() as f64;
    let idf: Vec<f64> = df.iter().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();
    let docs = c
        .documents
        .iter()
        .zip(counts)
        .map(|(d, m)| {
            let mut entries: Vec<(usize, f64)> = m.into_iter().map(|(t, tf)| (t, tf * idf[t])).collect();
            let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                entries.iter_mut().for_each(|(_, w)| *w /= norm);
            }
            DocVector { doc_id: d.doc_id.clone(), entries }
        })
        .collect();
    TfidfVectors { vocab, idf, docs }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicAssignment {
    pub topics: BTreeMap<String, usize>,
    pub k: usize,
    pub silhouette: f64,
}

impl TopicAssignment {
    /// Topic labels as strings, the form pair enumeration and clustering consume.
    pub fn labels(&self) -> BTreeMap<String, String> {
        self.topics.iter().map(|(d, t)| (d.clone(), t.to_string())).collect()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_topics(path, &self.labels())
    }
}

/// Writes `{doc_id, topic}` line records.
pub fn write_topics(path: impl AsRef<Path>, topics: &BTreeMap<String, String>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (doc_id, topic) in topics {
        serde_json::to_writer(&mut w, &TopicRecord { doc_id: doc_id.clone(), topic: topic.clone() })
            .expect("topic records serialize");
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicRecord {
    pub doc_id: String,
    #[serde(deserialize_with = "string_or_number")]
    pub topic: String,
}

fn string_or_number<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either {
        S(String),
        N(u64),
    }
    Ok(match Either::deserialize(d)? {
        Either::S(s) => s,
        Either::N(n) => n.to_string(),
    })
}

/// Reads topic line records into a `doc_id -> topic` map.
pub fn read_topics(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: TopicRecord =
            serde_json::from_str(&line).map_err(|e| TopicError::Parse { line: i + 1, message: e.to_string() })?;
        out.insert(r.doc_id, r.topic);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansRun {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after each Lloyd iteration.
    pub history: Vec<f64>,
}

fn dist_to_centroid(x: &DocVector, x_norm: f64, c: &[f64], c_norm: f64) -> f64 {
    (x_norm + c_norm - 2.0 * x.dot_dense(c)).max(0.0)
}

fn kmeans_once(vecs: &[DocVector], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> KMeansRun {
    let n = vecs.len();
    let norms: Vec<f64> = vecs.iter().map(DocVector::norm_sq).collect();
    let dense = |v: &DocVector| {
        let mut c = vec![0.0; dim];
        for &(t, w) in &v.entries {
            c[t] = w;
        }
        c
    };

    // k-means++ seeding
    let mut centers = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = vecs.iter().map(|v| v.dist_sq(&vecs[centers[0]])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&d| d > 0.0).expect("total > 0");
            }
            pick
        } else {
            // all remaining points coincide with a center
            rng.gen_range(0..n)
        };
        centers.push(next);
        for (i, v) in vecs.iter().enumerate() {
            d2[i] = d2[i].min(v.dist_sq(&vecs[next]));
        }
    }
    let mut centroids: Vec<Vec<f64>> = centers.iter().map(|&c| dense(&vecs[c])).collect();

    let mut assignment = vec![usize::MAX; n];
    let mut history = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let c_norms: Vec<f64> = centroids.iter().map(|c| c.iter().map(|x| x * x).sum()).collect();
        let mut changed = false;
        let mut dists = vec![0.0; n];
        for (i, v) in vecs.iter().enumerate() {
            let (best, d) = (0..k)
                .map(|c| (c, dist_to_centroid(v, norms[i], &centroids[c], c_norms[c])))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            dists[i] = d;
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (i, v) in vecs.iter().enumerate() {
            sizes[assignment[i]] += 1;
            for &(t, w) in &v.entries {
                sums[assignment[i]][t] += w;
            }
        }
        for c in 0..k {
            if sizes[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
            } else {
                // reseed an empty cluster at the point farthest from its centroid
                let far = (0..n).fold(0, |b, i| if dists[i] > dists[b] { i } else { b });
                centroids[c] = dense(&vecs[far]);
                dists[far] = 0.0;
            }
        }
        history.push(inertia(vecs, &norms, &assignment, &centroids));
    }
    let inertia = inertia(vecs, &norms, &assignment, &centroids);
    KMeansRun { assignment, centroids, inertia, history }
}

fn inertia(vecs: &[DocVector], norms: &[f64], assignment: &[usize], centroids: &[Vec<f64>]) -> f64 {
    vecs.iter()
        .enumerate()
        .map(|(i, v)| {
            let c = &centroids[assignment[i]];
            dist_to_centroid(v, norms[i], c, c.iter().map(|x| x * x).sum())
        })
        .sum()
}

/// Lloyd's algorithm from a single k-means++ seeding.
pub fn kmeans_run(vecs: &[DocVector], dim: usize, k: usize, seed: u64) -> Result<KMeansRun> {
    if k == 0 {
        return Err(TopicError::ZeroClusters);
    }
    if k > vecs.len() {
        return Err(TopicError::TooManyClusters { k, n: vecs.len() });
    }
    Ok(kmeans_once(vecs, dim, k, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Best of `restarts` k-means++ runs by inertia, with its silhouette.
pub fn kmeans_with_restarts(vecs: &TfidfVectors, k: usize, seed: u64, restarts: usize) -> Result<TopicAssignment> {
    let docs = &vecs.docs;
    if k == 0 {
        return Err(TopicError::ZeroClusters);
    }
    if k > docs.len() {
        return Err(TopicError::TooManyClusters { k, n: docs.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansRun> = None;
    for _ in 0..restarts.max(1) {
        let run = kmeans_once(docs, vecs.vocab.len(), k, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one run");
    let silhouette = mean_silhouette(docs, &run.assignment);
    Ok(TopicAssignment {
        topics: docs.iter().zip(&run.assignment).map(|(d, &t)| (d.doc_id.clone(), t)).collect(),
        k,
        silhouette,
    })
}

pub fn kmeans(vecs: &TfidfVectors, k: usize, seed: u64) -> Result<TopicAssignment> {
    kmeans_with_restarts(vecs, k, seed, DEFAULT_RESTARTS)
}

/// Per-point silhouette; singleton clusters and all-zero distances give 0.
pub fn silhouettes(vecs: &[DocVector], assignment: &[usize]) -> Vec<f64> {
    let n = vecs.len();
    let k = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = vecs[i].dist_sq(&vecs[j]).sqrt();
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let mut sizes = vec![0usize; k];
    for &a in assignment {
        sizes[a] += 1;
    }
    (0..n)
        .map(|i| {
            let own = assignment[i];
            if sizes[own] <= 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for j in 0..n {
                if j != i {
                    sums[assignment[j]] += dist[i * n + j];
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            if !b.is_finite() {
                return 0.0;
            }
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .collect()
}

pub fn mean_silhouette(vecs: &[DocVector], assignment: &[usize]) -> f64 {
    if vecs.is_empty() {
        return 0.0;
    }
    silhouettes(vecs, assignment).iter().sum::<f64>() / vecs.len() as f64
}

/// Runs k-means for every K in `2..=min(k_max, N)` and keeps the K with the
/// highest mean silhouette (ties go to the smaller K).
pub fn predict_topics(c: &Corpus, k_max: usize, seed: u64) -> Result<TopicAssignment> {
    if k_max < 2 {
        return Err(TopicError::KMaxTooSmall(k_max));
    }
    let n = c.documents.len();
    if n < 2 {
        return Err(TopicError::TooFewDocuments(n));
    }
    let vecs = tfidf_vectors(c);
    let mut best: Option<TopicAssignment> = None;
    for k in 2..=k_max.min(n) {
        let a = kmeans(&vecs, k, seed)?;
        log::debug!("K = {k}: mean silhouette {:.4}", a.silhouette);
        if best.as_ref().is_none_or(|b| a.silhouette > b.silhouette) {
            best = Some(a);
        }
    }
    Ok(best.expect("k range is non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, MentionKind, Scope, Token};

    fn corpus(texts: &[&str]) -> Corpus {
        let docs = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document {
                doc_id: format!("d{i:02}"),
                topic_id: None,
                sentences: t.split(" | ").map(|s| s.split_whitespace().map(Token::new).collect()).collect(),
                mentions: vec![],
            })
            .collect();
        Corpus::new(docs, MentionKind::Event, Scope::CrossDoc).unwrap()
    }

    #[test]
    fn ngram_extraction() {
        let v = tfidf_vectors(&corpus(&["A b"]));
        assert_eq!(v.vocab, vec!["a", "a b", "b"]);
        let v = tfidf_vectors(&corpus(&["a b c"]));
        assert!(v.term_index("a b c").is_some());
        // n-grams do not cross sentence boundaries
        let v = tfidf_vectors(&corpus(&["a b | c"]));
        assert!(v.term_index("b c").is_none());
    }

    #[test]
    fn idf_and_normalization() {
        let v = tfidf_vectors(&corpus(&["x y", "x z", "x"]));
        assert_eq!(v.idf[v.term_index("x").unwrap()], 1.0);
        let y = v.idf[v.term_index("y").unwrap()];
        assert!((y - ((4.0f64 / 2.0).ln() + 1.0)).abs() < 1e-12);
        for d in &v.docs {
            assert!((d.norm_sq() - 1.0).abs() < 1e-12);
            assert!(d.entries.iter().all(|&(_, w)| w >= 0.0));
        }
        let v = tfidf_vectors(&corpus(&["same words here", "same words here"]));
        assert_eq!(v.docs[0].entries, v.docs[1].entries);
    }

    #[test]
    fn empty_document_is_zero_vector() {
        let mut c = corpus(&["a b"]);
        c.documents.push(Document { doc_id: "empty".into(), topic_id: None, sentences: vec![], mentions: vec![] });
        let v = tfidf_vectors(&c);
        assert!(v.docs[1].entries.is_empty());
    }

    fn groups() -> Corpus {
        corpus(&[
            "quake sichuan province dead",
            "quake sichuan rescue dead",
            "sichuan quake province rescue",
            "election vote ballot senator",
            "senator ballot election count",
            "vote count senator ballot",
            "tennis open final serve",
            "serve final tennis champion",
            "champion open tennis serve",
        ])
    }

    #[test]
    fn k_extremes() {
        let c = groups();
        let v = tfidf_vectors(&c);
        let all = kmeans(&v, 9, 1).unwrap();
        let distinct: std::collections::BTreeSet<_> = all.topics.values().collect();
        assert_eq!(distinct.len(), 9);
        let run = kmeans_run(&v.docs, v.vocab.len(), 9, 1).unwrap();
        assert!(run.inertia.abs() < 1e-12);
        let one = kmeans(&v, 1, 1).unwrap();
        assert!(one.topics.values().all(|&t| t == 0));
        assert!(matches!(kmeans(&v, 10, 1), Err(TopicError::TooManyClusters { .. })));
        assert!(matches!(kmeans(&v, 0, 1), Err(TopicError::ZeroClusters)));
    }

    #[test]
    fn separable_groups_are_recovered() {
        let c = groups();
        let a = kmeans(&tfidf_vectors(&c), 3, 4).unwrap();
        let t: Vec<usize> = a.topics.values().copied().collect();
        for g in 0..3 {
            assert!(t[3 * g] == t[3 * g + 1] && t[3 * g] == t[3 * g + 2]);
        }
        assert!(t[0] != t[3] && t[3] != t[6] && t[0] != t[6]);
        let p = predict_topics(&c, 6, 4).unwrap();
        assert_eq!(p.k, 3);
        assert_eq!(p.topics, a.topics);
    }

    #[test]
    fn silhouette_of_separated_pair() {
        let c = corpus(&["a b c", "a b c", "x y z", "x y z"]);
        let v = tfidf_vectors(&c);
        let s = mean_silhouette(&v.docs, &[0, 0, 1, 1]);
        assert!(s > 0.5, "{s}");
        let c = corpus(&["a b c", "a b c d", "x y z", "x y z w"]);
        let v = tfidf_vectors(&c);
        assert!(mean_silhouette(&v.docs, &[0, 0, 1, 1]) > 0.0);
        assert!(silhouettes(&v.docs, &[1, 0, 1, 0]).iter().all(|x| (-1.0..=1.0).contains(x)));
        assert_eq!(silhouettes(&v.docs, &[0, 1, 2, 2])[0], 0.0);
    }

    #[test]
    fn identical_documents_pick_smallest_k() {
        let c = corpus(&["same text", "same text", "same text", "same text"]);
        let p = predict_topics(&c, 4, 0).unwrap();
        assert_eq!(p.k, 2);
        assert_eq!(p.silhouette, 0.0);
    }

    #[test]
    fn argument_errors() {
        assert!(matches!(predict_topics(&corpus(&["a"]), 3, 0), Err(TopicError::TooFewDocuments(1))));
        assert!(matches!(predict_topics(&groups(), 1, 0), Err(TopicError::KMaxTooSmall(1))));
    }

    #[test]
    fn inertia_never_increases() {
        let c = groups();
        let v = tfidf_vectors(&c);
        for seed in 0..20 {
            let run = kmeans_run(&v.docs, v.vocab.len(), 4, seed).unwrap();
            for w in run.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let c = groups();
        assert_eq!(predict_topics(&c, 5, 7).unwrap(), predict_topics(&c, 5, 7).unwrap());
    }
}
