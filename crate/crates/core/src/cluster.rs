//! Average-link agglomerative mention clustering, threshold tuning and the
//! same-head-lemma baseline.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Scope};
use crate::metrics::{self, Metric, MetricError};

#[derive(Debug, thiserror::Error)]
pub enum ClusterError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid score matrix: {0}")]
    InvalidScores(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("document {0} has no topic")]
    MissingTopic(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub type Result<T, E = ClusterError> = std::result::Result<T, E>;

/// Symmetric pairwise coreference scores over an ordered list of mentions.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    ids: Vec<String>,
    scores: Vec<f64>,
}

impl ScoreMatrix {
    /// Builds a matrix from a row-major `n * n` buffer, checking every invariant.
    pub fn new(ids: Vec<String>, scores: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if scores.len() != n * n {
            return Err(ClusterError::InvalidScores(format!("{} ids need {} scores, got {}", n, n * n, scores.len())));
        }
        let unique: BTreeSet<&String> = ids.iter().collect();
        if unique.len() != n {
            return Err(ClusterError::InvalidScores("duplicate mention id".into()));
        }
        for i in 0..n {
            if scores[i * n + i] != 1.0 {
                return Err(ClusterError::InvalidScores(format!("diagonal entry for {} is not 1", ids[i])));
            }
            for j in 0..n {
                let s = scores[i * n + j];
                if !s.is_finite() || !(0.0..=1.0).contains(&s) {
                    return Err(ClusterError::InvalidScores(format!("score({}, {}) = {s} outside [0, 1]", ids[i], ids[j])));
                }
                if s != scores[j * n + i] {
                    return Err(ClusterError::InvalidScores(format!("score({}, {}) is not symmetric", ids[i], ids[j])));
                }
            }
        }
        Ok(ScoreMatrix { ids, scores })
    }

    /// Builds a matrix from a pair scoring function evaluated once per unordered pair.
    pub fn from_fn(ids: Vec<String>, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let n = ids.len();
        let mut scores = vec![1.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let s = f(i, j);
                scores[i * n + j] = s;
                scores[j * n + i] = s;
            }
        }
        ScoreMatrix::new(ids, scores)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[i * self.ids.len() + j]
    }

    /// Line records `{mention_i, mention_j, score}` for every unordered pair.
    pub fn records(&self) -> Vec<ScoreRecord> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = ordered(&self.ids[i], &self.ids[j]);
                out.push(ScoreRecord { mention_i: a.clone(), mention_j: b.clone(), score: self.get(i, j) });
            }
        }
        out
    }

    /// Groups scored pairs into connected blocks, one matrix per block.
    /// Pairs missing inside a block score 0. Mentions listed in `universe`
    /// but absent from every record become 1x1 matrices.
    pub fn blocks_from_records(records: &[ScoreRecord], universe: &[String]) -> Result<Vec<ScoreMatrix>> {
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for id in universe.iter().map(String::as_str).chain(records.iter().flat_map(|r| [r.mention_i.as_str(), r.mention_j.as_str()])) {
            let next = index.len();
            index.entry(id).or_insert(next);
        }
        let names: Vec<&str> = {
            let mut v = vec![""; index.len()];
            for (&id, &i) in &index {
                v[i] = id;
            }
            v
        };
        let mut parent: Vec<usize> = (0..names.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut pair_scores: HashMap<(usize, usize), f64> = HashMap::new();
        for r in records {
            if r.mention_i == r.mention_j {
                return Err(ClusterError::InvalidScores(format!("self pair for {}", r.mention_i)));
            }
            let (a, b) = (index[r.mention_i.as_str()], index[r.mention_j.as_str()]);
            let key = (a.min(b), a.max(b));
            if let Some(prev) = pair_scores.insert(key, r.score) {
                if prev != r.score {
                    return Err(ClusterError::InvalidScores(format!(
                        "conflicting scores for ({}, {})",
                        r.mention_i, r.mention_j
                    )));
                }
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra.max(rb)] = ra.min(rb);
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..names.len() {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        groups
            .into_values()
            .map(|members| {
                let ids: Vec<String> = members.iter().map(|&i| names[i].to_string()).collect();
                ScoreMatrix::from_fn(ids, |x, y| {
                    let (a, b) = (members[x], members[y]);
                    pair_scores.get(&(a.min(b), a.max(b))).copied().unwrap_or(0.0)
                })
            })
            .collect()
    }
}

fn ordered<'a>(a: &'a String, b: &'a String) -> (&'a String, &'a String) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub mention_i: String,
    pub mention_j: String,
    pub score: f64,
}

pub fn write_score_records(path: impl AsRef<Path>, records: &[ScoreRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r).expect("score records serialize");
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_score_records(path: impl AsRef<Path>) -> Result<Vec<ScoreRecord>> {
    read_records(BufReader::new(File::open(path)?))
}

fn read_records<T: serde::de::DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| ClusterError::Parse { line: i + 1, message: e.to_string() })?);
    }
    Ok(out)
}

/// Disjoint, non-empty clusters covering a universe of mention ids.
///
/// Kept canonical: members sorted within a cluster, clusters sorted by their
/// smallest member. Equality is therefore set-of-sets equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Partition {
    clusters: Vec<Vec<String>>,
}

impl Partition {
    pub fn from_clusters(clusters: Vec<Vec<String>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(clusters.len());
        for mut c in clusters {
            if c.is_empty() {
                return Err(ClusterError::InvalidPartition("empty cluster".into()));
            }
            c.sort();
            for id in &c {
                if !seen.insert(id.clone()) {
                    return Err(ClusterError::InvalidPartition(format!("mention {id} appears in two clusters")));
                }
            }
            out.push(c);
        }
        out.sort();
        Ok(Partition { clusters: out })
    }

    /// Groups ids by an arbitrary label. Ids must be distinct.
    pub fn from_labels<I, L>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (String, L)>,
        L: Ord,
    {
        let mut groups: BTreeMap<L, Vec<String>> = BTreeMap::new();
        for (id, label) in pairs {
            groups.entry(label).or_default().push(id);
        }
        Partition::from_clusters(groups.into_values().collect()).expect("labels define a partition")
    }

    pub fn singletons<I: IntoIterator<Item = String>>(ids: I) -> Self {
        Partition::from_clusters(ids.into_iter().map(|id| vec![id]).collect()).expect("distinct ids")
    }

    pub fn clusters(&self) -> &[Vec<String>] {
        &self.clusters
    }

    /// Number of clusters.
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn mention_count(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    pub fn universe(&self) -> BTreeSet<&str> {
        self.clusters.iter().flatten().map(String::as_str).collect()
    }

    /// Map from mention id to cluster index.
    pub fn membership(&self) -> HashMap<&str, usize> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(ci, c)| c.iter().map(move |m| (m.as_str(), ci)))
            .collect()
    }

    /// True when every cluster of `finer` lies inside one cluster of `self`.
    pub fn is_coarsening_of(&self, finer: &Partition) -> bool {
        if self.universe() != finer.universe() {
            return false;
        }
        let member = self.membership();
        finer.clusters.iter().all(|c| c.iter().all(|m| member[m.as_str()] == member[c[0].as_str()]))
    }

    /// Union of partitions over disjoint universes.
    pub fn merge(parts: impl IntoIterator<Item = Partition>) -> Result<Partition> {
        Partition::from_clusters(parts.into_iter().flat_map(|p| p.clusters).collect())
    }

    /// Restricts to a sub-universe; mentions outside it are dropped.
    pub fn restrict(&self, keep: &BTreeSet<&str>) -> Partition {
        let clusters = self
            .clusters
            .iter()
            .map(|c| c.iter().filter(|m| keep.contains(m.as_str())).cloned().collect::<Vec<_>>())
            .filter(|c| !c.is_empty())
            .collect();
        Partition::from_clusters(clusters).expect("subset of a partition")
    }

    pub fn records(&self) -> Vec<PartitionRecord> {
        let width = self.clusters.len().to_string().len();
        self.clusters
            .iter()
            .enumerate()
            .map(|(i, c)| PartitionRecord { cluster_id: format!("c{i:0width$}"), mention_ids: c.clone() })
            .collect()
    }

    pub fn from_records(records: Vec<PartitionRecord>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for r in &records {
            if !ids.insert(r.cluster_id.clone()) {
                return Err(ClusterError::InvalidPartition(format!("duplicate cluster_id {}", r.cluster_id)));
            }
        }
        Partition::from_clusters(records.into_iter().map(|r| r.mention_ids).collect())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for r in self.records() {
            serde_json::to_writer(&mut w, &r).expect("partition records serialize");
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Partition::from_records(read_records(BufReader::new(File::open(path)?))?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionRecord {
    pub cluster_id: String,
    pub mention_ids: Vec<String>,
}

/// Greedy average-link agglomeration over `s`.
///
/// Starts from singletons and merges the pair of clusters with the highest
/// mean cross-cluster score while that mean is strictly above `tau`. Ties go
/// to the pair with the lexicographically smallest `(min id, min id)`.
pub fn agglomerate(s: &ScoreMatrix, tau: f64) -> Partition {
    agglomerate_trace(s, tau).0
}

/// One merge of [`agglomerate_trace`]: the two clusters' smallest ids and their linkage.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub left: String,
    pub right: String,
    pub linkage: f64,
}

/// Like [`agglomerate`], also returning the sequence of merges performed.
pub fn agglomerate_trace(s: &ScoreMatrix, tau: f64) -> (Partition, Vec<Merge>) {
    let n = s.len();
    // Work in id order so sums and ties do not depend on the input layout.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s.ids[a].cmp(&s.ids[b]));

    // Active clusters, each with its members, smallest id (= first member in
    // id order) and raw score sums against every other active cluster.
    let mut members: Vec<Vec<usize>> = order.iter().map(|&i| vec![i]).collect();
    let mut active: Vec<bool> = vec![true; n];
    let mut sums: Vec<Vec<f64>> = order.iter().map(|&i| order.iter().map(|&j| s.get(i, j)).collect()).collect();
    let mut merges = Vec::new();

    loop {
        // Slots are in min-id order, so the first maximum found while scanning
        // (a, b) with a < b wins ties.
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..n {
            if !active[a] {
                continue;
            }
            for b in a + 1..n {
                if !active[b] {
                    continue;
                }
                let avg = sums[a][b] / (members[a].len() * members[b].len()) as f64;
                if best.is_none_or(|(_, _, v)| avg > v) {
                    best = Some((a, b, avg));
                }
            }
        }
        let Some((a, b, avg)) = best else { break };
        if avg <= tau {
            break;
        }
        merges.push(Merge { left: s.ids[members[a][0]].clone(), right: s.ids[members[b][0]].clone(), linkage: avg });
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        active[b] = false;
        for c in 0..n {
            if active[c] && c != a {
                let v = sums[a][c] + sums[b][c];
                sums[a][c] = v;
                sums[c][a] = v;
            }
        }
    }

    let clusters = (0..n)
        .filter(|&a| active[a])
        .map(|a| members[a].iter().map(|&i| s.ids[i].clone()).collect())
        .collect();
    (Partition::from_clusters(clusters).expect("agglomeration yields a partition"), merges)
}

/// Clusters every block and unions the results.
pub fn agglomerate_all(blocks: &[ScoreMatrix], tau: f64) -> Partition {
    Partition::merge(blocks.iter().map(|b| agglomerate(b, tau))).expect("blocks have disjoint universes")
}

/// The tuning grid `0.00, 0.01, ..., 1.00`.
pub fn threshold_grid() -> impl Iterator<Item = f64> {
    (0..=100).map(|i| i as f64 / 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tuned {
    pub threshold: f64,
    pub objective: Metric,
    pub value: f64,
}

/// Grid search for the threshold maximizing `objective` against `gold`.
///
/// Gold mentions not covered by any block are treated as response
/// singletons. Ties resolve to the smallest threshold.
pub fn tune_threshold(dev: &[ScoreMatrix], gold: &Partition, objective: Metric) -> Result<Tuned> {
    let universe = gold.universe();
    let scored: BTreeSet<&str> = dev.iter().flat_map(|m| m.ids.iter().map(String::as_str)).collect();
    if let Some(stray) = scored.difference(&universe).next() {
        return Err(ClusterError::InvalidPartition(format!("scored mention {stray} missing from gold")));
    }
    let unscored: Vec<String> = universe.difference(&scored).map(|s| s.to_string()).collect();
    let mut best: Option<Tuned> = None;
    for tau in threshold_grid() {
        let mut parts: Vec<Partition> = dev.iter().map(|m| agglomerate(m, tau)).collect();
        parts.push(Partition::singletons(unscored.iter().cloned()));
        let response = Partition::merge(parts)?;
        let value = metrics::objective(gold, &response, objective)?;
        if best.is_none_or(|b| value > b.value) {
            best = Some(Tuned { threshold: tau, objective, value });
        }
    }
    Ok(best.expect("grid is non-empty"))
}

/// Same-head-lemma baseline: within each topic (cross-document) or document
/// (within-document), mentions whose trigger heads share a lemma are merged.
pub fn lemma_baseline(c: &Corpus, scope: Scope, topics: &BTreeMap<String, String>) -> Result<Partition> {
    let mut labels = Vec::with_capacity(c.mention_count());
    for (doc, m) in c.mentions() {
        let group = match scope {
            Scope::WithinDoc => doc.doc_id.clone(),
            Scope::CrossDoc => topics.get(&doc.doc_id).cloned().ok_or_else(|| ClusterError::MissingTopic(doc.doc_id.clone()))?,
        };
        labels.push((m.mention_id.clone(), (group, doc.head_token(&m.trigger).lemma_or_lower())));
    }
    Ok(Partition::from_labels(labels))
}
