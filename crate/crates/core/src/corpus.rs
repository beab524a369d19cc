//! Corpus data model, line-record ingestion, validation, statistics and
//! the synthetic corpus generator.
//!
//! A corpus file holds one JSON document record per line:
//!
//! ```text
//! {"doc_id":"d1","topic_id":"t1","sentences":[[{"text":"He"},{"text":"lost","lemma":"lose"}]],
//!  "mentions":[{"mention_id":"m1","kind":"event","trigger":{"sentence":0,"start":1,"end":2},
//!               "args":{"arg0":{"sentence":0,"start":0,"end":1}},"gold_cluster":"c1"}]}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cluster::Partition;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mention {mention_id}: {message}")]
    Validation { mention_id: String, message: String },
    #[error("document {doc_id}: {message}")]
    Document { doc_id: String, message: String },
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("mention {0} has no gold cluster")]
    MissingGold(String),
    #[error("document {0} has no topic")]
    MissingTopic(String),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MentionKind {
    Event,
    Entity,
}

/// Which coreference task a corpus is annotated for.
pub type Task = MentionKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    WithinDoc,
    CrossDoc,
}

impl fmt::Display for MentionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MentionKind::Event => "event",
            MentionKind::Entity => "entity",
        })
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::WithinDoc => "within_doc",
            Scope::CrossDoc => "cross_doc",
        })
    }
}

/// The four argument roles scored separately from the trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Arg0,
    Arg1,
    Loc,
    Time,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Arg0, Role::Arg1, Role::Loc, Role::Time];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Arg0 => "arg0",
            Role::Arg1 => "arg1",
            Role::Loc => "loc",
            Role::Time => "time",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.as_str() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
}

impl Token {
    pub fn new(text: impl Into<String>) -> Self {
        Token { text: text.into(), lemma: None }
    }

    /// Annotated lemma, or the lowercased surface form when the lemma is absent or empty.
    pub fn lemma_or_lower(&self) -> String {
        match self.lemma.as_deref() {
            Some(l) if !l.is_empty() => l.to_string(),
            _ => self.text.to_lowercase(),
        }
    }
}

/// Token span `[start, end)` inside one sentence of a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    #[serde(rename = "sentence")]
    pub sentence_index: usize,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(sentence_index: usize, start: usize, end: usize) -> Self {
        Span { sentence_index, start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Argument spans keyed by role; a role may be absent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Arguments([Option<Span>; 4]);

impl Arguments {
    pub fn get(&self, role: Role) -> Option<Span> {
        self.0[role.index()]
    }

    pub fn set(&mut self, role: Role, span: Option<Span>) {
        self.0[role.index()] = span;
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(Option::is_none)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Role, Span)> + '_ {
        Role::ALL.into_iter().filter_map(|r| self.get(r).map(|s| (r, s)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub mention_id: String,
    pub doc_id: String,
    pub kind: MentionKind,
    pub trigger: Span,
    pub args: Arguments,
    pub gold_cluster: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub topic_id: Option<String>,
    pub sentences: Vec<Vec<Token>>,
    pub mentions: Vec<Mention>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub task: Task,
    pub scope: Scope,
}

// Wire records. Unknown keys land in `extra` and are reported once per line.

#[derive(Debug, Serialize, Deserialize)]
struct DocRecord {
    doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    topic_id: Option<String>,
    #[serde(default)]
    sentences: Vec<Vec<TokenRecord>>,
    #[serde(default)]
    mentions: Vec<MentionRecord>,
    #[serde(flatten, skip_serializing)]
    extra: BTreeMap<String, Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TokenRecord {
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lemma: Option<String>,
    #[serde(flatten, skip_serializing)]
    extra: BTreeMap<String, Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MentionRecord {
    mention_id: String,
    kind: MentionKind,
    trigger: Span,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    args: BTreeMap<String, Option<Span>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold_cluster: Option<String>,
    #[serde(flatten, skip_serializing)]
    extra: BTreeMap<String, Value>,
}

fn warn_unknown(line: usize, what: &str, extra: &BTreeMap<String, Value>) {
    if !extra.is_empty() {
        let keys: Vec<&str> = extra.keys().map(String::as_str).collect();
        log::warn!("line {line}: ignoring unknown {what} field(s): {}", keys.join(", "));
    }
}

fn document_from_record(rec: DocRecord, line: usize) -> Result<Document> {
    warn_unknown(line, "document", &rec.extra);
    let sentences = rec
        .sentences
        .into_iter()
        .map(|s| {
            s.into_iter()
                .map(|t| {
                    warn_unknown(line, "token", &t.extra);
                    Token { text: t.text, lemma: t.lemma }
                })
                .collect()
        })
        .collect();
    let mut mentions = Vec::with_capacity(rec.mentions.len());
    for m in rec.mentions {
        warn_unknown(line, "mention", &m.extra);
        let mut args = Arguments::default();
        for (key, span) in m.args {
            let role = Role::parse(&key).ok_or_else(|| CorpusError::Validation {
                mention_id: m.mention_id.clone(),
                message: format!("unknown argument role `{key}` (expected arg0, arg1, loc or time)"),
            })?;
            args.set(role, span);
        }
        mentions.push(Mention {
            mention_id: m.mention_id,
            doc_id: rec.doc_id.clone(),
            kind: m.kind,
            trigger: m.trigger,
            args,
            gold_cluster: m.gold_cluster,
        });
    }
    Ok(Document { doc_id: rec.doc_id, topic_id: rec.topic_id, sentences, mentions })
}

fn document_to_record(doc: &Document) -> DocRecord {
    DocRecord {
        doc_id: doc.doc_id.clone(),
        topic_id: doc.topic_id.clone(),
        sentences: doc
            .sentences
            .iter()
            .map(|s| {
                s.iter()
                    .map(|t| TokenRecord { text: t.text.clone(), lemma: t.lemma.clone(), extra: BTreeMap::new() })
                    .collect()
            })
            .collect(),
        mentions: doc
            .mentions
            .iter()
            .map(|m| MentionRecord {
                mention_id: m.mention_id.clone(),
                kind: m.kind,
                trigger: m.trigger,
                args: m.args.iter().map(|(r, s)| (r.as_str().to_string(), Some(s))).collect(),
                gold_cluster: m.gold_cluster.clone(),
                extra: BTreeMap::new(),
            })
            .collect(),
        extra: BTreeMap::new(),
    }
}

fn check_span(doc: &Document, mention_id: &str, what: &str, span: &Span) -> Result<()> {
    let fail = |message: String| CorpusError::Validation { mention_id: mention_id.to_string(), message };
    if span.start >= span.end {
        return Err(fail(format!("{what} span has end {} <= start {}", span.end, span.start)));
    }
    let sentence = doc.sentences.get(span.sentence_index).ok_or_else(|| {
        fail(format!(
            "{what} span references sentence {} but document {} has {} sentences",
            span.sentence_index,
            doc.doc_id,
            doc.sentences.len()
        ))
    })?;
    if span.end > sentence.len() {
        return Err(fail(format!(
            "{what} span end {} exceeds sentence length {}",
            span.end,
            sentence.len()
        )));
    }
    Ok(())
}

impl Document {
    pub fn validate(&self) -> Result<()> {
        for (si, sentence) in self.sentences.iter().enumerate() {
            if let Some(ti) = sentence.iter().position(|t| t.text.is_empty()) {
                return Err(CorpusError::Document {
                    doc_id: self.doc_id.clone(),
                    message: format!("sentence {si} token {ti} has empty text"),
                });
            }
        }
        for m in &self.mentions {
            if m.doc_id != self.doc_id {
                return Err(CorpusError::Validation {
                    mention_id: m.mention_id.clone(),
                    message: format!("mention claims document {} but lives in {}", m.doc_id, self.doc_id),
                });
            }
            check_span(self, &m.mention_id, "trigger", &m.trigger)?;
            if m.kind == MentionKind::Entity && !m.args.is_empty() {
                return Err(CorpusError::Validation {
                    mention_id: m.mention_id.clone(),
                    message: "entity mentions cannot carry arguments".into(),
                });
            }
            for (role, span) in m.args.iter() {
                check_span(self, &m.mention_id, role.as_str(), &span)?;
            }
        }
        Ok(())
    }

    pub fn sentence(&self, index: usize) -> &[Token] {
        &self.sentences[index]
    }

    /// Head token of a trigger: the last token of its span.
    pub fn head_token(&self, span: &Span) -> &Token {
        &self.sentences[span.sentence_index][span.end - 1]
    }
}

impl Corpus {
    pub fn new(documents: Vec<Document>, task: Task, scope: Scope) -> Result<Self> {
        let corpus = Corpus { documents, task, scope };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<()> {
        let mut doc_ids = HashSet::new();
        let mut mention_ids = HashSet::new();
        for doc in &self.documents {
            if !doc_ids.insert(doc.doc_id.as_str()) {
                return Err(CorpusError::Document {
                    doc_id: doc.doc_id.clone(),
                    message: "duplicate doc_id".into(),
                });
            }
            doc.validate()?;
            for m in &doc.mentions {
                if !mention_ids.insert(m.mention_id.as_str()) {
                    return Err(CorpusError::Validation {
                        mention_id: m.mention_id.clone(),
                        message: "duplicate mention_id".into(),
                    });
                }
                if self.task == MentionKind::Entity && m.kind != MentionKind::Entity {
                    return Err(CorpusError::Validation {
                        mention_id: m.mention_id.clone(),
                        message: "event mention in an entity corpus".into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Re-tags the corpus for another task, re-validating.
    pub fn with_task(mut self, task: Task) -> Result<Self> {
        self.task = task;
        self.validate()?;
        Ok(self)
    }

    pub fn with_scope(mut self, scope: Scope) -> Self {
        self.scope = scope;
        self
    }

    pub fn mentions(&self) -> impl Iterator<Item = (&Document, &Mention)> + '_ {
        self.documents.iter().flat_map(|d| d.mentions.iter().map(move |m| (d, m)))
    }

    pub fn mention_count(&self) -> usize {
        self.documents.iter().map(|d| d.mentions.len()).sum()
    }

    pub fn index(&self) -> CorpusIndex<'_> {
        CorpusIndex::new(self)
    }

    /// Gold topics from the documents' `topic_id` fields.
    pub fn gold_topics(&self) -> Result<BTreeMap<String, String>> {
        self.documents
            .iter()
            .map(|d| {
                d.topic_id
                    .clone()
                    .map(|t| (d.doc_id.clone(), t))
                    .ok_or_else(|| CorpusError::MissingTopic(d.doc_id.clone()))
            })
            .collect()
    }

    /// Gold partition of every mention. Within-document scope keys clusters by
    /// `(doc_id, label)` so clusters never span documents.
    pub fn gold_partition(&self, scope: Scope) -> Result<Partition> {
        let mut labels = Vec::with_capacity(self.mention_count());
        for (doc, m) in self.mentions() {
            let label = m.gold_cluster.as_ref().ok_or_else(|| CorpusError::MissingGold(m.mention_id.clone()))?;
            let key = match scope {
                Scope::WithinDoc => format!("{}\u{1f}{}", doc.doc_id, label),
                Scope::CrossDoc => label.clone(),
            };
            labels.push((m.mention_id.clone(), key));
        }
        Ok(Partition::from_labels(labels))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for doc in &self.documents {
            out.push_str(&serde_json::to_string(&document_to_record(doc)).expect("corpus records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(self.to_jsonl().as_bytes())?;
        w.flush()?;
        Ok(())
    }

    /// Parses line records. The task is inferred (entity only when every
    /// mention is an entity mention), scope defaults to within-document.
    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut documents = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: DocRecord = serde_json::from_str(&line)
                .map_err(|e| CorpusError::Parse { line: line_no, message: e.to_string() })?;
            documents.push(document_from_record(rec, line_no)?);
        }
        let all_entity = documents.iter().flat_map(|d| &d.mentions).all(|m| m.kind == MentionKind::Entity);
        let any_mention = documents.iter().any(|d| !d.mentions.is_empty());
        let task = if any_mention && all_entity { MentionKind::Entity } else { MentionKind::Event };
        Corpus::new(documents, task, Scope::WithinDoc)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        Corpus::from_reader(text.as_bytes())
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    Corpus::from_reader(BufReader::new(File::open(path)?))
}

/// Fast lookup of mentions and their documents by id.
pub struct CorpusIndex<'a> {
    corpus: &'a Corpus,
    by_id: HashMap<&'a str, (usize, usize)>,
}

impl<'a> CorpusIndex<'a> {
    fn new(corpus: &'a Corpus) -> Self {
        let mut by_id = HashMap::new();
        for (di, d) in corpus.documents.iter().enumerate() {
            for (mi, m) in d.mentions.iter().enumerate() {
                by_id.insert(m.mention_id.as_str(), (di, mi));
            }
        }
        CorpusIndex { corpus, by_id }
    }

    pub fn get(&self, mention_id: &str) -> Option<(&'a Document, &'a Mention)> {
        self.by_id.get(mention_id).map(|&(di, mi)| {
            let d = &self.corpus.documents[di];
            (d, &d.mentions[mi])
        })
    }

    pub fn corpus(&self) -> &'a Corpus {
        self.corpus
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub topics: usize,
    pub documents: usize,
    pub sentences: usize,
    pub mentions: usize,
    pub singletons: usize,
    /// Distinct gold clusters, singletons included.
    pub clusters: usize,
}

pub fn corpus_stats(c: &Corpus) -> CorpusStats {
    let mut sizes: HashMap<&str, usize> = HashMap::new();
    for (_, m) in c.mentions() {
        if let Some(label) = &m.gold_cluster {
            *sizes.entry(label.as_str()).or_default() += 1;
        }
    }
    let topics: BTreeSet<&str> = c.documents.iter().filter_map(|d| d.topic_id.as_deref()).collect();
    CorpusStats {
        topics: topics.len(),
        documents: c.documents.len(),
        sentences: c.documents.iter().map(|d| d.sentences.len()).sum(),
        mentions: c.mention_count(),
        singletons: sizes.values().filter(|&&n| n == 1).count(),
        clusters: sizes.len(),
    }
}

/// Parameters of the synthetic corpus generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub docs: usize,
    pub clusters: usize,
    pub mentions_per_cluster: usize,
    /// Filler words per topic.
    pub vocab_size: usize,
    pub seed: u64,
    /// Clusters are dealt round-robin into this many topics.
    pub topics: usize,
    pub task: Task,
    /// Probability that an event mention carries each argument role.
    pub arg_prob: f64,
}

impl SynthConfig {
    pub fn new(docs: usize, clusters: usize, mentions_per_cluster: usize, vocab_size: usize, seed: u64) -> Self {
        SynthConfig {
            docs,
            clusters,
            mentions_per_cluster,
            vocab_size,
            seed,
            topics: 1,
            task: MentionKind::Event,
            arg_prob: 0.75,
        }
    }

    pub fn with_topics(mut self, topics: usize) -> Self {
        self.topics = topics;
        self
    }

    pub fn with_task(mut self, task: Task) -> Self {
        self.task = task;
        self
    }
}

fn random_word(rng: &mut ChaCha8Rng, used: &mut HashSet<String>) -> String {
    const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    loop {
        let len = rng.gen_range(5..=8);
        let w: String = (0..len).map(|_| LETTERS[rng.gen_range(0..LETTERS.len())] as char).collect();
        if used.insert(w.clone()) {
            return w;
        }
    }
}

struct PlantedCluster {
    topic: usize,
    trigger: String,
    args: [Vec<String>; 4],
}

/// Deterministic synthetic corpus with planted clusters.
///
/// Every cluster owns a distinctive trigger word and distinctive argument
/// words; every topic owns a disjoint filler vocabulary. Each mention sits in
/// its own sentence of a document from its cluster's topic.
pub fn gen_synthetic(cfg: &SynthConfig) -> Result<Corpus> {
    let SynthConfig { docs, clusters, mentions_per_cluster, vocab_size, seed, topics, task, arg_prob } = *cfg;
    if docs == 0 || clusters == 0 || mentions_per_cluster == 0 || vocab_size == 0 || topics == 0 {
        return Err(CorpusError::InvalidConfig("all counts must be at least 1".into()));
    }
    if topics > docs {
        return Err(CorpusError::InvalidConfig(format!("{topics} topics need at least as many documents, got {docs}")));
    }
    if topics > clusters {
        return Err(CorpusError::InvalidConfig(format!("{topics} topics need at least as many clusters, got {clusters}")));
    }
    if !(0.0..=1.0).contains(&arg_prob) {
        return Err(CorpusError::InvalidConfig("arg_prob must lie in [0, 1]".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = HashSet::new();
    let fillers: Vec<Vec<String>> =
        (0..topics).map(|_| (0..vocab_size).map(|_| random_word(&mut rng, &mut used)).collect()).collect();
    let planted: Vec<PlantedCluster> = (0..clusters)
        .map(|c| {
            let trigger = random_word(&mut rng, &mut used);
            let args = [(); 4].map(|_| {
                let n = rng.gen_range(1..=2);
                (0..n).map(|_| random_word(&mut rng, &mut used)).collect()
            });
            PlantedCluster { topic: c % topics, trigger, args }
        })
        .collect();

    let topic_docs: Vec<Vec<usize>> = (0..topics).map(|t| (0..docs).filter(|d| d % topics == t).collect()).collect();
    let width = |n: usize| n.to_string().len();
    let (dw, cw, tw) = (width(docs), width(clusters), width(topics));
    let mut documents: Vec<Document> = (0..docs)
        .map(|d| Document {
            doc_id: format!("doc{d:0dw$}"),
            topic_id: Some(format!("topic{:0tw$}", d % topics)),
            sentences: Vec::new(),
            mentions: Vec::new(),
        })
        .collect();

    let filler_run = |rng: &mut ChaCha8Rng, topic: usize, len: std::ops::RangeInclusive<usize>| -> Vec<Token> {
        let n = rng.gen_range(len);
        (0..n).map(|_| Token::new(fillers[topic].choose(rng).expect("vocab_size >= 1").clone())).collect()
    };

    for (ci, cluster) in planted.iter().enumerate() {
        for _ in 0..mentions_per_cluster {
            let doc_index = *topic_docs[cluster.topic].choose(&mut rng).expect("topic has documents");
            let mut sentence = filler_run(&mut rng, cluster.topic, 1..=3);
            let mut args = Arguments::default();
            let place = |sentence: &mut Vec<Token>, words: &[String]| {
                let start = sentence.len();
                sentence.extend(words.iter().map(Token::new));
                (start, sentence.len())
            };
            let has = |rng: &mut ChaCha8Rng| task == MentionKind::Event && rng.gen_bool(arg_prob);
            let sentence_index = documents[doc_index].sentences.len();
            let mut spans: [Option<(usize, usize)>; 4] = [None; 4];
            if has(&mut rng) {
                spans[Role::Arg0.index()] = Some(place(&mut sentence, &cluster.args[Role::Arg0.index()]));
            }
            let trigger = place(&mut sentence, std::slice::from_ref(&cluster.trigger));
            if has(&mut rng) {
                spans[Role::Arg1.index()] = Some(place(&mut sentence, &cluster.args[Role::Arg1.index()]));
            }
            sentence.extend(filler_run(&mut rng, cluster.topic, 0..=2));
            if has(&mut rng) {
                sentence.push(Token::new("in"));
                spans[Role::Loc.index()] = Some(place(&mut sentence, &cluster.args[Role::Loc.index()]));
            }
            if has(&mut rng) {
                sentence.push(Token::new("on"));
                spans[Role::Time.index()] = Some(place(&mut sentence, &cluster.args[Role::Time.index()]));
            }
            sentence.extend(filler_run(&mut rng, cluster.topic, 1..=3));
            for role in Role::ALL {
                args.set(role, spans[role.index()].map(|(s, e)| Span::new(sentence_index, s, e)));
            }
            let doc = &mut documents[doc_index];
            let mention_id = format!("{}_m{:02}", doc.doc_id, doc.mentions.len());
            doc.sentences.push(sentence);
            doc.mentions.push(Mention {
                mention_id,
                doc_id: doc.doc_id.clone(),
                kind: task,
                trigger: Span::new(sentence_index, trigger.0, trigger.1),
                args,
                gold_cluster: Some(format!("c{ci:0cw$}")),
            });
        }
    }
    for (d, doc) in documents.iter_mut().enumerate() {
        if doc.sentences.is_empty() {
            doc.sentences.push(filler_run(&mut rng, d % topics, 4..=8));
        }
    }
    Corpus::new(documents, task, Scope::CrossDoc)
}
