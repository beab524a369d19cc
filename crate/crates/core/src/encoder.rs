//! Sentence-pair sequences, pluggable token encoders and span pooling.
//!
//! Two mentions are encoded jointly: the sentence of the first mention, a
//! separator token, then the sentence of the second. Mentions sharing a
//! sentence encode that sentence once, without a separator.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusIndex, Document, Mention, Span};

/// Separator token placed between the two sentences of a pair.
pub const SEPARATOR: &str = "</s>";

/// Magic bytes opening a PREMB embedding file.
pub const PREMB_MAGIC: &[u8; 7] = b"PREMB1\n";

#[derive(Debug, thiserror::Error)]
pub enum EncoderError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unknown mention {0}")]
    UnknownMention(String),
    #[error("pair {0} not found in embedding file")]
    MissingPair(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("pair {pair_id}: embedding file has {stored} tokens, sequence has {expected}")]
    SeqLenMismatch { pair_id: String, stored: usize, expected: usize },
    #[error("span [{start}, {end}) out of bounds for sequence of length {len}")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("malformed embedding file: {0}")]
    Format(String),
    #[error("invalid encoder configuration: {0}")]
    Config(String),
}

pub type Result<T, E = EncoderError> = std::result::Result<T, E>;

/// A token span `[start, end)` inside a [`PairSequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeqSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSequence {
    pub pair_id: String,
    pub tokens: Vec<String>,
    /// Position of the separator; `None` when both mentions share a sentence.
    pub sep_index: Option<usize>,
    first: SentenceRef,
    second: SentenceRef,
    offset_j: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct SentenceRef {
    doc_id: String,
    sentence: usize,
    len: usize,
}

impl PairSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn map(sent: &SentenceRef, offset: usize, span: &Span) -> Option<SeqSpan> {
        (span.sentence_index == sent.sentence && span.start < span.end && span.end <= sent.len)
            .then(|| SeqSpan { start: span.start + offset, end: span.end + offset })
    }

    /// Maps a span of the first mention's sentence into the sequence.
    pub fn map_i(&self, span: &Span) -> Option<SeqSpan> {
        Self::map(&self.first, 0, span)
    }

    /// Maps a span of the second mention's sentence into the sequence.
    pub fn map_j(&self, span: &Span) -> Option<SeqSpan> {
        Self::map(&self.second, self.offset_j, span)
    }
}

pub fn pair_id(mention_i: &str, mention_j: &str) -> String {
    format!("{mention_i}|{mention_j}")
}

/// Builds the joint sequence for `(m_i, m_j)` from their documents.
pub fn pair_sequence(doc_i: &Document, m_i: &Mention, doc_j: &Document, m_j: &Mention) -> PairSequence {
    let si = m_i.trigger.sentence_index;
    let sj = m_j.trigger.sentence_index;
    let sent_i = doc_i.sentence(si);
    let first = SentenceRef { doc_id: doc_i.doc_id.clone(), sentence: si, len: sent_i.len() };
    let mut tokens: Vec<String> = sent_i.iter().map(|t| t.text.clone()).collect();
    let pair_id = pair_id(&m_i.mention_id, &m_j.mention_id);
    if doc_i.doc_id == doc_j.doc_id && si == sj {
        return PairSequence { pair_id, tokens, sep_index: None, second: first.clone(), first, offset_j: 0 };
    }
    let sent_j = doc_j.sentence(sj);
    let sep = tokens.len();
    tokens.push(SEPARATOR.to_string());
    tokens.extend(sent_j.iter().map(|t| t.text.clone()));
    PairSequence {
        pair_id,
        tokens,
        sep_index: Some(sep),
        first,
        second: SentenceRef { doc_id: doc_j.doc_id.clone(), sentence: sj, len: sent_j.len() },
        offset_j: sep + 1,
    }
}

/// Looks both mentions up by id and builds their pair sequence.
pub fn build_pair_sequence(index: &CorpusIndex<'_>, mention_i: &str, mention_j: &str) -> Result<PairSequence> {
    let (di, mi) = index.get(mention_i).ok_or_else(|| EncoderError::UnknownMention(mention_i.to_string()))?;
    let (dj, mj) = index.get(mention_j).ok_or_else(|| EncoderError::UnknownMention(mention_j.to_string()))?;
    Ok(pair_sequence(di, mi, dj, mj))
}

/// Per-token vectors for one pair sequence, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbeddings {
    dim: usize,
    data: Vec<f64>,
}

impl TokenEmbeddings {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(EncoderError::Format(format!("{} values do not form rows of width {dim}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(EncoderError::Format("non-finite embedding value".into()));
        }
        Ok(TokenEmbeddings { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seq_len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, p: usize) -> &[f64] {
        &self.data[p * self.dim..(p + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Element-wise sum of the rows covered by `span`.
pub fn pool_span(e: &TokenEmbeddings, span: SeqSpan) -> Result<Vec<f64>> {
    if span.start >= span.end || span.end > e.seq_len() {
        return Err(EncoderError::SpanOutOfBounds { start: span.start, end: span.end, len: e.seq_len() });
    }
    let mut out = vec![0.0; e.dim];
    for p in span.start..span.end {
        for (o, v) in out.iter_mut().zip(e.row(p)) {
            *o += v;
        }
    }
    Ok(out)
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// splitmix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Top 53 bits mapped onto `[-1, 1)`.
    pub fn next_signed_unit(&mut self) -> f64 {
        let unit = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        2.0 * unit - 1.0
    }
}

/// Context-free base vector of a token: a hash-seeded pseudo-random point in `[-1, 1]^d`.
pub fn token_base(text: &str, dim: usize) -> Vec<f64> {
    let mut rng = SplitMix64::new(fnv1a64(text.as_bytes()));
    (0..dim).map(|_| rng.next_signed_unit()).collect()
}

/// Deterministic stand-in for a contextual encoder.
///
/// Each token's vector is its base vector plus `alpha` times the mean base
/// vector of the whole sequence plus `beta` times the mean over a window of
/// `window` tokens on either side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEncoder {
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub window: usize,
}

impl Default for SyntheticEncoder {
    fn default() -> Self {
        SyntheticEncoder { dim: 32, alpha: 0.5, beta: 0.25, window: 3 }
    }
}

impl SyntheticEncoder {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(EncoderError::Config("dim must be at least 1".into()));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(EncoderError::Config("alpha and beta must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn encode(&self, seq: &PairSequence) -> TokenEmbeddings {
        let d = self.dim;
        let n = seq.len();
        let base: Vec<Vec<f64>> = seq.tokens.iter().map(|t| token_base(t, d)).collect();
        let mut global = vec![0.0; d];
        for b in &base {
            for (g, v) in global.iter_mut().zip(b) {
                *g += v;
            }
        }
        global.iter_mut().for_each(|g| *g /= n.max(1) as f64);

        let mut data = Vec::with_capacity(n * d);
        for p in 0..n {
            let lo = p.saturating_sub(self.window);
            let hi = (p + self.window + 1).min(n);
            let mut local = vec![0.0; d];
            for b in &base[lo..hi] {
                for (l, v) in local.iter_mut().zip(b) {
                    *l += v;
                }
            }
            let span = (hi - lo) as f64;
            for k in 0..d {
                data.push(base[p][k] + self.alpha * global[k] + self.beta * local[k] / span);
            }
        }
        TokenEmbeddings { dim: d, data }
    }
}

/// Precomputed embeddings loaded from a PREMB file, sorted by pair id.
#[derive(Debug, Clone, PartialEq)]
pub struct PrembStore {
    dim: usize,
    records: Vec<(String, TokenEmbeddings)>,
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => EncoderError::Format("truncated file".into()),
        _ => EncoderError::Io(e),
    })?;
    Ok(buf)
}

impl PrembStore {
    pub fn new(dim: usize, mut records: Vec<(String, TokenEmbeddings)>) -> Result<Self> {
        if dim == 0 {
            return Err(EncoderError::Format("dim must be positive".into()));
        }
        for (id, e) in &records {
            if e.dim != dim {
                return Err(EncoderError::DimMismatch { expected: dim, actual: e.dim });
            }
            if id.len() > u16::MAX as usize {
                return Err(EncoderError::Format(format!("pair id of {} bytes is too long", id.len())));
            }
        }
        records.sort_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
        if let Some(w) = records.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(EncoderError::Format(format!("duplicate pair id {}", w[0].0)));
        }
        Ok(PrembStore { dim, records })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn pair_ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|(id, _)| id.as_str())
    }

    pub fn get(&self, pair_id: &str) -> Option<&TokenEmbeddings> {
        self.records
            .binary_search_by(|(id, _)| id.as_bytes().cmp(pair_id.as_bytes()))
            .ok()
            .map(|i| &self.records[i].1)
    }

    pub fn encode(&self, seq: &PairSequence) -> Result<TokenEmbeddings> {
        let e = self.get(&seq.pair_id).ok_or_else(|| EncoderError::MissingPair(seq.pair_id.clone()))?;
        if e.seq_len() != seq.len() {
            return Err(EncoderError::SeqLenMismatch {
                pair_id: seq.pair_id.clone(),
                stored: e.seq_len(),
                expected: seq.len(),
            });
        }
        Ok(e.clone())
    }

    /// Writes the store; values are narrowed to `f32`.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(PREMB_MAGIC)?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.records.len() as u64).to_le_bytes())?;
        for (id, e) in &self.records {
            w.write_all(&(id.len() as u16).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            w.write_all(&(e.seq_len() as u32).to_le_bytes())?;
            for v in &e.data {
                w.write_all(&(*v as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        if &read_exact::<7>(r)? != PREMB_MAGIC {
            return Err(EncoderError::Format("bad magic".into()));
        }
        let dim = u32::from_le_bytes(read_exact(r)?) as usize;
        if dim == 0 {
            return Err(EncoderError::Format("dim must be positive".into()));
        }
        let count = u64::from_le_bytes(read_exact(r)?);
        let mut records: Vec<(String, TokenEmbeddings)> = Vec::new();
        for _ in 0..count {
            let id_len = u16::from_le_bytes(read_exact(r)?) as usize;
            let mut id = vec![0u8; id_len];
            r.read_exact(&mut id).map_err(|_| EncoderError::Format("truncated pair id".into()))?;
            let id = String::from_utf8(id).map_err(|_| EncoderError::Format("pair id is not UTF-8".into()))?;
            if let Some((prev, _)) = records.last() {
                if prev.as_bytes() >= id.as_bytes() {
                    return Err(EncoderError::Format(format!("records not sorted at {id}")));
                }
            }
            let seq_len = u32::from_le_bytes(read_exact(r)?) as usize;
            let mut data = Vec::with_capacity(seq_len * dim);
            for _ in 0..seq_len * dim {
                data.push(f32::from_le_bytes(read_exact(r)?) as f64);
            }
            records.push((id, TokenEmbeddings::new(dim, data)?));
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(EncoderError::Format("trailing bytes after last record".into()));
        }
        Ok(PrembStore { dim, records })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EncoderConfig {
    Synthetic(SyntheticEncoder),
    File { path: PathBuf },
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig::Synthetic(SyntheticEncoder::default())
    }
}

impl EncoderConfig {
    pub fn build(&self) -> Result<Encoder> {
        match self {
            EncoderConfig::Synthetic(s) => {
                s.validate()?;
                Ok(Encoder::Synthetic(*s))
            }
            EncoderConfig::File { path } => Ok(Encoder::File(PrembStore::read(path)?)),
        }
    }
}

/// A ready-to-use encoder backend.
#[derive(Debug, Clone)]
pub enum Encoder {
    Synthetic(SyntheticEncoder),
    File(PrembStore),
}

impl Encoder {
    pub fn dim(&self) -> usize {
        match self {
            Encoder::Synthetic(s) => s.dim,
            Encoder::File(f) => f.dim(),
        }
    }

    pub fn encode(&self, seq: &PairSequence) -> Result<TokenEmbeddings> {
        match self {
            Encoder::Synthetic(s) => Ok(s.encode(seq)),
            Encoder::File(f) => f.encode(seq),
        }
    }
}

/// One-shot encoding from a configuration.
pub fn encode(seq: &PairSequence, cfg: &EncoderConfig) -> Result<TokenEmbeddings> {
    cfg.build()?.encode(seq)
}
