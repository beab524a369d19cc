use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{features_from_inputs, loss, loss_and_grads, pair_inputs, score_pair, ModelError, ModelParams, PairInputs, Result};
use crate::cluster::ScoreMatrix;
use crate::corpus::{Corpus, CorpusError, CorpusIndex, Scope};
use crate::encoder::{build_pair_sequence, Encoder, EncoderError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub h1: usize,
    pub h2: usize,
    /// Fraction of negative pairs kept, in `(0, 1]`.
    pub neg_keep_ratio: f64,
    pub optimizer: Optimizer,
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 20,
            batch_size: 32,
            seed,
            h1: 128,
            h2: 128,
            neg_keep_ratio: 1.0,
            optimizer: Optimizer::Adam,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ModelError::Config(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.h1 == 0 || self.h2 == 0 {
            return bad("batch_size, h1 and h2 must be positive");
        }
        if !(self.neg_keep_ratio > 0.0 && self.neg_keep_ratio <= 1.0) {
            return bad("neg_keep_ratio must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledPair {
    pub mention_i: String,
    pub mention_j: String,
    /// 1 when both mentions share a gold cluster.
    pub label: u8,
}

/// Candidate training pairs: mentions sharing a document (within-document)
/// or a topic (cross-document). Each unordered pair appears once with the
/// smaller mention id first.
pub fn enumerate_pairs(
    c: &Corpus,
    scope: Scope,
    topics: &BTreeMap<String, String>,
    cfg: &TrainConfig,
) -> Result<Vec<LabeledPair>> {
    let mut groups: BTreeMap<&str, Vec<(&str, &str)>> = BTreeMap::new();
    for (doc, m) in c.mentions() {
        let group = match scope {
            Scope::WithinDoc => doc.doc_id.as_str(),
            Scope::CrossDoc => topics
                .get(&doc.doc_id)
                .map(String::as_str)
                .ok_or_else(|| CorpusError::MissingTopic(doc.doc_id.clone()))?,
        };
        let label = m.gold_cluster.as_deref().ok_or_else(|| CorpusError::MissingGold(m.mention_id.clone()))?;
        groups.entry(group).or_default().push((m.mention_id.as_str(), label));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for members in groups.values_mut() {
        members.sort();
        for a in 0..members.len() {
            for b in a + 1..members.len() {
                let label = u8::from(members[a].1 == members[b].1);
                if label == 0 && cfg.neg_keep_ratio < 1.0 && rng.gen::<f64>() >= cfg.neg_keep_ratio {
                    continue;
                }
                out.push(LabeledPair {
                    mention_i: members[a].0.to_string(),
                    mention_j: members[b].0.to_string(),
                    label,
                });
            }
        }
    }
    Ok(out)
}

/// Encodes every pair once and builds its scorer inputs.
pub fn prepare_inputs(
    index: &CorpusIndex<'_>,
    pairs: &[LabeledPair],
    encoder: &Encoder,
    task: crate::corpus::Task,
) -> Result<Vec<PairInputs>> {
    pairs
        .iter()
        .map(|pair| {
            let seq = build_pair_sequence(index, &pair.mention_i, &pair.mention_j)?;
            let emb = encoder.encode(&seq)?;
            let (_, m_i) = index.get(&pair.mention_i).expect("checked by build_pair_sequence");
            let (_, m_j) = index.get(&pair.mention_j).expect("checked by build_pair_sequence");
            pair_inputs(m_i, m_j, &emb, &seq, task)
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainLog {
    pub pairs: usize,
    pub positives: usize,
    /// Full-data loss at initialization.
    pub initial_loss: f64,
    /// Mean minibatch loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Full-data loss of the returned parameters.
    pub final_loss: f64,
}

struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn apply_step(p: &mut ModelParams, g: &ModelParams, cfg: &TrainConfig, adam: &mut AdamState) {
    match cfg.optimizer {
        Optimizer::Sgd => {
            for (w, d) in p.tensors_mut().into_iter().zip(g.tensors()) {
                w.iter_mut().zip(d).for_each(|(w, d)| *w -= cfg.learning_rate * d);
            }
        }
        Optimizer::Adam => {
            adam.t += 1;
            let c1 = 1.0 - ADAM_BETA1.powi(adam.t);
            let c2 = 1.0 - ADAM_BETA2.powi(adam.t);
            for (ti, (w, d)) in p.tensors_mut().into_iter().zip(g.tensors()).enumerate() {
                let (m, v) = (&mut adam.m[ti], &mut adam.v[ti]);
                for k in 0..w.len() {
                    m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * d[k];
                    v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * d[k] * d[k];
                    let m_hat = m[k] / c1;
                    let v_hat = v[k] / c2;
                    w[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

/// Minibatch training on prepared inputs. Parameters are initialized from
/// `cfg.seed`; the same seed reproduces the same parameters.
pub fn train_on_inputs(
    inputs: &[PairInputs],
    labels: &[u8],
    dim: usize,
    task: crate::corpus::Task,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainLog)> {
    cfg.validate()?;
    assert_eq!(inputs.len(), labels.len(), "one label per input");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = ModelParams::init(dim, cfg.h1, cfg.h2, task, &mut rng);
    let data: Vec<(&PairInputs, u8)> = inputs.iter().zip(labels.iter().copied()).collect();
    let mut log = TrainLog {
        pairs: data.len(),
        positives: labels.iter().filter(|&&l| l == 1).count(),
        ..Default::default()
    };
    if data.is_empty() {
        log::warn!("no training pairs; returning the initialization");
        return Ok((params, log));
    }
    log.initial_loss = loss(&data, &params)?;

    let mut adam = AdamState {
        m: params.tensors().iter().map(|t| vec![0.0; t.len()]).collect(),
        v: params.tensors().iter().map(|t| vec![0.0; t.len()]).collect(),
        t: 0,
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_no, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<(&PairInputs, u8)> = chunk.iter().map(|&i| data[i]).collect();
            let (l, grads) = loss_and_grads(&batch, &params).map_err(|e| match e {
                ModelError::NonFiniteLoss { .. } => ModelError::Diverged { epoch, batch: batch_no },
                other => other,
            })?;
            apply_step(&mut params, &grads, cfg, &mut adam);
            if !params.is_finite() {
                return Err(ModelError::Diverged { epoch, batch: batch_no });
            }
            epoch_loss += l * chunk.len() as f64;
        }
        let mean = epoch_loss / data.len() as f64;
        log::debug!("epoch {epoch}: loss {mean:.6}");
        log.epoch_losses.push(mean);
    }
    log.final_loss = loss(&data, &params).map_err(|_| ModelError::Diverged { epoch: cfg.epochs, batch: 0 })?;
    Ok((params, log))
}

/// Trains a scorer on gold-labelled pairs of `c`. Cross-document training
/// groups pairs by the corpus's gold topics.
pub fn train(c: &Corpus, encoder: &Encoder, cfg: &TrainConfig) -> Result<(ModelParams, TrainLog)> {
    cfg.validate()?;
    let topics = match c.scope {
        Scope::CrossDoc => c.gold_topics()?,
        Scope::WithinDoc => BTreeMap::new(),
    };
    let pairs = enumerate_pairs(c, c.scope, &topics, cfg)?;
    let index = c.index();
    let inputs = prepare_inputs(&index, &pairs, encoder, c.task)?;
    let labels: Vec<u8> = pairs.iter().map(|p| p.label).collect();
    train_on_inputs(&inputs, &labels, encoder.dim(), c.task, cfg)
}

/// Fraction of pairs whose score falls on the correct side of `threshold`.
pub fn pair_accuracy(inputs: &[PairInputs], labels: &[u8], p: &ModelParams, threshold: f64) -> Result<f64> {
    let mut correct = 0usize;
    for (x, &y) in inputs.iter().zip(labels) {
        let s = score_pair(&features_from_inputs(x, p)?, p)?;
        if (s > threshold) == (y == 1) {
            correct += 1;
        }
    }
    Ok(if inputs.is_empty() { 0.0 } else { correct as f64 / inputs.len() as f64 })
}

/// How the two concatenation orders of a pair are reconciled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetrize {
    /// Score with the smaller mention id first.
    #[default]
    Ordered,
    /// Average both orders.
    Mean,
}

fn score_ordered(index: &CorpusIndex<'_>, a: &str, b: &str, p: &ModelParams, encoder: &Encoder) -> Result<f64> {
    let seq = build_pair_sequence(index, a, b)?;
    let emb = encoder.encode(&seq)?;
    let (_, m_a) = index.get(a).expect("checked by build_pair_sequence");
    let (_, m_b) = index.get(b).expect("checked by build_pair_sequence");
    let f = features_from_inputs(&pair_inputs(m_a, m_b, &emb, &seq, p.task)?, p)?;
    score_pair(&f, p)
}

/// Pairwise scores over `mentions`, diagonal 1.
pub fn predict_scores(
    mentions: &[String],
    index: &CorpusIndex<'_>,
    p: &ModelParams,
    encoder: &Encoder,
    symmetrize: Symmetrize,
) -> Result<ScoreMatrix> {
    if encoder.dim() != p.dim {
        return Err(EncoderError::DimMismatch { expected: p.dim, actual: encoder.dim() }.into());
    }
    for m in mentions {
        if index.get(m).is_none() {
            return Err(EncoderError::UnknownMention(m.clone()).into());
        }
    }
    let n = mentions.len();
    let mut scores = vec![1.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = if mentions[i] <= mentions[j] { (&mentions[i], &mentions[j]) } else { (&mentions[j], &mentions[i]) };
            let mut s = score_ordered(index, a, b, p, encoder)?;
            if symmetrize == Symmetrize::Mean {
                s = 0.5 * (s + score_ordered(index, b, a, p, encoder)?);
            }
            scores[i * n + j] = s;
            scores[j * n + i] = s;
        }
    }
    Ok(ScoreMatrix::new(mentions.to_vec(), scores)?)
}

/// Mention ids grouped by document (within-document) or topic (cross-document),
/// each group sorted.
pub fn scoring_groups(c: &Corpus, scope: Scope, topics: &BTreeMap<String, String>) -> Result<Vec<Vec<String>>> {
    let mut groups: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for (doc, m) in c.mentions() {
        let key = match scope {
            Scope::WithinDoc => doc.doc_id.as_str(),
            Scope::CrossDoc => {
                topics.get(&doc.doc_id).map(String::as_str).ok_or_else(|| CorpusError::MissingTopic(doc.doc_id.clone()))?
            }
        };
        groups.entry(key).or_default().push(m.mention_id.clone());
    }
    Ok(groups
        .into_values()
        .map(|mut g| {
            g.sort();
            g
        })
        .collect())
}

/// One score matrix per scoring group.
pub fn predict_blocks(
    c: &Corpus,
    p: &ModelParams,
    encoder: &Encoder,
    scope: Scope,
    topics: &BTreeMap<String, String>,
    symmetrize: Symmetrize,
) -> Result<Vec<ScoreMatrix>> {
    let index = c.index();
    scoring_groups(c, scope, topics)?.iter().map(|g| predict_scores(g, &index, p, encoder, symmetrize)).collect()
}
