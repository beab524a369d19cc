//! Paired mention representations and the two-network coreference scorer.
//!
//! For a mention pair `(i, j)` encoded jointly, every role (trigger and the
//! four argument roles) gets a role-pair vector `[v_i, v_j, v_i * v_j]`. Each
//! argument role-pair vector is reduced to one scalar by the shared `mlp1`;
//! the trigger vector plus the four scalars (events) or the trigger vector
//! alone (entities) feed `mlp2`, whose softmax gives the coreference
//! probability in component 0.

mod mlp;
mod model;
mod train;

pub use mlp::{Mlp, MlpTrace};
pub use model::{pair_input_width, ModelParams, MODEL_MAGIC};
pub use train::{
    enumerate_pairs, pair_accuracy, predict_blocks, predict_scores, prepare_inputs, scoring_groups, train,
    train_on_inputs, LabeledPair, Optimizer, Symmetrize, TrainConfig, TrainLog,
};

use crate::corpus::{CorpusError, Mention, MentionKind, Role};
use crate::encoder::{pool_span, EncoderError, PairSequence, SeqSpan, TokenEmbeddings};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite loss at batch index {index}")]
    NonFiniteLoss { index: usize },
    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("cannot map span of mention {0} into its pair sequence")]
    SpanMapping(String),
    #[error(transparent)]
    Cluster(#[from] crate::cluster::ClusterError),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

/// `[v_i, v_j, v_i * v_j]`.
pub fn role_pair_rep(v_i: &[f64], v_j: &[f64]) -> Result<Vec<f64>> {
    if v_i.len() != v_j.len() {
        return Err(ModelError::Shape(format!("role vectors of length {} and {}", v_i.len(), v_j.len())));
    }
    let mut out = Vec::with_capacity(3 * v_i.len());
    out.extend_from_slice(v_i);
    out.extend_from_slice(v_j);
    out.extend(v_i.iter().zip(v_j).map(|(a, b)| a * b));
    Ok(out)
}

/// Parameter-independent inputs of the scorer for one pair: the trigger
/// role-pair vector and, for events, the four argument role-pair vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PairInputs {
    pub kind: MentionKind,
    pub trigger: Vec<f64>,
    pub roles: Option<[Vec<f64>; 4]>,
}

/// Pair representation fed to `mlp2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFeatures {
    pub kind: MentionKind,
    pub v_t: Vec<f64>,
    /// `a_arg0, a_arg1, a_loc, a_time`; absent for entities.
    pub arg_feats: Option<[f64; 4]>,
}

impl PairFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut x = self.v_t.clone();
        if let Some(a) = self.arg_feats {
            x.extend_from_slice(&a);
        }
        x
    }
}

fn pooled(e: &TokenEmbeddings, span: Option<SeqSpan>, mention: &Mention) -> Result<Vec<f64>> {
    let span = span.ok_or_else(|| ModelError::SpanMapping(mention.mention_id.clone()))?;
    Ok(pool_span(e, span)?)
}

/// Pools trigger and argument spans of both mentions and builds their
/// role-pair vectors. A role missing on either side pools to zero vectors.
pub fn pair_inputs(
    m_i: &Mention,
    m_j: &Mention,
    e: &TokenEmbeddings,
    seq: &PairSequence,
    kind: MentionKind,
) -> Result<PairInputs> {
    if e.seq_len() != seq.len() {
        return Err(ModelError::Shape(format!("{} embeddings for a sequence of {} tokens", e.seq_len(), seq.len())));
    }
    let v_i = pooled(e, seq.map_i(&m_i.trigger), m_i)?;
    let v_j = pooled(e, seq.map_j(&m_j.trigger), m_j)?;
    let trigger = role_pair_rep(&v_i, &v_j)?;
    let roles = match kind {
        MentionKind::Entity => None,
        MentionKind::Event => {
            let zero = vec![0.0; e.dim()];
            let mut reps: Vec<Vec<f64>> = Vec::with_capacity(4);
            for role in Role::ALL {
                let rep = match (m_i.args.get(role), m_j.args.get(role)) {
                    (Some(a), Some(b)) => {
                        role_pair_rep(&pooled(e, seq.map_i(&a), m_i)?, &pooled(e, seq.map_j(&b), m_j)?)?
                    }
                    (a, b) => {
                        // a role present on only one side still contributes its own half
                        let left = a.map(|s| pooled(e, seq.map_i(&s), m_i)).transpose()?.unwrap_or_else(|| zero.clone());
                        let right = b.map(|s| pooled(e, seq.map_j(&s), m_j)).transpose()?.unwrap_or_else(|| zero.clone());
                        role_pair_rep(&left, &right)?
                    }
                };
                reps.push(rep);
            }
            Some(reps.try_into().expect("four roles"))
        }
    };
    Ok(PairInputs { kind, trigger, roles })
}

fn check_inputs(inputs: &PairInputs, p: &ModelParams) -> Result<()> {
    if inputs.kind != p.task {
        return Err(ModelError::Shape(format!("{} pair scored by a {} model", inputs.kind, p.task)));
    }
    if inputs.trigger.len() != 3 * p.dim {
        return Err(ModelError::Shape(format!("trigger vector of length {}, model expects {}", inputs.trigger.len(), 3 * p.dim)));
    }
    match (&inputs.roles, p.task) {
        (Some(r), MentionKind::Event) if r.iter().all(|v| v.len() == 3 * p.dim) => Ok(()),
        (None, MentionKind::Entity) => Ok(()),
        _ => Err(ModelError::Shape("argument inputs do not match the model task".into())),
    }
}

/// Applies `mlp1` to each argument role-pair vector.
pub fn features_from_inputs(inputs: &PairInputs, p: &ModelParams) -> Result<PairFeatures> {
    check_inputs(inputs, p)?;
    let arg_feats = inputs.roles.as_ref().map(|roles| roles.each_ref().map(|r| p.mlp1.forward(r).out[0]));
    Ok(PairFeatures { kind: inputs.kind, v_t: inputs.trigger.clone(), arg_feats })
}

/// Full pair representation for `(m_i, m_j)` from their joint embeddings.
pub fn pair_features(
    m_i: &Mention,
    m_j: &Mention,
    e: &TokenEmbeddings,
    seq: &PairSequence,
    p: &ModelParams,
) -> Result<PairFeatures> {
    features_from_inputs(&pair_inputs(m_i, m_j, e, seq, p.task)?, p)
}

/// Numerically stable two-way softmax.
pub fn softmax2(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let (a, b) = ((z[0] - m).exp(), (z[1] - m).exp());
    [a / (a + b), b / (a + b)]
}

pub fn logits(f: &PairFeatures, p: &ModelParams) -> Result<[f64; 2]> {
    let x = f.to_vec();
    if x.len() != p.mlp2.input || f.kind != p.task {
        return Err(ModelError::Shape(format!("pair features of width {}, model expects {}", x.len(), p.mlp2.input)));
    }
    let out = p.mlp2.forward(&x).out;
    Ok([out[0], out[1]])
}

/// Probability that the pair corefers.
pub fn score_pair(f: &PairFeatures, p: &ModelParams) -> Result<f64> {
    Ok(softmax2(logits(f, p)?)[0])
}

/// Mean cross-entropy of a batch (label 1 = coreferent) and its gradient
/// with respect to every parameter, including the path through `mlp1`.
pub fn loss_and_grads(batch: &[(&PairInputs, u8)], p: &ModelParams) -> Result<(f64, ModelParams)> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let scale = 1.0 / batch.len() as f64;
    let mut grads = p.zeros_like();
    let mut total = 0.0;
    let base = 3 * p.dim;
    for (index, (inputs, label)) in batch.iter().enumerate() {
        check_inputs(inputs, p)?;
        let arg_traces: Option<Vec<MlpTrace>> =
            inputs.roles.as_ref().map(|roles| roles.iter().map(|r| p.mlp1.forward(r)).collect());
        let mut x = inputs.trigger.clone();
        if let Some(traces) = &arg_traces {
            x.extend(traces.iter().map(|t| t.out[0]));
        }
        let trace = p.mlp2.forward(&x);
        let z = [trace.out[0], trace.out[1]];
        let target = if *label == 1 { 0 } else { 1 };
        // log-softmax of the target logit
        let m = z[0].max(z[1]);
        let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
        let loss = lse - z[target];
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss { index });
        }
        total += loss;
        let probs = softmax2(z);
        let d_z: Vec<f64> = (0..2).map(|k| scale * (probs[k] - if k == target { 1.0 } else { 0.0 })).collect();
        let d_x = p.mlp2.backward(&x, &trace, &d_z, &mut grads.mlp2);
        if let (Some(roles), Some(traces)) = (&inputs.roles, &arg_traces) {
            for (r, (rep, t)) in roles.iter().zip(traces).enumerate() {
                p.mlp1.backward(rep, t, &[d_x[base + r]], &mut grads.mlp1);
            }
        }
    }
    Ok((total * scale, grads))
}

/// Mean loss without gradients.
pub fn loss(batch: &[(&PairInputs, u8)], p: &ModelParams) -> Result<f64> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut total = 0.0;
    for (index, (inputs, label)) in batch.iter().enumerate() {
        let z = logits(&features_from_inputs(inputs, p)?, p)?;
        let target = if *label == 1 { 0 } else { 1 };
        let m = z[0].max(z[1]);
        let l = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln() - z[target];
        if !l.is_finite() {
            return Err(ModelError::NonFiniteLoss { index });
        }
        total += l;
    }
    Ok(total / batch.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn role_pair_rep_examples() {
        assert_eq!(role_pair_rep(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0, 3.0, 8.0]);
        assert_eq!(role_pair_rep(&[0.0; 3], &[0.0; 3]).unwrap(), vec![0.0; 9]);
        assert_eq!(&role_pair_rep(&[1.0, 0.0], &[0.0, 1.0]).unwrap()[4..], &[0.0, 0.0]);
        assert!(role_pair_rep(&[1.0], &[1.0, 2.0]).is_err());
    }

    fn params(task: MentionKind, seed: u64) -> ModelParams {
        ModelParams::init(3, 5, 4, task, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn random_inputs(task: MentionKind, dim: usize, rng: &mut impl Rng) -> PairInputs {
        let mut v = |n| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let trigger = v(3 * dim);
        let roles = (task == MentionKind::Event).then(|| [v(3 * dim), v(3 * dim), v(3 * dim), v(3 * dim)]);
        PairInputs { kind: task, trigger, roles }
    }

    #[test]
    fn softmax_properties() {
        for z in [-3.0, 0.0, 7.5] {
            assert_eq!(softmax2([z, z]), [0.5, 0.5]);
        }
        assert!(softmax2([10.0, -10.0])[0] >= 1.0 - 1e-8);
        let s = softmax2([1e4, -1e4]);
        assert!(s[0].is_finite() && s[1] >= 0.0);
    }

    #[test]
    fn score_is_a_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for task in [MentionKind::Event, MentionKind::Entity] {
            let p = params(task, 4);
            for _ in 0..20 {
                let f = features_from_inputs(&random_inputs(task, 3, &mut rng), &p).unwrap();
                let z = logits(&f, &p).unwrap();
                let s = softmax2(z);
                assert!(s[0] > 0.0 && s[0] < 1.0);
                assert!((s[0] + s[1] - 1.0).abs() < 1e-12);
                assert_eq!(score_pair(&f, &p).unwrap(), s[0]);
            }
        }
    }

    #[test]
    fn all_zero_roles_give_identical_features() {
        let p = params(MentionKind::Event, 1);
        let inputs = PairInputs {
            kind: MentionKind::Event,
            trigger: vec![0.3; 9],
            roles: Some([vec![0.0; 9], vec![0.0; 9], vec![0.0; 9], vec![0.0; 9]]),
        };
        let a = features_from_inputs(&inputs, &p).unwrap().arg_feats.unwrap();
        let expected = p.mlp1.forward(&[0.0; 9]).out[0];
        assert!(a.iter().all(|&x| x == expected));
    }

    #[test]
    fn entity_features_skip_arguments() {
        let p = params(MentionKind::Entity, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = features_from_inputs(&random_inputs(MentionKind::Entity, 3, &mut rng), &p).unwrap();
        assert!(f.arg_feats.is_none());
        assert_eq!(f.to_vec().len(), 9);
    }

    #[test]
    fn entity_scores_ignore_mlp1() {
        let mut p = params(MentionKind::Entity, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inputs = random_inputs(MentionKind::Entity, 3, &mut rng);
        let before = score_pair(&features_from_inputs(&inputs, &p).unwrap(), &p).unwrap();
        p.mlp1.w1.iter_mut().for_each(|w| *w += 1.5);
        p.mlp1.b2[0] = -4.0;
        let after = score_pair(&features_from_inputs(&inputs, &p).unwrap(), &p).unwrap();
        assert_eq!(before.to_bits(), after.to_bits());
        let (_, g) = loss_and_grads(&[(&inputs, 1)], &p).unwrap();
        assert!(g.mlp1.tensors().iter().all(|t| t.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn shape_mismatches_are_errors() {
        let p = params(MentionKind::Event, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let entity = random_inputs(MentionKind::Entity, 3, &mut rng);
        assert!(features_from_inputs(&entity, &p).is_err());
        let wrong_dim = random_inputs(MentionKind::Event, 4, &mut rng);
        assert!(features_from_inputs(&wrong_dim, &p).is_err());
        assert!(matches!(loss_and_grads(&[], &p), Err(ModelError::EmptyBatch)));
    }

    #[test]
    fn loss_reference_values() {
        let mut p = params(MentionKind::Event, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<PairInputs> = (0..4).map(|_| random_inputs(MentionKind::Event, 3, &mut rng)).collect();
        // zero output layer: both logits equal, p = 0.5 everywhere
        p.mlp2.w2.iter_mut().for_each(|w| *w = 0.0);
        let batch: Vec<(&PairInputs, u8)> = xs.iter().zip([1, 0, 1, 0]).collect();
        let (l, _) = loss_and_grads(&batch, &p).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
        // confident and correct
        p.mlp2.b2 = vec![20.0, -20.0];
        let positives: Vec<(&PairInputs, u8)> = xs.iter().map(|x| (x, 1)).collect();
        let (l, _) = loss_and_grads(&positives, &p).unwrap();
        assert!(l <= 1e-6);
        assert!((loss(&positives, &p).unwrap() - l).abs() < 1e-15);
    }

    #[test]
    fn non_finite_loss_reports_index() {
        let p = params(MentionKind::Entity, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let good = random_inputs(MentionKind::Entity, 3, &mut rng);
        let mut bad = good.clone();
        bad.trigger[0] = f64::NAN;
        match loss_and_grads(&[(&good, 1), (&bad, 0)], &p) {
            Err(ModelError::NonFiniteLoss { index }) => assert_eq!(index, 1),
            other => panic!("expected non-finite loss, got {other:?}"),
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for task in [MentionKind::Event, MentionKind::Entity] {
            let p = ModelParams::init(2, 4, 3, task, &mut rng);
            let xs: Vec<PairInputs> = (0..3).map(|_| random_inputs(task, 2, &mut rng)).collect();
            let batch: Vec<(&PairInputs, u8)> = xs.iter().zip([1, 0, 1]).collect();
            let (_, g) = loss_and_grads(&batch, &p).unwrap();
            let eps = 1e-5;
            for t in 0..8 {
                for k in 0..p.tensors()[t].len() {
                    let mut hi = p.clone();
                    hi.tensors_mut()[t][k] += eps;
                    let mut lo = p.clone();
                    lo.tensors_mut()[t][k] -= eps;
                    let numeric = (loss(&batch, &hi).unwrap() - loss(&batch, &lo).unwrap()) / (2.0 * eps);
                    let analytic = g.tensors()[t][k];
                    let rel = (numeric - analytic).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                    assert!(rel < 1e-4, "tensor {t} index {k}: {analytic} vs {numeric}");
                }
            }
        }
    }
}
