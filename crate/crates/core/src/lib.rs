//! Pairwise event and entity coreference: corpus handling, contextual pair
//! encoding, argument-aware pair scoring, agglomerative clustering, document
//! topic prediction and coreference metrics.

pub mod cli;
pub mod cluster;
pub mod corpus;
pub mod encoder;
pub mod metrics;
pub mod pairrep;
pub mod topics;

pub use cluster::{agglomerate, lemma_baseline, tune_threshold, Partition, ScoreMatrix};
pub use corpus::{gen_synthetic, load_corpus, Corpus, MentionKind, Scope, SynthConfig};
pub use encoder::{Encoder, EncoderConfig, PrembStore, SyntheticEncoder};
pub use metrics::{report, Metric, MetricReport, Prf};
pub use pairrep::{predict_scores, train, ModelParams, TrainConfig};
pub use topics::{predict_topics, TopicAssignment};
