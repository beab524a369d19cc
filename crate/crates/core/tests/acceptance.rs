//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use paircoref_core::cluster::{agglomerate, agglomerate_all, tune_threshold, ScoreMatrix};
use paircoref_core::corpus::{gen_synthetic, Corpus, Document, MentionKind, Scope, SynthConfig, Token};
use paircoref_core::encoder::{build_pair_sequence, Encoder, SyntheticEncoder};
use paircoref_core::metrics::{self, Metric};
use paircoref_core::pairrep::{
    loss, loss_and_grads, pair_inputs, predict_blocks, train, ModelParams, PairInputs, Symmetrize, TrainConfig,
};
use paircoref_core::topics::predict_topics;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst, mut perm_cases) = (0.0f64, 0usize);
    let cases = 300;
    for case in 0..cases {
        // the first 120 cases stay at <= 6 mentions so both sides have <= 6 clusters
        let n = if case < 120 { rng.gen_range(1..=6) } else { rng.gen_range(1..=12) };
        let ids = common::universe(n);
        let key = common::random_partition(&mut rng, &ids);
        let resp = common::random_partition(&mut rng, &ids);
        let got = [
            metrics::muc(&key, &resp).unwrap(),
            metrics::b3(&key, &resp).unwrap(),
            metrics::ceaf_e(&key, &resp).unwrap(),
            metrics::blanc(&key, &resp).unwrap(),
        ];
        let want = [
            common::muc(&key, &resp),
            common::b3(&key, &resp),
            common::ceaf_e(&key, &resp),
            common::blanc(&key, &resp),
        ];
        for (g, w) in got.iter().zip(want) {
            for (a, b) in [(g.recall, w.0), (g.precision, w.1), (g.f1, w.2)] {
                worst = worst.max((a - b).abs());
            }
        }
        if key.len() <= 6 && resp.len() <= 6 {
            perm_cases += 1;
            let sim = metrics::ceaf_e_similarity(&key, &resp);
            worst = worst.max((sim - common::ceaf_e_permutation_similarity(&key, &resp)).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && perm_cases >= 100 && elapsed < Duration::from_secs(10),
        format!("{cases} pairs, {perm_cases} permutation checks, max deviation {worst:.2e}, {elapsed:.2?}"),
    )
}

fn hand_fixtures() -> Outcome {
    let (key, resp) = common::hand_fixture();
    let r = metrics::report(&key, &resp).unwrap();
    let checks = [(r.muc.f1, 0.5), (r.b3.f1, 12.0 / 17.0), (r.ceaf_e.f1, 11.0 / 15.0)];
    let worst = checks.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        worst < 1e-12,
        format!("MUC {:.6}, B3 {:.6}, CEAF_e {:.6}, max deviation {worst:.1e}", r.muc.f1, r.b3.f1, r.ceaf_e.f1),
    )
}

fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Scorer inputs taken from real pairs of a small synthetic corpus.
fn corpus_inputs(rng: &mut ChaCha8Rng, dim: usize, task: MentionKind, count: usize) -> Vec<(PairInputs, u8)> {
    let cfg = SynthConfig { task, arg_prob: 0.6, ..SynthConfig::new(2, 2, 3, 6, rng.gen()) };
    let c = gen_synthetic(&cfg).unwrap();
    let index = c.index();
    let enc = SyntheticEncoder { dim, ..SyntheticEncoder::default() };
    let ms: Vec<_> = c.mentions().map(|(_, m)| m).collect();
    (0..count)
        .map(|_| {
            let (a, b) = (rng.gen_range(0..ms.len()), rng.gen_range(0..ms.len()));
            let seq = build_pair_sequence(&index, &ms[a].mention_id, &ms[b].mention_id).unwrap();
            let x = pair_inputs(ms[a], ms[b], &enc.encode(&seq), &seq, task).unwrap();
            (x, u8::from(ms[a].gold_cluster == ms[b].gold_cluster))
        })
        .collect()
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let configs = 60;
    let (mut worst, mut checked) = (0.0f64, 0usize);
    for cfg in 0..configs {
        let task = if cfg % 5 == 4 { MentionKind::Entity } else { MentionKind::Event };
        let dim = rng.gen_range(1..=4);
        let (h1, h2) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let mut p = ModelParams::init(dim, h1, h2, task, &mut rng);
        // non-zero biases exercise every parameter
        for t in [1, 3, 5, 7] {
            let n = p.tensors()[t].len();
            *p.tensors_mut()[t] = random_vec(&mut rng, n);
        }
        let batch_size = rng.gen_range(1..=4);
        let data: Vec<(PairInputs, u8)> = if cfg % 2 == 0 {
            corpus_inputs(&mut rng, dim, task, batch_size)
        } else {
            (0..batch_size)
                .map(|_| {
                    let trigger = random_vec(&mut rng, 3 * dim);
                    let roles = (task == MentionKind::Event)
                        .then(|| [(); 4].map(|_| random_vec(&mut rng, 3 * dim)));
                    (PairInputs { kind: task, trigger, roles }, rng.gen_range(0..=1))
                })
                .collect()
        };
        let batch: Vec<(&PairInputs, u8)> = data.iter().map(|(x, y)| (x, *y)).collect();
        let (_, g) = loss_and_grads(&batch, &p).unwrap();
        let eps = 1e-6;
        for t in 0..8 {
            for k in 0..p.tensors()[t].len() {
                let mut hi = p.clone();
                hi.tensors_mut()[t][k] += eps;
                let mut lo = p.clone();
                lo.tensors_mut()[t][k] -= eps;
                let numeric = (loss(&batch, &hi).unwrap() - loss(&batch, &lo).unwrap()) / (2.0 * eps);
                let analytic = g.tensors()[t][k];
                let rel = (numeric - analytic).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-4 && elapsed < Duration::from_secs(30),
        format!("{configs} configurations, {checked} parameters, max relative error {worst:.2e}, {elapsed:.2?}"),
    )
}

fn oracle_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = 0;
    for _ in 0..100 {
        let ids = common::universe(rng.gen_range(1..=20));
        let gold = common::random_partition(&mut rng, &ids);
        let label = common::label_map(&gold);
        let s = ScoreMatrix::from_fn(ids.clone(), |i, j| f64::from(u8::from(label[&ids[i]] == label[&ids[j]]))).unwrap();
        if agglomerate(&s, 0.5) != gold {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("100 gold partitions, {failures} mismatches"))
}

fn coarsening() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut violations, mut checks) = (0, 0);
    for case in 0..200 {
        let n = rng.gen_range(1..=16);
        // half the cases use coarse score levels to provoke ties
        let coarse = case % 2 == 0;
        let mut scores = vec![1.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v: f64 = if coarse { rng.gen_range(0..=10) as f64 / 10.0 } else { rng.gen() };
                scores[i * n + j] = v;
                scores[j * n + i] = v;
            }
        }
        let s = ScoreMatrix::new(common::universe(n), scores).unwrap();
        for step in 2..=9 {
            let tau = step as f64 / 10.0;
            let lower = (step - 1) as f64 / 10.0;
            checks += 1;
            if !agglomerate(&s, lower).is_coarsening_of(&agglomerate(&s, tau)) {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{checks} threshold pairs, {violations} violations"))
}

/// Two documents and four clusters of five mentions per topic.
fn synth(topics: usize, seed: u64) -> Corpus {
    let cfg = SynthConfig::new(2 * topics, 4 * topics, 5, 30, seed).with_topics(topics);
    gen_synthetic(&cfg).unwrap()
}

fn predicted_topics(c: &Corpus) -> BTreeMap<String, String> {
    predict_topics(c, 16, 0).unwrap().labels()
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let (train_c, dev_c, test_c) = (synth(32, 101), synth(8, 202), synth(8, 303));
    let encoder = Encoder::Synthetic(SyntheticEncoder::default());
    let cfg = TrainConfig { epochs: 20, h1: 64, h2: 64, ..TrainConfig::new(7) };
    let (model, log) = train(&train_c, &encoder, &cfg).unwrap();

    let blocks = |c: &Corpus| {
        predict_blocks(c, &model, &encoder, Scope::CrossDoc, &predicted_topics(c), Symmetrize::Ordered).unwrap()
    };
    let dev_gold = dev_c.gold_partition(Scope::CrossDoc).unwrap();
    let tuned = tune_threshold(&blocks(&dev_c), &dev_gold, Metric::Conll).unwrap();
    let response = agglomerate_all(&blocks(&test_c), tuned.threshold);
    let gold = test_c.gold_partition(Scope::CrossDoc).unwrap();
    let r = metrics::report(&gold, &response).unwrap();
    let elapsed = start.elapsed();
    outcome(
        r.conll_f1 >= 0.95 && elapsed < Duration::from_secs(120),
        format!(
            "train loss {:.4} -> {:.4} on {} pairs, tuned threshold {:.2} (dev CoNLL {:.4}), held-out CoNLL F1 {:.4}, {elapsed:.2?}",
            log.initial_loss, log.final_loss, log.pairs, tuned.threshold, tuned.value, r.conll_f1
        ),
    )
}

fn same_grouping(a: &BTreeMap<String, String>, b: &BTreeMap<String, String>) -> bool {
    fn groups(m: &BTreeMap<String, String>) -> BTreeSet<BTreeSet<&str>> {
        let mut g: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for (d, t) in m {
            g.entry(t).or_default().insert(d);
        }
        g.into_values().collect()
    }
    a.len() == b.len() && groups(a) == groups(b)
}

fn hand_group_corpus() -> Corpus {
    let groups = [
        ["storm", "flood", "river", "rain", "levee"],
        ["court", "judge", "trial", "verdict", "jury"],
        ["merger", "shares", "bank", "profit", "market"],
    ];
    let mut docs = Vec::new();
    for (g, words) in groups.iter().enumerate() {
        for d in 0..4 {
            let sentence: Vec<Token> = (0..6).map(|i| Token::new(words[(i * (d + 1) + d) % 5])).collect();
            docs.push(Document {
                doc_id: format!("g{g}d{d}"),
                topic_id: Some(format!("g{g}")),
                sentences: vec![sentence],
                mentions: vec![],
            });
        }
    }
    Corpus::new(docs, MentionKind::Event, Scope::CrossDoc).unwrap()
}

fn topic_recovery() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    let synthetic = gen_synthetic(&SynthConfig::new(9, 12, 5, 30, 31).with_topics(3)).unwrap();
    for (name, c) in [("hand-built", hand_group_corpus()), ("generated", synthetic)] {
        let a = predict_topics(&c, 6, 0).unwrap();
        let exact = same_grouping(&a.labels(), &c.gold_topics().unwrap());
        pass &= a.k == 3 && exact;
        details.push(format!("{name}: K = {}, exact = {exact}, silhouette {:.3}", a.k, a.silhouette));
    }
    outcome(pass, details.join("; "))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 7] = [
        ("metric oracle equivalence", metric_oracles),
        ("hand-computed metric fixtures", hand_fixtures),
        ("gradient check", gradient_check),
        ("clustering oracle recovery", oracle_recovery),
        ("coarsening monotonicity", coarsening),
        ("end-to-end synthetic pipeline", end_to_end),
        ("topic recovery", topic_recovery),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
