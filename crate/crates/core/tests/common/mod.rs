//! Independent brute-force oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use paircoref_core::cluster::Partition;
use rand::Rng;

pub fn partition(clusters: &[&[&str]]) -> Partition {
    Partition::from_clusters(clusters.iter().map(|c| c.iter().map(|s| s.to_string()).collect()).collect()).unwrap()
}

/// Mention names `m00..`.
pub fn universe(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("m{i:02}")).collect()
}

/// Uniform random labels in `0..n`, favouring a spread of cluster counts.
pub fn random_labels(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let k = rng.gen_range(1..=n.max(1));
    (0..n).map(|_| rng.gen_range(0..k)).collect()
}

pub fn from_labels(ids: &[String], labels: &[usize]) -> Partition {
    Partition::from_labels(ids.iter().cloned().zip(labels.iter().copied()))
}

pub fn random_partition(rng: &mut impl Rng, ids: &[String]) -> Partition {
    from_labels(ids, &random_labels(rng, ids.len()))
}

fn div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

pub fn f1(r: f64, p: f64) -> f64 {
    if r + p == 0.0 {
        0.0
    } else {
        2.0 * r * p / (r + p)
    }
}

/// Label of every mention under a partition.
pub fn label_map(p: &Partition) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for (i, c) in p.clusters().iter().enumerate() {
        for m in c {
            out.insert(m.clone(), i);
        }
    }
    out
}

/// MUC recall by counting connected components of each key cluster under
/// the response's coreference links.
fn muc_side(key: &Partition, resp: &Partition) -> f64 {
    let r = label_map(resp);
    let (mut num, mut den) = (0.0, 0.0);
    for k in key.clusters() {
        let n = k.len();
        let mut comp: Vec<usize> = (0..n).collect();
        // naive relabel-based union over all response-linked pairs
        for a in 0..n {
            for b in 0..n {
                if r[&k[a]] == r[&k[b]] && comp[a] != comp[b] {
                    let (from, to) = (comp[b], comp[a]);
                    comp.iter_mut().filter(|c| **c == from).for_each(|c| *c = to);
                }
            }
        }
        comp.sort_unstable();
        comp.dedup();
        num += (n - comp.len()) as f64;
        den += (n - 1) as f64;
    }
    div(num, den)
}

pub fn muc(key: &Partition, resp: &Partition) -> (f64, f64, f64) {
    let (r, p) = (muc_side(key, resp), muc_side(resp, key));
    (r, p, f1(r, p))
}

/// B³ straight from the per-mention definition.
pub fn b3(key: &Partition, resp: &Partition) -> (f64, f64, f64) {
    let (k, r) = (label_map(key), label_map(resp));
    let ids: Vec<&String> = k.keys().collect();
    let (mut rec, mut prec) = (0.0, 0.0);
    for m in &ids {
        let km: Vec<&&String> = ids.iter().filter(|x| k[**x] == k[*m]).collect();
        let rm: Vec<&&String> = ids.iter().filter(|x| r[**x] == r[*m]).collect();
        let both = km.iter().filter(|x| r[***x] == r[*m]).count() as f64;
        rec += both / km.len() as f64;
        prec += both / rm.len() as f64;
    }
    let n = ids.len() as f64;
    let (rr, pp) = (div(rec, n), div(prec, n));
    (rr, pp, f1(rr, pp))
}

fn phi4(a: &[String], b: &[String]) -> f64 {
    let common = a.iter().filter(|x| b.contains(x)).count();
    2.0 * common as f64 / (a.len() + b.len()) as f64
}

/// Best alignment by trying every injective map, padding the smaller side.
pub fn ceaf_e_permutation_similarity(key: &Partition, resp: &Partition) -> f64 {
    let (mut ks, mut rs) = (key.clusters().to_vec(), resp.clusters().to_vec());
    let swapped = ks.len() > rs.len();
    if swapped {
        std::mem::swap(&mut ks, &mut rs);
    }
    let mut best = 0.0f64;
    let mut idx: Vec<usize> = (0..rs.len()).collect();
    permute(&mut idx, 0, &mut |perm| {
        let s: f64 = ks.iter().enumerate().map(|(i, k)| phi4(k, &rs[perm[i]])).sum();
        best = best.max(s);
    });
    best
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

/// Best alignment by dynamic programming over subsets of response clusters.
pub fn ceaf_e_subset_similarity(key: &Partition, resp: &Partition) -> f64 {
    let (mut ks, mut rs) = (key.clusters().to_vec(), resp.clusters().to_vec());
    if ks.len() > rs.len() {
        std::mem::swap(&mut ks, &mut rs);
    }
    let m = rs.len();
    let mut dp = vec![f64::NEG_INFINITY; 1 << m];
    dp[0] = 0.0;
    for k in &ks {
        let mut next = vec![f64::NEG_INFINITY; 1 << m];
        for (mask, &v) in dp.iter().enumerate() {
            if v == f64::NEG_INFINITY {
                continue;
            }
            for (j, r) in rs.iter().enumerate() {
                if mask & (1 << j) == 0 {
                    let nm = mask | (1 << j);
                    next[nm] = next[nm].max(v + phi4(k, r));
                }
            }
        }
        dp = next;
    }
    dp.into_iter().fold(0.0, f64::max)
}

pub fn ceaf_e(key: &Partition, resp: &Partition) -> (f64, f64, f64) {
    let sim = ceaf_e_subset_similarity(key, resp);
    let (r, p) = (div(sim, key.len() as f64), div(sim, resp.len() as f64));
    (r, p, f1(r, p))
}

/// BLANC by enumerating every unordered mention pair.
pub fn blanc(key: &Partition, resp: &Partition) -> (f64, f64, f64) {
    let (k, r) = (label_map(key), label_map(resp));
    let ids: Vec<&String> = k.keys().collect();
    let (mut ck, mut cr, mut cb, mut nk, mut nr, mut nb) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for a in 0..ids.len() {
        for b in a + 1..ids.len() {
            let in_k = k[ids[a]] == k[ids[b]];
            let in_r = r[ids[a]] == r[ids[b]];
            match (in_k, in_r) {
                (true, true) => {
                    ck += 1.0;
                    cr += 1.0;
                    cb += 1.0;
                }
                (true, false) => {
                    ck += 1.0;
                    nr += 1.0;
                }
                (false, true) => {
                    nk += 1.0;
                    cr += 1.0;
                }
                (false, false) => {
                    nk += 1.0;
                    nr += 1.0;
                    nb += 1.0;
                }
            }
        }
    }
    let class = |key: f64, resp: f64, both: f64| {
        if key == 0.0 && resp == 0.0 {
            (1.0, 1.0, 1.0)
        } else {
            let (r, p) = (div(both, key), div(both, resp));
            (r, p, f1(r, p))
        }
    };
    let c = class(ck, cr, cb);
    let n = class(nk, nr, nb);
    ((c.0 + n.0) / 2.0, (c.1 + n.1) / 2.0, (c.2 + n.2) / 2.0)
}

/// Key {a,b,c},{d} and response {a,b},{c,d}.
pub fn hand_fixture() -> (Partition, Partition) {
    (partition(&[&["a", "b", "c"], &["d"]]), partition(&[&["a", "b"], &["c", "d"]]))
}
