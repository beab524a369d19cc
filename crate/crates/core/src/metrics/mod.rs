//! Coreference evaluation over gold mentions: MUC, B³, CEAF-e, BLANC and
//! their CoNLL / AVG-F aggregates.
//!
//! Key and response must cover the same mention universe. Singletons are
//! first-class clusters.

mod assignment;

pub use assignment::max_weight_assignment;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::Partition;

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("key and response cover different mentions: {0}")]
    UniverseMismatch(String),
    #[error("unknown metric `{0}` (expected muc, b3, ceaf_e, blanc, conll or avg_f)")]
    UnknownMetric(String),
}

pub type Result<T, E = MetricError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Muc,
    B3,
    CeafE,
    Blanc,
    Conll,
    AvgF,
}

impl FromStr for Metric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "muc" => Metric::Muc,
            "b3" | "bcub" | "b_cubed" => Metric::B3,
            "ceaf_e" | "ceafe" => Metric::CeafE,
            "blanc" => Metric::Blanc,
            "conll" | "conll_f1" => Metric::Conll,
            "avg_f" | "avgf" => Metric::AvgF,
            _ => return Err(MetricError::UnknownMetric(s.to_string())),
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Muc => "muc",
            Metric::B3 => "b3",
            Metric::CeafE => "ceaf_e",
            Metric::Blanc => "blanc",
            Metric::Conll => "conll",
            Metric::AvgF => "avg_f",
        })
    }
}

/// Recall, precision and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(recall: f64, precision: f64) -> Self {
        let f1 = if recall + precision > 0.0 { 2.0 * recall * precision / (recall + precision) } else { 0.0 };
        Prf { recall, precision, f1 }
    }

    const PERFECT: Prf = Prf { recall: 1.0, precision: 1.0, f1: 1.0 };
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn check_universe(key: &Partition, resp: &Partition) -> Result<()> {
    let (k, r) = (key.universe(), resp.universe());
    if k.len() != key.mention_count() || k != r {
        let missing = k.difference(&r).next().map(|m| format!("{m} missing from response"));
        let extra = r.difference(&k).next().map(|m| format!("{m} missing from key"));
        return Err(MetricError::UniverseMismatch(missing.or(extra).unwrap_or_default()));
    }
    Ok(())
}

/// Link-based recall of `resp` against `key` (swap arguments for precision).
fn muc_recall(key: &Partition, resp: &Partition) -> f64 {
    let member = resp.membership();
    let (mut num, mut den) = (0usize, 0usize);
    for k in key.clusters() {
        let mut parts: Vec<usize> = k.iter().map(|m| member[m.as_str()]).collect();
        parts.sort_unstable();
        parts.dedup();
        num += k.len() - parts.len();
        den += k.len() - 1;
    }
    ratio(num as f64, den as f64)
}

pub fn muc(key: &Partition, resp: &Partition) -> Result<Prf> {
    check_universe(key, resp)?;
    Ok(Prf::new(muc_recall(key, resp), muc_recall(resp, key)))
}

/// Overlap counts between clusters of `a` (rows) and clusters of `b` (columns).
fn overlaps(a: &Partition, b: &Partition) -> BTreeMap<(usize, usize), usize> {
    let member = b.membership();
    let mut out = BTreeMap::new();
    for (i, c) in a.clusters().iter().enumerate() {
        for m in c {
            *out.entry((i, member[m.as_str()])).or_insert(0) += 1;
        }
    }
    out
}

fn b3_recall(key: &Partition, resp: &Partition) -> f64 {
    // Each mention m in K ∩ R contributes |K ∩ R| / |K|; summed per cell.
    let n = key.mention_count();
    let total: f64 = overlaps(key, resp)
        .into_iter()
        .map(|((k, _), c)| (c * c) as f64 / key.clusters()[k].len() as f64)
        .sum();
    ratio(total, n as f64)
}

pub fn b3(key: &Partition, resp: &Partition) -> Result<Prf> {
    check_universe(key, resp)?;
    Ok(Prf::new(b3_recall(key, resp), b3_recall(resp, key)))
}

/// Optimal total φ4 similarity between key and response clusters.
pub fn ceaf_e_similarity(key: &Partition, resp: &Partition) -> f64 {
    let cells = overlaps(key, resp);
    let (nk, nr) = (key.len(), resp.len());

    // Clusters only interact through overlapping cells; solve each connected
    // component of the overlap graph separately.
    let mut parent: Vec<usize> = (0..nk + nr).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(k, r) in cells.keys() {
        let (a, b) = (find(&mut parent, k), find(&mut parent, nk + r));
        parent[a.max(b)] = a.min(b);
    }
    let mut comps: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for k in 0..nk {
        let root = find(&mut parent, k);
        comps.entry(root).or_default().0.push(k);
    }
    for r in 0..nr {
        let root = find(&mut parent, nk + r);
        comps.entry(root).or_default().1.push(r);
    }

    let mut total = 0.0;
    for (ks, rs) in comps.into_values() {
        if ks.is_empty() || rs.is_empty() {
            continue;
        }
        let weights: Vec<Vec<f64>> = ks
            .iter()
            .map(|&k| {
                rs.iter()
                    .map(|&r| {
                        let common = cells.get(&(k, r)).copied().unwrap_or(0);
                        let size = key.clusters()[k].len() + resp.clusters()[r].len();
                        2.0 * common as f64 / size as f64
                    })
                    .collect()
            })
            .collect();
        total += max_weight_assignment(&weights).1;
    }
    total
}

pub fn ceaf_e(key: &Partition, resp: &Partition) -> Result<Prf> {
    check_universe(key, resp)?;
    let sim = ceaf_e_similarity(key, resp);
    Ok(Prf::new(ratio(sim, key.len() as f64), ratio(sim, resp.len() as f64)))
}

/// Link counts for BLANC: coreference links in key, response and both, plus
/// the same for non-coreference links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LinkCounts {
    pub coref_key: u64,
    pub coref_resp: u64,
    pub coref_both: u64,
    pub non_key: u64,
    pub non_resp: u64,
    pub non_both: u64,
}

pub fn link_counts(key: &Partition, resp: &Partition) -> LinkCounts {
    let pairs = |n: u64| n * n.saturating_sub(1) / 2;
    let n = key.mention_count() as u64;
    let all = pairs(n);
    let coref_key: u64 = key.clusters().iter().map(|c| pairs(c.len() as u64)).sum();
    let coref_resp: u64 = resp.clusters().iter().map(|c| pairs(c.len() as u64)).sum();
    let coref_both: u64 = overlaps(key, resp).values().map(|&c| pairs(c as u64)).sum();
    let non_key = all - coref_key;
    let non_resp = all - coref_resp;
    // pairs split by both = all - (coref in either)
    let non_both = all - (coref_key + coref_resp - coref_both);
    LinkCounts { coref_key, coref_resp, coref_both, non_key, non_resp, non_both }
}

fn link_class(key: u64, resp: u64, both: u64) -> Prf {
    if key == 0 && resp == 0 {
        Prf::PERFECT
    } else {
        Prf::new(ratio(both as f64, key as f64), ratio(both as f64, resp as f64))
    }
}

/// BLANC with its coreference-link and non-coreference-link components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blanc {
    pub coref: Prf,
    pub non_coref: Prf,
    pub blanc: Prf,
}

pub fn blanc_detail(key: &Partition, resp: &Partition) -> Result<Blanc> {
    check_universe(key, resp)?;
    let l = link_counts(key, resp);
    let coref = link_class(l.coref_key, l.coref_resp, l.coref_both);
    let non_coref = link_class(l.non_key, l.non_resp, l.non_both);
    let blanc = Prf {
        recall: (coref.recall + non_coref.recall) / 2.0,
        precision: (coref.precision + non_coref.precision) / 2.0,
        f1: (coref.f1 + non_coref.f1) / 2.0,
    };
    Ok(Blanc { coref, non_coref, blanc })
}

pub fn blanc(key: &Partition, resp: &Partition) -> Result<Prf> {
    Ok(blanc_detail(key, resp)?.blanc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub muc: Prf,
    pub b3: Prf,
    pub ceaf_e: Prf,
    pub blanc: Prf,
    pub conll_f1: f64,
    pub avg_f: f64,
}

impl MetricReport {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Muc => self.muc.f1,
            Metric::B3 => self.b3.f1,
            Metric::CeafE => self.ceaf_e.f1,
            Metric::Blanc => self.blanc.f1,
            Metric::Conll => self.conll_f1,
            Metric::AvgF => self.avg_f,
        }
    }

    /// Fixed-width text table, scores in percent.
    pub fn table(&self) -> String {
        let mut out = format!("{:<8} {:>7} {:>7} {:>7}\n", "metric", "R", "P", "F1");
        for (name, m) in [("MUC", self.muc), ("B3", self.b3), ("CEAF_e", self.ceaf_e), ("BLANC", self.blanc)] {
            out.push_str(&format!(
                "{:<8} {:>7.2} {:>7.2} {:>7.2}\n",
                name,
                100.0 * m.recall,
                100.0 * m.precision,
                100.0 * m.f1
            ));
        }
        out.push_str(&format!("{:<8} {:>23.2}\n", "CoNLL", 100.0 * self.conll_f1));
        out.push_str(&format!("{:<8} {:>23.2}\n", "AVG-F", 100.0 * self.avg_f));
        out
    }
}

pub fn report(key: &Partition, resp: &Partition) -> Result<MetricReport> {
    let muc = muc(key, resp)?;
    let b3 = b3(key, resp)?;
    let ceaf_e = ceaf_e(key, resp)?;
    let blanc = blanc(key, resp)?;
    Ok(MetricReport {
        muc,
        b3,
        ceaf_e,
        blanc,
        conll_f1: (muc.f1 + b3.f1 + ceaf_e.f1) / 3.0,
        avg_f: (muc.f1 + b3.f1 + ceaf_e.f1 + blanc.f1) / 4.0,
    })
}

/// A single objective value, computing only what it needs.
pub fn objective(key: &Partition, resp: &Partition, metric: Metric) -> Result<f64> {
    Ok(match metric {
        Metric::Muc => muc(key, resp)?.f1,
        Metric::B3 => b3(key, resp)?.f1,
        Metric::CeafE => ceaf_e(key, resp)?.f1,
        Metric::Blanc => blanc(key, resp)?.f1,
        Metric::Conll | Metric::AvgF => report(key, resp)?.get(metric),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(clusters: &[&[&str]]) -> Partition {
        Partition::from_clusters(clusters.iter().map(|c| c.iter().map(|s| s.to_string()).collect()).collect()).unwrap()
    }

    fn key() -> Partition {
        p(&[&["a", "b", "c"], &["d"]])
    }

    fn resp() -> Partition {
        p(&[&["a", "b"], &["c", "d"]])
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn identity_is_perfect() {
        let r = report(&key(), &key()).unwrap();
        for m in [r.muc, r.b3, r.ceaf_e, r.blanc] {
            assert_eq!(m, Prf::PERFECT);
        }
        assert!(close(r.conll_f1, 1.0) && close(r.avg_f, 1.0));
    }

    #[test]
    fn hand_example() {
        let m = muc(&key(), &resp()).unwrap();
        assert!(close(m.recall, 0.5) && close(m.precision, 0.5) && close(m.f1, 0.5));
        let b = b3(&key(), &resp()).unwrap();
        assert!(close(b.recall, 2.0 / 3.0) && close(b.precision, 0.75) && close(b.f1, 12.0 / 17.0));
        let c = ceaf_e(&key(), &resp()).unwrap();
        assert!(close(ceaf_e_similarity(&key(), &resp()), 22.0 / 15.0));
        assert!(close(c.recall, 11.0 / 15.0) && close(c.precision, 11.0 / 15.0));
        let bl = blanc_detail(&key(), &resp()).unwrap();
        assert!(close(bl.coref.recall, 1.0 / 3.0) && close(bl.coref.precision, 0.5));
        assert!(close(bl.non_coref.recall, 2.0 / 3.0) && close(bl.non_coref.precision, 0.5));
        let r = report(&key(), &resp()).unwrap();
        assert!(close(r.conll_f1, (0.5 + 12.0 / 17.0 + 11.0 / 15.0) / 3.0));
    }

    #[test]
    fn b3_singleton_response() {
        let b = b3(&p(&[&["a", "b"]]), &p(&[&["a"], &["b"]])).unwrap();
        assert!(close(b.recall, 0.5) && close(b.precision, 1.0));
    }

    #[test]
    fn muc_all_singleton_key_is_zero() {
        let singles = p(&[&["a"], &["b"], &["c"]]);
        let m = muc(&singles, &singles).unwrap();
        assert_eq!((m.recall, m.precision, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn blanc_degenerate_universe() {
        let one = p(&[&["a"]]);
        assert_eq!(blanc(&one, &one).unwrap(), Prf::PERFECT);
        // no coreference links anywhere: that class counts as perfect
        let singles = p(&[&["a"], &["b"]]);
        assert_eq!(blanc(&singles, &singles).unwrap(), Prf::PERFECT);
        // key has coreference links, response none
        let bl = blanc_detail(&p(&[&["a", "b"], &["c"]]), &p(&[&["a"], &["b"], &["c"]])).unwrap();
        assert_eq!(bl.coref.f1, 0.0);
    }

    #[test]
    fn universe_mismatch_is_an_error() {
        assert!(matches!(report(&key(), &p(&[&["a", "b", "c"]])), Err(MetricError::UniverseMismatch(_))));
        assert!(matches!(muc(&p(&[&["a"]]), &p(&[&["a"], &["z"]])), Err(MetricError::UniverseMismatch(_))));
    }

    #[test]
    fn relabeling_does_not_matter() {
        let renamed = Partition::from_labels(vec![
            ("c".to_string(), 9),
            ("d".to_string(), 9),
            ("a".to_string(), 2),
            ("b".to_string(), 2),
        ]);
        assert_eq!(report(&key(), &renamed).unwrap(), report(&key(), &resp()).unwrap());
    }

    #[test]
    fn metric_names_parse() {
        for m in [Metric::Muc, Metric::B3, Metric::CeafE, Metric::Blanc, Metric::Conll, Metric::AvgF] {
            assert_eq!(m.to_string().parse::<Metric>().unwrap(), m);
        }
        assert!("lea".parse::<Metric>().is_err());
    }

    #[test]
    fn table_mentions_every_metric() {
        let t = report(&key(), &resp()).unwrap().table();
        for name in ["MUC", "B3", "CEAF_e", "BLANC", "CoNLL", "AVG-F"] {
            assert!(t.contains(name));
        }
    }
}
