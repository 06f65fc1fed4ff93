use std::collections::{HashMap, HashSet};

use super::ngram::{ngram_counts, NgramCounts};
use super::MetricError;

pub const CIDER_MAX_N: usize = 4;

/// One scored item: a candidate and its references.
pub type CiderItem = (Vec<String>, Vec<Vec<String>>);

/// Corpus CIDEr. Document frequencies come from the items' reference sets,
/// idf = ln(|items| / max(df, 1)), tf is normalised by the sentence's n-gram
/// total and a zero vector has cosine 0. Scaled by 10.
pub fn cider(items: &[CiderItem]) -> Result<f64, MetricError> {
    Ok(cider_per_item(items)?.iter().sum::<f64>() / items.len() as f64)
}

/// Per-item CIDEr values (already scaled by 10); their mean is [`cider`].
pub fn cider_per_item(items: &[CiderItem]) -> Result<Vec<f64>, MetricError> {
    if items.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let n_items = items.len() as f64;

    let mut df: Vec<HashMap<&[String], usize>> = vec![HashMap::new(); CIDER_MAX_N];
    for (_, refs) in items {
        for (n, table) in df.iter_mut().enumerate() {
            let grams: HashSet<&[String]> = refs
                .iter()
                .flat_map(|r| ngram_counts(r, n + 1).into_keys())
                .collect();
            for g in grams {
                *table.entry(g).or_insert(0) += 1;
            }
        }
    }

    let vector = |counts: NgramCounts<'_>, table: &HashMap<&[String], usize>| -> HashMap<Vec<String>, f64> {
        let total: usize = counts.values().sum();
        counts
            .into_iter()
            .map(|(g, k)| {
                let d = table.get(g).copied().unwrap_or(0).max(1) as f64;
                let w = (k as f64 / total as f64) * (n_items / d).ln();
                (g.to_vec(), w)
            })
            .collect()
    };

    let mut out = Vec::with_capacity(items.len());
    for (cand, refs) in items {
        let mut item_score = 0.0;
        for (n, table) in df.iter().enumerate() {
            let gc = vector(ngram_counts(cand, n + 1), table);
            let sims: f64 = refs
                .iter()
                .map(|r| sparse_cosine(&gc, &vector(ngram_counts(r, n + 1), table)))
                .sum();
            if !refs.is_empty() {
                item_score += sims / refs.len() as f64;
            }
        }
        out.push(10.0 * item_score / CIDER_MAX_N as f64);
    }
    Ok(out)
}

fn sparse_cosine(a: &HashMap<Vec<String>, f64>, b: &HashMap<Vec<String>, f64>) -> f64 {
    let na: f64 = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a
        .iter()
        .filter_map(|(g, v)| b.get(g).map(|w| v * w))
        .sum();
    (dot / (na * nb)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tokenize;

    fn item(c: &str, refs: &[&str]) -> CiderItem {
        (tokenize(c), refs.iter().map(|r| tokenize(r)).collect())
    }

    #[test]
    fn single_item_is_zero() {
        assert_eq!(cider(&[item("red tower", &["red tower"])]).unwrap(), 0.0);
    }

    #[test]
    fn two_item_corpus() {
        let s = cider(&[item("red tower", &["red tower"]), item("blue lake", &["blue lake"])]).unwrap();
        assert!((s - 5.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn no_overlap_contributes_zero() {
        let per = cider_per_item(&[item("green field", &["red tower"]), item("blue lake", &["blue lake"])]).unwrap();
        assert_eq!(per[0], 0.0);
        assert!(per[1] > 0.0);
    }

    #[test]
    fn empty_corpus() {
        assert_eq!(cider(&[]), Err(MetricError::EmptyCorpus));
    }
}
