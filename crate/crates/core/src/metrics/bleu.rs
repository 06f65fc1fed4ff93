use std::collections::HashMap;

use super::ngram::ngram_counts;
use super::MetricError;

/// Cumulative BLEU-n for one candidate: uniform weights over n-gram orders
/// 1..=n, clipped precisions, brevity penalty against the closest reference
/// length (shorter wins ties), no smoothing.
pub fn bleu_n(candidate: &[String], references: &[Vec<String>], n: usize) -> Result<f64, MetricError> {
    if references.is_empty() {
        return Err(MetricError::EmptyReferences);
    }
    if !(1..=4).contains(&n) {
        return Err(MetricError::InvalidOrder(n));
    }
    let c = candidate.len();
    if c == 0 {
        return Ok(0.0);
    }

    let mut log_sum = 0.0;
    for order in 1..=n {
        let cand = ngram_counts(candidate, order);
        let total: usize = cand.values().sum();
        if total == 0 {
            return Ok(0.0);
        }
        let mut max_ref: HashMap<&[String], usize> = HashMap::new();
        for r in references {
            for (g, k) in ngram_counts(r, order) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(k);
            }
        }
        let clipped: usize = cand
            .iter()
            .map(|(g, &k)| k.min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
        if clipped == 0 {
            return Ok(0.0);
        }
        log_sum += (clipped as f64 / total as f64).ln() / n as f64;
    }

    let r = references
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| (len.abs_diff(c), len))
        .unwrap_or(0);
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    Ok(bp * log_sum.exp())
}
