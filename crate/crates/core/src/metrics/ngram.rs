use std::collections::HashMap;

pub(crate) type NgramCounts<'a> = HashMap<&'a [String], usize>;

pub(crate) fn ngram_counts(tokens: &[String], n: usize) -> NgramCounts<'_> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}
