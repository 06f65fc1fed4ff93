use super::MetricError;

pub const ROUGE_BETA: f64 = 1.2;

/// ROUGE-L F-measure with β = 1.2, best over references.
pub fn rouge_l(candidate: &[String], references: &[Vec<String>]) -> Result<f64, MetricError> {
    if references.is_empty() {
        return Err(MetricError::EmptyReferences);
    }
    Ok(references
        .iter()
        .map(|r| {
            let l = lcs_len(candidate, r);
            if l == 0 {
                return 0.0;
            }
            let p = l as f64 / candidate.len() as f64;
            let rec = l as f64 / r.len() as f64;
            let b2 = ROUGE_BETA * ROUGE_BETA;
            (1.0 + b2) * p * rec / (rec + b2 * p)
        })
        .fold(0.0, f64::max))
}

pub(crate) fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}
