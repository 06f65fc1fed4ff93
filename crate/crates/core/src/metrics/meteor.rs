use super::MetricError;

/// Exact-match METEOR: greedy left-to-right unigram alignment, recall-weighted
/// harmonic mean and a cubic fragmentation penalty; best over references.
pub fn meteor(candidate: &[String], references: &[Vec<String>]) -> Result<f64, MetricError> {
    if references.is_empty() {
        return Err(MetricError::EmptyReferences);
    }
    Ok(references
        .iter()
        .map(|r| meteor_single(candidate, r))
        .fold(0.0, f64::max))
}

fn meteor_single(candidate: &[String], reference: &[String]) -> f64 {
    let mut used = vec![false; reference.len()];
    // reference position aligned to each candidate position
    let mut alignment: Vec<Option<usize>> = Vec::with_capacity(candidate.len());
    for tok in candidate {
        let hit = (0..reference.len()).find(|&j| !used[j] && reference[j] == *tok);
        if let Some(j) = hit {
            used[j] = true;
        }
        alignment.push(hit);
    }

    let m = alignment.iter().flatten().count();
    if m == 0 {
        return 0.0;
    }

    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for (i, a) in alignment.iter().enumerate() {
        match (*a, prev) {
            (Some(j), Some((pi, pj))) if i == pi + 1 && j == pj + 1 => prev = Some((i, j)),
            (Some(j), _) => {
                chunks += 1;
                prev = Some((i, j));
            }
            (None, _) => prev = None,
        }
    }

    let m = m as f64;
    let p = m / candidate.len() as f64;
    let r = m / reference.len() as f64;
    let f = 10.0 * p * r / (r + 9.0 * p);
    let penalty = 0.5 * (chunks as f64 / m).powi(3);
    f * (1.0 - penalty)
}
