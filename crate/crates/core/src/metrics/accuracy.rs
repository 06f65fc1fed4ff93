use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{tokenize, MetricError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub overall: f64,
    /// Keyed by the normalised gold label.
    pub per_class: BTreeMap<String, f64>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

fn normalize(label: &str) -> String {
    tokenize(label).join(" ")
}

/// Overall and per-class accuracy. Labels compare after tokenize-join
/// normalisation. Empty input yields overall 0 with a warning.
pub fn classification_accuracy<P: AsRef<str>, G: AsRef<str>>(
    predictions: &[P],
    golds: &[G],
) -> Result<AccuracyReport, MetricError> {
    if predictions.len() != golds.len() {
        return Err(MetricError::LengthMismatch {
            predictions: predictions.len(),
            golds: golds.len(),
        });
    }
    if golds.is_empty() {
        return Ok(AccuracyReport {
            overall: 0.0,
            per_class: BTreeMap::new(),
            n: 0,
            warning: Some("no examples; accuracy defined as 0".into()),
        });
    }
    let mut tally: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut hits = 0;
    for (p, g) in predictions.iter().zip(golds) {
        let g = normalize(g.as_ref());
        let ok = normalize(p.as_ref()) == g;
        hits += ok as usize;
        let e = tally.entry(g).or_default();
        e.0 += ok as usize;
        e.1 += 1;
    }
    Ok(AccuracyReport {
        overall: hits as f64 / golds.len() as f64,
        per_class: tally
            .into_iter()
            .map(|(k, (h, n))| (k, h as f64 / n as f64))
            .collect(),
        n: golds.len(),
        warning: None,
    })
}
