//! Text-generation metrics: cumulative BLEU-1..4, exact-match METEOR,
//! ROUGE-L, CIDEr and classification accuracy, all over one tokenizer.
//!
//! Corpus aggregation: BLEU, METEOR and ROUGE-L are the mean of per-item
//! scores; CIDEr is computed over the whole corpus (document frequencies are
//! corpus-level) and then averaged over items.

mod accuracy;
mod bleu;
mod cider;
mod meteor;
mod ngram;
mod rouge;
mod tokenize;

use std::collections::BTreeMap;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

pub use accuracy::{classification_accuracy, AccuracyReport};
pub use bleu::bleu_n;
pub use cider::{cider, cider_per_item, CiderItem};
pub use meteor::meteor;
pub use rouge::{rouge_l, ROUGE_BETA};
pub use tokenize::{token_count, token_spans, tokenize, TokenSequence};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("no reference sequences")]
    EmptyReferences,
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("BLEU order {0} outside 1..=4")]
    InvalidOrder(usize),
    #[error("{predictions} predictions but {golds} gold labels")]
    LengthMismatch { predictions: usize, golds: usize },
}

/// Column labels in report order.
pub const METRIC_COLUMNS: [&str; 7] = [
    "BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "METEOR", "ROUGE-L", "CIDEr",
];

/// Corpus metric summary. Values are rounded to six decimals on
/// construction so the fixed-point serialisation is lossless.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
pub struct MetricReport {
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub cider: f64,
    pub n_examples: usize,
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

impl MetricReport {
    pub fn new(values: [f64; 7], n_examples: usize) -> Self {
        let [bleu1, bleu2, bleu3, bleu4, meteor, rouge_l, cider] = values.map(round6);
        MetricReport {
            bleu1,
            bleu2,
            bleu3,
            bleu4,
            meteor,
            rouge_l,
            cider,
            n_examples,
        }
    }

    /// Values in [`METRIC_COLUMNS`] order.
    pub fn values(&self) -> [f64; 7] {
        [
            self.bleu1,
            self.bleu2,
            self.bleu3,
            self.bleu4,
            self.meteor,
            self.rouge_l,
            self.cider,
        ]
    }

    const KEYS: [&'static str; 7] = ["bleu1", "bleu2", "bleu3", "bleu4", "meteor", "rouge_l", "cider"];

    /// Flat `name → value` map with six-decimal fixed formatting.
    pub fn to_flat_map(&self) -> BTreeMap<&'static str, String> {
        Self::KEYS
            .iter()
            .zip(self.values())
            .map(|(k, v)| (*k, format!("{v:.6}")))
            .collect()
    }
}

impl Serialize for MetricReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(8))?;
        for (k, v) in Self::KEYS.iter().zip(self.values()) {
            let raw = RawValue::from_string(format!("{v:.6}")).map_err(serde::ser::Error::custom)?;
            map.serialize_entry(k, &raw)?;
        }
        map.serialize_entry("n_examples", &self.n_examples)?;
        map.end()
    }
}

/// Per-item text scores in [`METRIC_COLUMNS`] order, excluding CIDEr which
/// needs the corpus.
pub fn item_scores(candidate: &[String], references: &[Vec<String>]) -> Result<[f64; 6], MetricError> {
    Ok([
        bleu_n(candidate, references, 1)?,
        bleu_n(candidate, references, 2)?,
        bleu_n(candidate, references, 3)?,
        bleu_n(candidate, references, 4)?,
        meteor(candidate, references)?,
        rouge_l(candidate, references)?,
    ])
}

/// Scores a corpus of `(prediction, gold references)` pairs. An empty corpus
/// yields an all-zero report with `n_examples = 0`.
pub fn score_corpus<S: AsRef<str>>(items: &[(S, Vec<S>)]) -> Result<MetricReport, MetricError> {
    if items.is_empty() {
        return Ok(MetricReport::default());
    }
    let tokenized: Vec<CiderItem> = items
        .iter()
        .map(|(c, refs)| (tokenize(c.as_ref()), refs.iter().map(|r| tokenize(r.as_ref())).collect()))
        .collect();
    let mut sums = [0.0; 6];
    for (c, refs) in &tokenized {
        for (acc, v) in sums.iter_mut().zip(item_scores(c, refs)?) {
            *acc += v;
        }
    }
    let n = items.len() as f64;
    let c = cider(&tokenized)?;
    let [b1, b2, b3, b4, m, r] = sums.map(|s| s / n);
    Ok(MetricReport::new([b1, b2, b3, b4, m, r, c], items.len()))
}
