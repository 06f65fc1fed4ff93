use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Dataset, Split, TaskExample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitSpec {
    /// Keep the split labels carried by each example.
    Explicit,
    /// Stratified-by-category random split.
    Ratio { train_fraction: f64, seed: u64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    InvalidRatio(f64),
}

/// Partitions the task examples into train and test. Both halves share the
/// full record set; examples are relabelled for ratio splits.
pub fn split_dataset(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), SplitError> {
    let labelled: Vec<TaskExample> = match *spec {
        SplitSpec::Explicit => dataset.examples().to_vec(),
        SplitSpec::Ratio { train_fraction, seed } => {
            if !(train_fraction > 0.0 && train_fraction < 1.0) {
                return Err(SplitError::InvalidRatio(train_fraction));
            }
            ratio_labels(dataset, train_fraction, seed)
        }
    };
    let (train, test): (Vec<_>, Vec<_>) = labelled.into_iter().partition(|e| e.split == Split::Train);
    Ok((dataset.with_examples(train), dataset.with_examples(test)))
}

fn ratio_labels(dataset: &Dataset, fraction: f64, seed: u64) -> Vec<TaskExample> {
    // strata keyed by the linked record's category; dataset construction
    // guarantees the link resolves
    let mut strata: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, ex) in dataset.examples().iter().enumerate() {
        let category = dataset
            .record(&ex.record_id)
            .map(|r| r.category.clone())
            .unwrap_or_default();
        strata.entry(category).or_default().push(i);
    }

    let total = dataset.examples().len();
    let target = (total as f64 * fraction).round() as usize;

    // largest-remainder allocation keeps every stratum within one example of
    // its exact share while hitting the global target
    let mut quotas: Vec<(String, usize, f64)> = strata
        .iter()
        .map(|(k, v)| {
            let exact = v.len() as f64 * fraction;
            (k.clone(), exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = quotas.iter().map(|q| q.1).sum();
    let mut remaining = target.saturating_sub(assigned);
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| quotas[b].2.total_cmp(&quotas[a].2).then_with(|| quotas[a].0.cmp(&quotas[b].0)));
    for idx in order {
        if remaining == 0 {
            break;
        }
        if quotas[idx].2 > 0.0 {
            quotas[idx].1 += 1;
            remaining -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = dataset.examples().to_vec();
    for (key, quota, _) in quotas {
        let mut members = strata[&key].clone();
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            out[i].split = if pos < quota { Split::Train } else { Split::Test };
        }
    }
    out
}
