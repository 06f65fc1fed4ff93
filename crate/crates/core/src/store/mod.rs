//! Embedded dual-collection vector store: one image collection and one text
//! collection, cross-linked by record id, each with an exact scan and an
//! optional HNSW index.
//!
//! Vectors are held as f32 rows (the snapshot representation); every
//! similarity reported is an exact cosine evaluated in f64 against those
//! rows.

mod hnsw;
mod snapshot;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingVector;

pub use hnsw::{AnnParams, Hnsw};
pub use snapshot::SNAPSHOT_VERSION;

pub type Payload = serde_json::Map<String, serde_json::Value>;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("ANN index for the {0} collection is not built")]
    IndexNotBuilt(CollectionKind),
    #[error("corrupt snapshot (version {version:?}): {reason}")]
    CorruptSnapshot { version: Option<u32>, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl StoreError {
    pub(crate) fn corrupt(version: Option<u32>, reason: impl Into<String>) -> Self {
        StoreError::CorruptSnapshot {
            version,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectionKind {
    Image,
    Text,
}

impl fmt::Display for CollectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CollectionKind::Image => "image",
            CollectionKind::Text => "text",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectionEntry {
    pub entry_id: String,
    pub record_id: String,
    pub vector: EmbeddingVector,
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedHit {
    pub entry_id: String,
    pub record_id: String,
    pub similarity: f64,
}

/// Compares hits best-first: similarity descending, then record id, then
/// entry id ascending.
pub fn hit_order(a: &RankedHit, b: &RankedHit) -> Ordering {
    b.similarity
        .total_cmp(&a.similarity)
        .then_with(|| a.record_id.cmp(&b.record_id))
        .then_with(|| a.entry_id.cmp(&b.entry_id))
}

/// Hits in [`hit_order`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankedList(pub Vec<RankedHit>);

impl RankedList {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, RankedHit> {
        self.0.iter()
    }
}

/// Cosine similarity of two raw vectors, clamped to [-1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, StoreError> {
    if u.len() != v.len() {
        return Err(StoreError::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(StoreError::ZeroVector);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone)]
struct Collection {
    dim: usize,
    entry_ids: Vec<String>,
    record_ids: Vec<String>,
    payloads: Vec<Payload>,
    data: Vec<f32>,
    norms: Vec<f64>,
    by_entry: HashMap<String, usize>,
    by_record: BTreeMap<String, Vec<usize>>,
    index: Option<Hnsw>,
    stale: bool,
}

impl Collection {
    fn new(dim: usize) -> Self {
        Collection {
            dim,
            entry_ids: Vec::new(),
            record_ids: Vec::new(),
            payloads: Vec::new(),
            data: Vec::new(),
            norms: Vec::new(),
            by_entry: HashMap::new(),
            by_record: BTreeMap::new(),
            index: None,
            stale: false,
        }
    }

    fn len(&self) -> usize {
        self.entry_ids.len()
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn push_row(&mut self, entry_id: String, record_id: String, row: &[f32], payload: Payload) -> usize {
        let i = self.len();
        self.by_entry.insert(entry_id.clone(), i);
        self.by_record.entry(record_id.clone()).or_default().push(i);
        self.entry_ids.push(entry_id);
        self.record_ids.push(record_id);
        self.payloads.push(payload);
        self.data.extend_from_slice(row);
        self.norms.push(row_norm(row));
        i
    }

    fn upsert(&mut self, entry: CollectionEntry) {
        let row: Vec<f32> = entry.vector.values().iter().map(|&x| x as f32).collect();
        if let Some(&i) = self.by_entry.get(&entry.entry_id) {
            let old_record = std::mem::replace(&mut self.record_ids[i], entry.record_id.clone());
            if old_record != entry.record_id {
                if let Some(rows) = self.by_record.get_mut(&old_record) {
                    rows.retain(|&r| r != i);
                    if rows.is_empty() {
                        self.by_record.remove(&old_record);
                    }
                }
                let rows = self.by_record.entry(entry.record_id).or_default();
                rows.push(i);
                rows.sort_unstable();
            }
            self.data[i * self.dim..(i + 1) * self.dim].copy_from_slice(&row);
            self.norms[i] = row_norm(&row);
            self.payloads[i] = entry.payload;
            if self.index.is_some() {
                self.stale = true;
            }
        } else {
            let i = self.push_row(entry.entry_id, entry.record_id, &row, entry.payload);
            if let Some(index) = self.index.as_mut() {
                index.insert(i as u32, &self.data, self.dim);
            }
        }
    }

    fn similarity(&self, q: &[f64], qnorm: f64, i: usize) -> f64 {
        let dot: f64 = q.iter().zip(self.row(i)).map(|(a, &b)| a * b as f64).sum();
        let denom = qnorm * self.norms[i];
        if denom == 0.0 {
            return 0.0;
        }
        (dot / denom).clamp(-1.0, 1.0)
    }

    fn hit(&self, i: usize, similarity: f64) -> RankedHit {
        RankedHit {
            entry_id: self.entry_ids[i].clone(),
            record_id: self.record_ids[i].clone(),
            similarity,
        }
    }

    fn rank(&self, q: &[f64], rows: impl Iterator<Item = usize>, k: usize) -> RankedList {
        let qnorm = norm(q);
        let mut hits: Vec<RankedHit> = rows.map(|i| self.hit(i, self.similarity(q, qnorm, i))).collect();
        if k < hits.len() {
            hits.select_nth_unstable_by(k, hit_order);
            hits.truncate(k);
        }
        hits.sort_by(hit_order);
        RankedList(hits)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn row_norm(row: &[f32]) -> f64 {
    row.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

/// Counts per collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreCounts {
    pub image: usize,
    pub text: usize,
}

#[derive(Debug, Clone)]
pub struct VectorStore {
    dim: usize,
    ann: AnnParams,
    image: Collection,
    text: Collection,
    meta: BTreeMap<String, String>,
}

impl VectorStore {
    pub fn new(dim: usize) -> Self {
        Self::with_params(dim, AnnParams::default())
    }

    pub fn with_params(dim: usize, ann: AnnParams) -> Self {
        VectorStore {
            dim,
            ann,
            image: Collection::new(dim),
            text: Collection::new(dim),
            meta: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ann_params(&self) -> AnnParams {
        self.ann
    }

    /// Free-form provenance stored in the snapshot manifest.
    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.meta.insert(key.into(), value.into());
    }

    fn coll(&self, kind: CollectionKind) -> &Collection {
        match kind {
            CollectionKind::Image => &self.image,
            CollectionKind::Text => &self.text,
        }
    }

    fn coll_mut(&mut self, kind: CollectionKind) -> &mut Collection {
        match kind {
            CollectionKind::Image => &mut self.image,
            CollectionKind::Text => &mut self.text,
        }
    }

    pub fn counts(&self) -> StoreCounts {
        StoreCounts {
            image: self.image.len(),
            text: self.text.len(),
        }
    }

    pub fn len(&self, kind: CollectionKind) -> usize {
        self.coll(kind).len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.len() == 0 && self.text.len() == 0
    }

    fn check_dim(&self, got: usize) -> Result<(), StoreError> {
        if got != self.dim {
            return Err(StoreError::DimensionMismatch {
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }

    /// Inserts or replaces by entry id. New entries extend a built index in
    /// place; replacing an existing vector marks the index stale.
    pub fn upsert(&mut self, kind: CollectionKind, entry: CollectionEntry) -> Result<String, StoreError> {
        self.check_dim(entry.vector.dim())?;
        let id = entry.entry_id.clone();
        self.coll_mut(kind).upsert(entry);
        Ok(id)
    }

    pub fn get_payload(&self, kind: CollectionKind, entry_id: &str) -> Option<&Payload> {
        let c = self.coll(kind);
        c.by_entry.get(entry_id).map(|&i| &c.payloads[i])
    }

    pub fn get_vector(&self, kind: CollectionKind, entry_id: &str) -> Option<&[f32]> {
        let c = self.coll(kind);
        c.by_entry.get(entry_id).map(|&i| c.row(i))
    }

    pub fn get_record_id(&self, kind: CollectionKind, entry_id: &str) -> Option<&str> {
        let c = self.coll(kind);
        c.by_entry.get(entry_id).map(|&i| c.record_ids[i].as_str())
    }

    /// Entry ids in row order.
    pub fn entry_ids(&self, kind: CollectionKind) -> &[String] {
        &self.coll(kind).entry_ids
    }

    /// Entry ids linked to a record, in row order.
    pub fn record_entries(&self, kind: CollectionKind, record_id: &str) -> Vec<&str> {
        let c = self.coll(kind);
        c.by_record
            .get(record_id)
            .map(|rows| rows.iter().map(|&i| c.entry_ids[i].as_str()).collect())
            .unwrap_or_default()
    }

    /// Record ids that have at least one entry in `kind`, ascending.
    pub fn record_ids(&self, kind: CollectionKind) -> impl Iterator<Item = &str> {
        self.coll(kind).by_record.keys().map(String::as_str)
    }

    /// Exact similarities of every entry of `record_id` in `kind`, best first.
    pub fn score_record(&self, kind: CollectionKind, record_id: &str, query: &EmbeddingVector) -> Result<RankedList, StoreError> {
        self.check_dim(query.dim())?;
        let c = self.coll(kind);
        let rows = c.by_record.get(record_id).map(|r| r.as_slice()).unwrap_or(&[]);
        Ok(c.rank(query.values(), rows.iter().copied(), rows.len()))
    }

    /// Full scan: the top `tau` entries under the total hit order.
    pub fn search_exact(&self, kind: CollectionKind, query: &EmbeddingVector, tau: usize) -> Result<RankedList, StoreError> {
        self.check_dim(query.dim())?;
        let c = self.coll(kind);
        Ok(c.rank(query.values(), 0..c.len(), tau))
    }

    /// Builds (or rebuilds) the HNSW index of both collections.
    /// Replaces the ANN parameters; existing indexes become stale.
    pub fn set_ann_params(&mut self, ann: AnnParams) {
        self.ann = ann;
        for kind in [CollectionKind::Image, CollectionKind::Text] {
            let c = self.coll_mut(kind);
            c.index = None;
            c.stale = true;
        }
    }

    pub fn build_index(&mut self) {
        for kind in [CollectionKind::Image, CollectionKind::Text] {
            let ann = self.ann;
            let c = self.coll_mut(kind);
            c.index = Some(Hnsw::build(ann, &c.data, c.dim));
            c.stale = false;
        }
    }

    pub fn index_ready(&self, kind: CollectionKind) -> bool {
        let c = self.coll(kind);
        c.index.is_some() && !c.stale
    }

    /// Approximate top `tau` via HNSW, re-scored exactly and returned in the
    /// total hit order.
    pub fn search_ann(&self, kind: CollectionKind, query: &EmbeddingVector, tau: usize) -> Result<RankedList, StoreError> {
        self.check_dim(query.dim())?;
        let c = self.coll(kind);
        let index = match (&c.index, c.stale) {
            (Some(i), false) => i,
            _ => return Err(StoreError::IndexNotBuilt(kind)),
        };
        if tau == 0 {
            return Ok(RankedList::default());
        }
        let qn = norm(query.values());
        let q32: Vec<f32> = query.values().iter().map(|&x| (x / qn) as f32).collect();
        let rows = index.search(&c.data, c.dim, &q32, self.ann.ef_search.max(tau));
        Ok(c.rank(query.values(), rows.into_iter().map(|r| r as usize), tau))
    }

    pub fn search(&self, kind: CollectionKind, query: &EmbeddingVector, tau: usize, exact: bool) -> Result<RankedList, StoreError> {
        if exact {
            self.search_exact(kind, query, tau)
        } else {
            self.search_ann(kind, query, tau)
        }
    }

    /// Text-side record ids without any image entry, ascending.
    pub fn unlinked_text_records(&self) -> Vec<String> {
        self.text
            .by_record
            .keys()
            .filter(|r| !self.image.by_record.contains_key(*r))
            .cloned()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::mock_embed;
    use proptest::prelude::*;

    fn unit(v: &[f64]) -> EmbeddingVector {
        EmbeddingVector::normalized(v.to_vec()).unwrap()
    }

    fn entry(id: &str, record: &str, v: &[f64]) -> CollectionEntry {
        let mut payload = Payload::new();
        payload.insert("text".into(), format!("payload of {id}").into());
        CollectionEntry {
            entry_id: id.into(),
            record_id: record.into(),
            vector: unit(v),
            payload,
        }
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - 0.7071068).abs() < 1e-6);
        assert!(matches!(cosine(&[1.0], &[1.0, 0.0]), Err(StoreError::DimensionMismatch { .. })));
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(StoreError::ZeroVector)));
    }

    #[test]
    fn exact_search_example() {
        let mut s = VectorStore::new(2);
        s.upsert(CollectionKind::Image, entry("e1", "A", &[1.0, 0.0])).unwrap();
        s.upsert(CollectionKind::Image, entry("e2", "B", &[0.0, 1.0])).unwrap();
        s.upsert(CollectionKind::Image, entry("e3", "C", &[0.6, 0.8])).unwrap();
        let hits = s.search_exact(CollectionKind::Image, &unit(&[1.0, 0.0]), 2).unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!(hits.0[0].entry_id, "e1");
        assert!((hits.0[0].similarity - 1.0).abs() < 1e-7);
        assert_eq!(hits.0[1].entry_id, "e3");
        assert!((hits.0[1].similarity - 0.6).abs() < 1e-7);

        let all = s.search_exact(CollectionKind::Image, &unit(&[1.0, 0.0]), 10).unwrap();
        assert_eq!(all.len(), 3);
        assert!(all.0.windows(2).all(|w| hit_order(&w[0], &w[1]) != Ordering::Greater));
        assert!(s.search_exact(CollectionKind::Text, &unit(&[1.0, 0.0]), 5).unwrap().is_empty());
    }

    #[test]
    fn upsert_round_trip_and_replace() {
        let mut s = VectorStore::new(2);
        let e = entry("e1", "A", &[1.0, 0.0]);
        s.upsert(CollectionKind::Text, e.clone()).unwrap();
        assert_eq!(s.get_payload(CollectionKind::Text, "e1"), Some(&e.payload));
        s.upsert(CollectionKind::Text, entry("e1", "A", &[0.0, 1.0])).unwrap();
        assert_eq!(s.len(CollectionKind::Text), 1);
        assert_eq!(s.get_vector(CollectionKind::Text, "e1").unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let mut s = VectorStore::new(512);
        let err = s.upsert(CollectionKind::Image, entry("e", "R", &[1.0; 7])).unwrap_err();
        assert!(matches!(err, StoreError::DimensionMismatch { expected: 512, got: 7 }));
        assert!(s.search_exact(CollectionKind::Image, &unit(&[1.0; 7]), 1).is_err());
    }

    #[test]
    fn ann_requires_index_and_tracks_staleness() {
        let mut s = VectorStore::new(2);
        s.upsert(CollectionKind::Image, entry("only", "A", &[0.6, 0.8])).unwrap();
        let q = unit(&[1.0, 0.0]);
        assert!(matches!(s.search_ann(CollectionKind::Image, &q, 1), Err(StoreError::IndexNotBuilt(_))));
        s.build_index();
        let hits = s.search_ann(CollectionKind::Image, &q, 1).unwrap();
        assert_eq!(hits.0[0].entry_id, "only");
        assert!((hits.0[0].similarity - 0.6).abs() < 1e-7);
        // appending keeps the index usable
        s.upsert(CollectionKind::Image, entry("new", "B", &[1.0, 0.0])).unwrap();
        assert_eq!(s.search_ann(CollectionKind::Image, &q, 1).unwrap().0[0].entry_id, "new");
        // replacing a vector does not
        s.upsert(CollectionKind::Image, entry("new", "B", &[0.0, 1.0])).unwrap();
        assert!(!s.index_ready(CollectionKind::Image));
        assert!(s.search_ann(CollectionKind::Image, &q, 1).is_err());
    }

    #[test]
    fn ties_break_by_record_then_entry() {
        let mut s = VectorStore::new(2);
        for (e, r) in [("z", "B"), ("y", "A"), ("x", "A")] {
            s.upsert(CollectionKind::Text, entry(e, r, &[1.0, 0.0])).unwrap();
        }
        let hits = s.search_exact(CollectionKind::Text, &unit(&[1.0, 0.0]), 3).unwrap();
        let order: Vec<_> = hits.iter().map(|h| h.entry_id.as_str()).collect();
        assert_eq!(order, ["x", "y", "z"]);
    }

    #[test]
    fn unlinked_text_records_reported() {
        let mut s = VectorStore::new(2);
        s.upsert(CollectionKind::Image, entry("i1", "A", &[1.0, 0.0])).unwrap();
        s.upsert(CollectionKind::Text, entry("t1", "A", &[1.0, 0.0])).unwrap();
        s.upsert(CollectionKind::Text, entry("t2", "B", &[1.0, 0.0])).unwrap();
        assert_eq!(s.unlinked_text_records(), vec!["B".to_string()]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn exact_search_matches_naive_scan(n in 0usize..400, dim in 2usize..12, tau in 0usize..50, seed in any::<u64>()) {
            let mut s = VectorStore::new(dim);
            let mut rows: Vec<EmbeddingVector> = Vec::new();
            for i in 0..n {
                let v = mock_embed(format!("{seed}-{i}").as_bytes(), dim, "prop");
                // a few duplicates force the tie-break path
                let v = if i % 7 == 3 && !rows.is_empty() { rows[i / 2 % rows.len()].clone() } else { v };
                rows.push(v.clone());
                s.upsert(CollectionKind::Text, CollectionEntry {
                    entry_id: format!("e{i:04}"),
                    record_id: format!("r{:03}", i % 50),
                    vector: v,
                    payload: Payload::new(),
                }).unwrap();
            }
            let q = mock_embed(format!("q{seed}").as_bytes(), dim, "prop");
            let got = s.search_exact(CollectionKind::Text, &q, tau).unwrap();

            let mut naive: Vec<RankedHit> = (0..n).map(|i| {
                let id = format!("e{i:04}");
                let row: Vec<f64> = s.get_vector(CollectionKind::Text, &id).unwrap().iter().map(|&x| x as f64).collect();
                RankedHit { entry_id: id, record_id: format!("r{:03}", i % 50), similarity: cosine(q.values(), &row).unwrap() }
            }).collect();
            naive.sort_by(hit_order);
            naive.truncate(tau);
            prop_assert_eq!(got.len(), naive.len());
            for (g, w) in got.iter().zip(&naive) {
                prop_assert_eq!(&g.entry_id, &w.entry_id);
                prop_assert!((g.similarity - w.similarity).abs() < 1e-12);
            }
        }

        #[test]
        fn cosine_is_symmetric(u in prop::collection::vec(-1.0f64..1.0, 8), v in prop::collection::vec(-1.0f64..1.0, 8)) {
            if let (Ok(a), Ok(b)) = (cosine(&u, &v), cosine(&v, &u)) {
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&a));
            }
        }
    }
}
