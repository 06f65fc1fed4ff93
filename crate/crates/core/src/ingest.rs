//! Builds the dual-collection store from a dataset: documents, chunks,
//! embeddings, cross-links and the ANN index.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::context::{chunk_document, ContextError, TextChunk, DEFAULT_CHUNK_BUDGET};
use crate::embedding::{EmbedError, Embedder, EmbeddingVector};
use crate::knowledge::{render_knowledge_document, Dataset, KnowledgeRecord};
use crate::store::{AnnParams, CollectionEntry, CollectionKind, Payload, StoreError, VectorStore};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("record {record_id}: {source}")]
    Embed { record_id: String, source: EmbedError },
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestOptions {
    pub chunk_budget: usize,
    pub ann: AnnParams,
    pub build_index: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            chunk_budget: DEFAULT_CHUNK_BUDGET,
            ann: AnnParams::default(),
            build_index: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub records: usize,
    pub image_entries: usize,
    pub text_entries: usize,
    /// Records with knowledge text but no image, ascending.
    pub unlinked_records: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub fn image_entry_id(record_id: &str) -> String {
    format!("{record_id}#img")
}

struct Encoded {
    chunks: Vec<(TextChunk, EmbeddingVector)>,
    image: Option<(String, EmbeddingVector)>,
}

fn encode(record: &KnowledgeRecord, embedder: &dyn Embedder, budget: usize) -> Result<Encoded, IngestError> {
    let wrap = |source| IngestError::Embed {
        record_id: record.record_id.clone(),
        source,
    };
    let doc = render_knowledge_document(record);
    let chunks = chunk_document(&doc, budget)?;
    let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
    let vectors = if texts.is_empty() {
        Vec::new()
    } else {
        embedder.embed_texts(&texts).map_err(wrap)?
    };
    let image = match record.image_ref.as_deref().filter(|r| !r.trim().is_empty()) {
        Some(r) => Some((r.to_string(), embedder.embed_image(r).map_err(wrap)?)),
        None => None,
    };
    Ok(Encoded {
        chunks: chunks.into_iter().zip(vectors).collect(),
        image,
    })
}

/// Payload of a text entry: the chunk itself.
pub fn chunk_payload(chunk: &TextChunk) -> Payload {
    match json!({
        "kind": "text",
        "chunk_index": chunk.chunk_index,
        "field_names": chunk.field_names,
        "text": chunk.text,
        "token_count": chunk.token_count,
    }) {
        serde_json::Value::Object(m) => m,
        _ => unreachable!(),
    }
}

/// Encodes records in parallel and inserts them in record order, so the
/// resulting store does not depend on scheduling.
pub fn build_store(
    records: &[KnowledgeRecord],
    embedder: &dyn Embedder,
    options: &IngestOptions,
) -> Result<(VectorStore, IngestReport), IngestError> {
    let encoded: Vec<Encoded> = records
        .par_iter()
        .map(|r| encode(r, embedder, options.chunk_budget))
        .collect::<Result<_, _>>()?;

    let mut store = VectorStore::with_params(embedder.dim(), options.ann);
    let mut report = IngestReport {
        records: records.len(),
        ..IngestReport::default()
    };
    for (record, enc) in records.iter().zip(encoded) {
        for (chunk, vector) in enc.chunks {
            store.upsert(
                CollectionKind::Text,
                CollectionEntry {
                    entry_id: chunk.entry_id(),
                    record_id: record.record_id.clone(),
                    vector,
                    payload: chunk_payload(&chunk),
                },
            )?;
            report.text_entries += 1;
        }
        if let Some((image_ref, vector)) = enc.image {
            let mut payload = Payload::new();
            payload.insert("kind".into(), "image".into());
            payload.insert("image_ref".into(), image_ref.into());
            store.upsert(
                CollectionKind::Image,
                CollectionEntry {
                    entry_id: image_entry_id(&record.record_id),
                    record_id: record.record_id.clone(),
                    vector,
                    payload,
                },
            )?;
            report.image_entries += 1;
        }
    }
    report.unlinked_records = store.unlinked_text_records();
    if !report.unlinked_records.is_empty() {
        report.warnings.push(format!(
            "{} record(s) have knowledge text but no image entry",
            report.unlinked_records.len()
        ));
    }
    store.set_meta("chunk_budget", options.chunk_budget.to_string());
    store.set_meta("records", records.len().to_string());
    if options.build_index {
        store.build_index();
    }
    Ok((store, report))
}

pub fn ingest_dataset(
    dataset: &Dataset,
    embedder: &dyn Embedder,
    options: &IngestOptions,
) -> Result<(VectorStore, IngestReport), IngestError> {
    build_store(dataset.records(), embedder, options)
}

/// Text of a record's chunks concatenated in chunk order, with their ids.
pub fn record_text(store: &VectorStore, record_id: &str) -> (String, Vec<String>) {
    let mut chunks: Vec<(u64, &str, String)> = store
        .record_entries(CollectionKind::Text, record_id)
        .into_iter()
        .filter_map(|id| {
            let p = store.get_payload(CollectionKind::Text, id)?;
            let idx = p.get("chunk_index").and_then(|v| v.as_u64()).unwrap_or(0);
            let text = p.get("text").and_then(|v| v.as_str()).unwrap_or_default().to_string();
            Some((idx, id, text))
        })
        .collect();
    chunks.sort_by_key(|c| c.0);
    let ids = chunks.iter().map(|c| c.1.to_string()).collect();
    (chunks.into_iter().map(|c| c.2).collect(), ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::MockEmbedder;
    use crate::knowledge::Category;

    fn records() -> Vec<KnowledgeRecord> {
        let mut a = KnowledgeRecord::new("A", "Harbour Bridge", Category::Bridge);
        a.details = "Steel arch. ".repeat(200);
        a.image_ref = Some("a.png".into());
        let b = KnowledgeRecord::new("B", "Quiet Grove", Category::Forest);
        vec![a, b]
    }

    #[test]
    fn builds_both_collections_and_reports_unlinked() {
        let e = MockEmbedder::new(16);
        let (store, report) = build_store(&records(), &e, &IngestOptions::default()).unwrap();
        assert_eq!(report.image_entries, 1);
        assert!(report.text_entries >= 3);
        assert_eq!(report.unlinked_records, ["B"]);
        assert_eq!(store.len(CollectionKind::Text), report.text_entries);
        assert!(store.index_ready(CollectionKind::Text));
        let (text, ids) = record_text(&store, "A");
        assert_eq!(text, render_knowledge_document(&records()[0]).text());
        assert_eq!(ids[0], "A#c0");
    }

    #[test]
    fn deterministic_build() {
        let e = MockEmbedder::new(16);
        let opts = IngestOptions::default();
        let a = build_store(&records(), &e, &opts).unwrap().0;
        let b = build_store(&records(), &e, &opts).unwrap().0;
        assert_eq!(a.snapshot_id().unwrap(), b.snapshot_id().unwrap());
    }
}
