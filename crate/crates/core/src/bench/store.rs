use super::{BenchError, KnowledgeBase, PipelineConfig};
use crate::embedding::EmbedderProfile;
use crate::ingest::{build_store, IngestOptions, IngestReport};
use crate::knowledge::{Dataset, KnowledgeRecord, Split};
use crate::store::{AnnParams, VectorStore};

/// Store meta key holding the JSON embedder profile used at ingest.
pub const META_EMBEDDER: &str = "embedder";
pub const META_KNOWLEDGE_BASE: &str = "knowledge_base";

/// Records indexed under `kb`, in dataset order. `Train` keeps only records
/// referenced by at least one train example.
pub fn knowledge_records(dataset: &Dataset, kb: KnowledgeBase) -> Vec<KnowledgeRecord> {
    match kb {
        KnowledgeBase::Full => dataset.records().to_vec(),
        KnowledgeBase::Train => {
            let used: std::collections::HashSet<&str> = dataset
                .examples()
                .iter()
                .filter(|e| e.split == Split::Train)
                .map(|e| e.record_id.as_str())
                .collect();
            dataset
                .records()
                .iter()
                .filter(|r| used.contains(r.record_id.as_str()))
                .cloned()
                .collect()
        }
    }
}

/// Ingests the dataset with the embedder, chunk budget and knowledge base of
/// `config`, recording the embedder profile in the store meta.
pub fn build_knowledge_store(
    dataset: &Dataset,
    config: &PipelineConfig,
    ann: AnnParams,
) -> Result<(VectorStore, IngestReport), BenchError> {
    config.validate()?;
    let embedder = config.embedder.build().map_err(|e| BenchError::ConfigInvalid(e.to_string()))?;
    let records = knowledge_records(dataset, config.knowledge_base);
    let options = IngestOptions {
        chunk_budget: config.chunk_budget,
        ann,
        build_index: true,
    };
    let (mut store, report) = build_store(&records, embedder.as_ref(), &options)?;
    store.set_meta(META_EMBEDDER, serde_json::to_string(&config.embedder)?);
    store.set_meta(
        META_KNOWLEDGE_BASE,
        serde_json::to_value(config.knowledge_base)?.as_str().unwrap_or_default(),
    );
    Ok((store, report))
}

/// Embedder profile recorded by [`build_knowledge_store`], if any.
pub fn recorded_embedder(store: &VectorStore) -> Option<EmbedderProfile> {
    serde_json::from_str(store.meta().get(META_EMBEDDER)?).ok()
}
