//! Field-aligned chunking, knowledge fusion and prompt assembly.

mod chunk;
mod fusion;
mod prompt;

use thiserror::Error;

pub use chunk::{chunk_document, chunk_entry_id, sentence_segments, TextChunk, DEFAULT_CHUNK_BUDGET, MIN_CHUNK_BUDGET};
pub use fusion::{
    fuse_context, truncate_tokens, ConcatFusion, FusedContext, FusionClient, FusionMode, RemoteFusion, Snippet,
    SourceRecord, WireFusionRequest, WireFusionResponse, DEFAULT_FUSION_CAP,
};
pub use prompt::{build_prompt, Prompt, TaskPreset, KNOWLEDGE_HEADER, PROMPT_SEPARATOR};

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("chunk budget {0} is below the minimum of {MIN_CHUNK_BUDGET} tokens")]
    BudgetTooSmall(usize),
    #[error("nothing to fuse")]
    EmptyInput,
    #[error("fusion provider unavailable: {0}")]
    ProviderUnavailable(String),
}
