//! Knowledge-grounded multimodal retrieval for remote sensing imagery.

pub mod bench;
pub mod context;
pub mod embedding;
pub mod generation;
pub mod http;
pub mod ingest;
pub mod knowledge;
pub mod metrics;
pub mod retrieval;
pub mod store;
pub mod synthetic;
