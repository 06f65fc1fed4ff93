//! Process exit codes and the one-line JSON error printed on stderr.

use std::fmt;

use rsrag_core::bench::{BenchError, FailureKind, PipelineError};
use rsrag_core::embedding::EmbedError;
use rsrag_core::generation::GenerationError;
use rsrag_core::ingest::IngestError;
use rsrag_core::knowledge::DatasetError;
use rsrag_core::retrieval::RetrievalError;
use rsrag_core::store::StoreError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitKind {
    Input,
    Provider,
    Internal,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Input => 2,
            ExitKind::Provider => 3,
            ExitKind::Internal => 4,
        }
    }
}

impl From<FailureKind> for ExitKind {
    fn from(k: FailureKind) -> Self {
        match k {
            FailureKind::Input => ExitKind::Input,
            FailureKind::Provider => ExitKind::Provider,
            FailureKind::Internal => ExitKind::Internal,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    /// Machine-readable error name, e.g. `SchemaViolation`.
    pub error: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    pub kind: ExitKind,
    pub exit_code: i32,
}

impl CliError {
    pub fn new(kind: ExitKind, error: impl Into<String>, message: impl fmt::Display) -> Self {
        CliError {
            error: error.into(),
            message: message.to_string(),
            stage: None,
            kind,
            exit_code: kind.code(),
        }
    }

    pub fn input(error: impl Into<String>, message: impl fmt::Display) -> Self {
        CliError::new(ExitKind::Input, error, message)
    }

    pub fn internal(message: impl fmt::Display) -> Self {
        CliError::new(ExitKind::Internal, "Internal", message)
    }

    pub fn json_line(&self) -> String {
        serde_json::to_string(self).expect("error serialises")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.error, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let name = match &e {
            DatasetError::MissingFile(_) => "MissingFile",
            DatasetError::SchemaViolation { .. } => "SchemaViolation",
            DatasetError::DanglingReference(_) => "DanglingReference",
            DatasetError::DuplicateId(_) => "DuplicateId",
            DatasetError::Io(_) => "Io",
        };
        CliError::input(name, e)
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match &e {
            StoreError::CorruptSnapshot { .. } => CliError::input("CorruptSnapshot", e),
            StoreError::Io(_) => CliError::input("Io", e),
            StoreError::DimensionMismatch { .. } => CliError::input("DimensionMismatch", e),
            _ => CliError::internal(e),
        }
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        match &e {
            EmbedError::ProviderUnavailable(_) => CliError::new(ExitKind::Provider, "ProviderUnavailable", e),
            EmbedError::DimensionMismatch { .. } => CliError::new(ExitKind::Provider, "DimensionMismatch", e),
            EmbedError::EmptyInput => CliError::input("EmptyInput", e),
            EmbedError::UnresolvableRef(_) => CliError::input("UnresolvableRef", e),
            EmbedError::InvalidProfile(_) => CliError::input("InvalidProfile", e),
            EmbedError::ZeroVector => CliError::internal(e),
        }
    }
}

impl From<GenerationError> for CliError {
    fn from(e: GenerationError) -> Self {
        CliError::input("InvalidGenerator", e)
    }
}

pub fn retrieval_error_name(e: &RetrievalError) -> &'static str {
    match e {
        RetrievalError::AlphaOutOfRange(_) => "AlphaOutOfRange",
        RetrievalError::MissingModalityEmbedding(_) => "MissingModalityEmbedding",
        RetrievalError::EmptyQuery => "EmptyQuery",
        RetrievalError::InvalidConfig(_) => "InvalidConfig",
        RetrievalError::Store(_) => "Store",
        RetrievalError::Embed(_) => "Embed",
    }
}

impl From<RetrievalError> for CliError {
    fn from(e: RetrievalError) -> Self {
        match e {
            RetrievalError::Embed(e) => e.into(),
            RetrievalError::Store(e) => e.into(),
            other => CliError::input(retrieval_error_name(&other), other),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Embed { record_id, source } => {
                let mut err = CliError::from(source);
                err.message = format!("record {record_id}: {}", err.message);
                err
            }
            IngestError::Context(c) => CliError::input("Context", c),
            IngestError::Store(s) => s.into(),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let mut err = CliError::new(e.kind.into(), "PipelineFailure", &e.message);
        err.stage = Some(e.stage.to_string());
        err
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::ConfigInvalid(_) => CliError::input("ConfigInvalid", e),
            BenchError::StoreEmpty => CliError::input("StoreEmpty", e),
            BenchError::Ingest(i) => i.into(),
            BenchError::Io(_) => CliError::input("Io", e),
            other => CliError::internal(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input("Io", e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::input("InvalidJson", e)
    }
}
