use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::schema::Category;
use super::{validate_record, KnowledgeRecord, Split, TaskExample, TaskKind};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const TASKS_FILE: &str = "tasks.jsonl";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("schema violation in {file} line {line}, field `{field}`: {message}")]
    SchemaViolation {
        file: String,
        line: usize,
        field: String,
        message: String,
    },
    #[error("task example {0} references an unknown record")]
    DanglingReference(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Knowledge records plus benchmark examples. Records keep file order.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    records: Vec<KnowledgeRecord>,
    examples: Vec<TaskExample>,
    by_id: HashMap<String, usize>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records && self.examples == other.examples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    pub total: usize,
    pub train: usize,
    pub test: usize,
}

impl Dataset {
    /// Builds a dataset, enforcing id uniqueness and example→record links.
    pub fn new(records: Vec<KnowledgeRecord>, examples: Vec<TaskExample>) -> Result<Self, DatasetError> {
        let mut by_id = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if by_id.insert(r.record_id.clone(), i).is_some() {
                return Err(DatasetError::DuplicateId(r.record_id.clone()));
            }
        }
        let mut seen = HashSet::with_capacity(examples.len());
        for ex in &examples {
            if !seen.insert(ex.example_id.as_str()) {
                return Err(DatasetError::DuplicateId(ex.example_id.clone()));
            }
            if !by_id.contains_key(&ex.record_id) {
                return Err(DatasetError::DanglingReference(ex.example_id.clone()));
            }
        }
        Ok(Dataset {
            records,
            examples,
            by_id,
        })
    }

    pub fn records(&self) -> &[KnowledgeRecord] {
        &self.records
    }

    pub fn examples(&self) -> &[TaskExample] {
        &self.examples
    }

    pub fn record(&self, record_id: &str) -> Option<&KnowledgeRecord> {
        self.by_id.get(record_id).map(|&i| &self.records[i])
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty() && self.examples.is_empty()
    }

    pub fn examples_for(&self, task: TaskKind, split: Split) -> impl Iterator<Item = &TaskExample> {
        self.examples
            .iter()
            .filter(move |e| e.task == task && e.split == split)
    }

    /// Per-task example counts by split label.
    pub fn stats(&self) -> BTreeMap<TaskKind, SplitCounts> {
        let mut out: BTreeMap<TaskKind, SplitCounts> = BTreeMap::new();
        for ex in &self.examples {
            let c = out.entry(ex.task).or_default();
            c.total += 1;
            match ex.split {
                Split::Train => c.train += 1,
                Split::Test => c.test += 1,
            }
        }
        out
    }

    pub(crate) fn with_examples(&self, examples: Vec<TaskExample>) -> Dataset {
        Dataset {
            records: self.records.clone(),
            examples,
            by_id: self.by_id.clone(),
        }
    }
}

/// Loads `records.jsonl` and `tasks.jsonl` from a dataset directory.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(DatasetError::MissingFile(dir.to_path_buf()));
    }
    load_dataset_files(dir.join(RECORDS_FILE), dir.join(TASKS_FILE))
}

pub fn load_dataset_files(
    records_path: impl AsRef<Path>,
    tasks_path: impl AsRef<Path>,
) -> Result<Dataset, DatasetError> {
    let records: Vec<KnowledgeRecord> = parse_jsonl(records_path.as_ref())?;
    for (i, r) in records.iter().enumerate() {
        let report = validate_record(r);
        if let Some(v) = report.violations.first() {
            return Err(DatasetError::SchemaViolation {
                file: file_label(records_path.as_ref()),
                line: i + 1,
                field: v.field.clone(),
                message: v.message.clone(),
            });
        }
    }
    let examples: Vec<TaskExample> = parse_jsonl(tasks_path.as_ref())?;
    for (i, ex) in examples.iter().enumerate() {
        let violation = |field: &str, message: String| DatasetError::SchemaViolation {
            file: file_label(tasks_path.as_ref()),
            line: i + 1,
            field: field.to_string(),
            message,
        };
        if ex.gold.is_empty() {
            return Err(violation("gold", "gold must contain at least one reference".into()));
        }
        if ex.task == TaskKind::Classification {
            if let Some(bad) = ex.gold.iter().find(|g| Category::from_label(g).is_none()) {
                return Err(violation("gold", format!("{bad:?} is not a category label")));
            }
        }
    }
    Dataset::new(records, examples)
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn parse_jsonl<T: DeserializeOwned + Send>(path: &Path) -> Result<Vec<T>, DatasetError> {
    if !path.is_file() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    let content = fs::read_to_string(path)?;
    let lines: Vec<(usize, &str)> = content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    lines
        .par_iter()
        .map(|&(i, line)| {
            let de = &mut serde_json::Deserializer::from_str(line);
            serde_path_to_error::deserialize(de).map_err(|e| {
                let field = e.path().to_string();
                DatasetError::SchemaViolation {
                    file: file_label(path),
                    line: i + 1,
                    field: if field == "." { String::new() } else { field },
                    message: e.into_inner().to_string(),
                }
            })
        })
        .collect()
}

/// Writes the dataset as `records.jsonl` + `tasks.jsonl` into `dir`.
pub fn write_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<(), DatasetError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_jsonl(&dir.join(RECORDS_FILE), dataset.records())?;
    write_jsonl(&dir.join(TASKS_FILE), dataset.examples())?;
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
