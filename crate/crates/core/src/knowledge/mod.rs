//! Landmark knowledge records, benchmark task examples and the dataset that
//! groups them.

mod dataset;
mod document;
pub mod schema;
mod split;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use dataset::{load_dataset, load_dataset_files, write_dataset, Dataset, DatasetError, SplitCounts};
pub use document::{render_knowledge_document, DocumentSection, KnowledgeDocument};
pub use schema::{Category, TemporalResolution};
pub use split::{split_dataset, SplitError, SplitSpec};
pub use validate::{validate_record, ValidationReport, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
}

/// Measured value of a remote-sensing variable. Land-cover fields carry
/// class labels, everything else is numeric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RsValue {
    Number(f64),
    Label(String),
}

impl fmt::Display for RsValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RsValue::Number(v) => write!(f, "{v}"),
            RsValue::Label(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsVariable {
    pub value: RsValue,
    #[serde(default)]
    pub unit: String,
    pub temporal_resolution: TemporalResolution,
    #[serde(default)]
    pub source: String,
}

/// One landmark with its world knowledge and remote-sensing variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeRecord {
    pub record_id: String,
    pub name: String,
    pub category: String,
    pub area: String,
    pub location: Option<GeoPoint>,
    pub address: String,
    pub physical_area: String,
    pub construction_period: String,
    pub historical_background: String,
    pub major_events: String,
    pub architectural_characteristics: String,
    pub cultural_significance: String,
    pub primary_function: String,
    pub notable_visitors: String,
    pub details: String,
    /// Keyed by variable name.
    #[serde(default)]
    pub rs_fields: BTreeMap<String, RsVariable>,
    #[serde(default)]
    pub image_ref: Option<String>,
}

impl KnowledgeRecord {
    /// A record with every text field empty.
    pub fn new(record_id: impl Into<String>, name: impl Into<String>, category: Category) -> Self {
        KnowledgeRecord {
            record_id: record_id.into(),
            name: name.into(),
            category: category.label().to_string(),
            area: String::new(),
            location: None,
            address: String::new(),
            physical_area: String::new(),
            construction_period: String::new(),
            historical_background: String::new(),
            major_events: String::new(),
            architectural_characteristics: String::new(),
            cultural_significance: String::new(),
            primary_function: String::new(),
            notable_visitors: String::new(),
            details: String::new(),
            rs_fields: BTreeMap::new(),
            image_ref: None,
        }
    }

    pub fn category(&self) -> Option<Category> {
        Category::from_label(&self.category)
    }

    /// Text value of a world-knowledge field by json key. `location` is
    /// rendered as "lat, lon".
    pub fn world_field(&self, key: &str) -> Option<String> {
        let s = match key {
            "name" => &self.name,
            "category" => &self.category,
            "area" => &self.area,
            "location" => {
                return Some(
                    self.location
                        .map(|p| format!("{}, {}", p.latitude, p.longitude))
                        .unwrap_or_default(),
                )
            }
            "address" => &self.address,
            "physical_area" => &self.physical_area,
            "construction_period" => &self.construction_period,
            "historical_background" => &self.historical_background,
            "major_events" => &self.major_events,
            "architectural_characteristics" => &self.architectural_characteristics,
            "cultural_significance" => &self.cultural_significance,
            "primary_function" => &self.primary_function,
            "notable_visitors" => &self.notable_visitors,
            "details" => &self.details,
            _ => return None,
        };
        Some(s.clone())
    }

    pub fn has_image(&self) -> bool {
        self.image_ref.as_deref().is_some_and(|r| !r.is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Captioning,
    Classification,
    VqaC,
    VqaRsk,
    VqaWk,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::Captioning,
        TaskKind::Classification,
        TaskKind::VqaC,
        TaskKind::VqaRsk,
        TaskKind::VqaWk,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Captioning => "captioning",
            TaskKind::Classification => "classification",
            TaskKind::VqaC => "vqa_c",
            TaskKind::VqaRsk => "vqa_rsk",
            TaskKind::VqaWk => "vqa_wk",
        }
    }

    pub fn is_vqa(self) -> bool {
        matches!(self, TaskKind::VqaC | TaskKind::VqaRsk | TaskKind::VqaWk)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown task {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// One benchmark item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskExample {
    pub example_id: String,
    pub record_id: String,
    pub task: TaskKind,
    pub image_ref: String,
    #[serde(default)]
    pub query_text: String,
    pub gold: Vec<String>,
    pub split: Split,
}
