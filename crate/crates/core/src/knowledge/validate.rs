use serde::{Deserialize, Serialize};

use super::schema::{self, Category};
use super::{KnowledgeRecord, RsValue};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub record_id: String,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a record against the schema invariants. Violations are data; an
/// empty report means the record is accepted.
pub fn validate_record(record: &KnowledgeRecord) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |field: &str, message: String| {
        violations.push(Violation {
            field: field.to_string(),
            message,
        })
    };

    if record.record_id.trim().is_empty() {
        push("record_id", "record_id must not be empty".into());
    }
    if Category::from_label(&record.category).is_none() {
        push(
            "category",
            format!("category {:?} is not one of the 16 scene classes", record.category),
        );
    }
    if let Some(p) = record.location {
        if !(-90.0..=90.0).contains(&p.latitude) {
            push("location", format!("latitude {} out of range [-90, 90]", p.latitude));
        }
        if !(-180.0..=180.0).contains(&p.longitude) {
            push(
                "location",
                format!("longitude {} out of range [-180, 180]", p.longitude),
            );
        }
    }
    for (name, var) in &record.rs_fields {
        let Some(spec) = schema::rs_field(name) else {
            push("rs_fields", format!("unknown remote-sensing variable {name:?}"));
            continue;
        };
        if !spec.allows(var.temporal_resolution) {
            push(
                "rs_fields",
                format!("{name} is not available at {} resolution", var.temporal_resolution),
            );
        }
        if let RsValue::Number(v) = var.value {
            if !v.is_finite() {
                push("rs_fields", format!("{name} has non-finite value"));
            }
        }
    }

    ValidationReport {
        record_id: record.record_id.clone(),
        violations,
    }
}
