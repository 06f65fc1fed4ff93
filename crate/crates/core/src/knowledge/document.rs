use serde::{Deserialize, Serialize};

use super::schema::{RS_FIELDS, WORLD_FIELDS};
use super::KnowledgeRecord;

/// One rendered line of a knowledge document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentSection {
    /// World-knowledge json key or remote-sensing variable name.
    pub field: String,
    pub text: String,
}

/// Canonical text form of a record. Sections are separated by `\n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeDocument {
    pub record_id: String,
    pub sections: Vec<DocumentSection>,
}

impl KnowledgeDocument {
    pub const SEPARATOR: &'static str = "\n";

    pub fn text(&self) -> String {
        self.sections
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(Self::SEPARATOR)
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }
}

/// Renders world-knowledge fields (canonical order, empty ones skipped) and
/// then remote-sensing variables (canonical order) as
/// `Name: value unit (resolution, source)`.
pub fn render_knowledge_document(record: &KnowledgeRecord) -> KnowledgeDocument {
    let mut sections = Vec::new();
    for (key, title) in WORLD_FIELDS {
        let value = record.world_field(key).unwrap_or_default();
        let value = value.trim();
        if value.is_empty() {
            continue;
        }
        sections.push(DocumentSection {
            field: key.to_string(),
            text: format!("{title}: {value}"),
        });
    }
    for spec in RS_FIELDS.iter() {
        let Some(var) = record.rs_fields.get(spec.name) else {
            continue;
        };
        let unit = var.unit.trim();
        let value_part = if unit.is_empty() || unit.eq_ignore_ascii_case("dimensionless") {
            var.value.to_string()
        } else {
            format!("{} {unit}", var.value)
        };
        let text = if var.source.trim().is_empty() {
            format!("{}: {value_part} ({})", spec.name, var.temporal_resolution)
        } else {
            format!(
                "{}: {value_part} ({}, {})",
                spec.name,
                var.temporal_resolution,
                var.source.trim()
            )
        };
        sections.push(DocumentSection {
            field: spec.name.to_string(),
            text,
        });
    }
    KnowledgeDocument {
        record_id: record.record_id.clone(),
        sections,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{Category, RsValue, RsVariable, TemporalResolution};

    #[test]
    fn only_non_empty_fields_in_canonical_order() {
        let r = KnowledgeRecord::new("R1", "Sydney Opera House", Category::Theater);
        let doc = render_knowledge_document(&r);
        assert_eq!(doc.sections.len(), 2);
        assert_eq!(doc.text(), "Name: Sydney Opera House\nCategory: Theater");
    }

    #[test]
    fn rs_variable_line_format() {
        let mut r = KnowledgeRecord::new("R1", "X", Category::Park);
        r.rs_fields.insert(
            "NDVI".into(),
            RsVariable {
                value: RsValue::Number(0.31),
                unit: String::new(),
                temporal_resolution: TemporalResolution::Annual,
                source: "Landsat 9".into(),
            },
        );
        r.rs_fields.insert(
            "LST_Day_1km".into(),
            RsVariable {
                value: RsValue::Number(21.5),
                unit: "°C".into(),
                temporal_resolution: TemporalResolution::Monthly,
                source: "MODIS (MOD11A1.061)".into(),
            },
        );
        let text = render_knowledge_document(&r).text();
        let lines: Vec<_> = text.lines().collect();
        // canonical order puts LST before NDVI even though the map sorts otherwise
        assert_eq!(lines[2], "LST_Day_1km: 21.5 °C (Monthly, MODIS (MOD11A1.061))");
        assert_eq!(lines[3], "NDVI: 0.31 (Annual, Landsat 9)");
    }

    #[test]
    fn equal_content_renders_identically() {
        let mut a = KnowledgeRecord::new("A", "Same", Category::Bridge);
        a.details = "Spans the river.".into();
        let mut b = a.clone();
        b.record_id = "B".into();
        assert_eq!(
            render_knowledge_document(&a).text(),
            render_knowledge_document(&b).text()
        );
    }
}
