use serde::{Deserialize, Serialize};

use super::FusedContext;
use crate::knowledge::TaskKind;

pub const PROMPT_SEPARATOR: &str = "\n";
pub const KNOWLEDGE_HEADER: &str = "Retrieved context:";

const CAPTION_INSTRUCTION: &str = "Describe this satellite image using the retrieved knowledge:";
const CLASSIFY_INSTRUCTION: &str = "Classify this scene into one of the 16 categories using the retrieved knowledge:";
const VQA_INSTRUCTION: &str = "Answer the following question based on the retrieved knowledge:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prompt {
    pub instruction: String,
    pub query_text: String,
    pub knowledge_header: String,
    pub context: String,
    pub rendered: String,
}

/// Per-task instruction, header and default fusion weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPreset {
    pub instruction: String,
    pub knowledge_header: String,
    pub alpha: f64,
}

impl TaskPreset {
    pub fn for_task(task: TaskKind) -> Self {
        let (instruction, alpha) = match task {
            TaskKind::Captioning => (CAPTION_INSTRUCTION, 0.9),
            TaskKind::Classification => (CLASSIFY_INSTRUCTION, 0.5),
            TaskKind::VqaC | TaskKind::VqaRsk | TaskKind::VqaWk => (VQA_INSTRUCTION, 0.9),
        };
        TaskPreset {
            instruction: instruction.into(),
            knowledge_header: KNOWLEDGE_HEADER.into(),
            alpha,
        }
    }
}

/// `instruction`, query, header and context joined by [`PROMPT_SEPARATOR`].
pub fn build_prompt(instruction: &str, query_text: &str, knowledge_header: &str, context: &FusedContext) -> Prompt {
    let rendered = [instruction, query_text, knowledge_header, context.text.as_str()].join(PROMPT_SEPARATOR);
    Prompt {
        instruction: instruction.into(),
        query_text: query_text.into(),
        knowledge_header: knowledge_header.into(),
        context: context.text.clone(),
        rendered,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::FusionMode;

    fn ctx(text: &str) -> FusedContext {
        FusedContext {
            text: text.into(),
            source_records: vec![],
            fusion_mode: FusionMode::Deterministic,
        }
    }

    #[test]
    fn vqa_prompt_contains_parts_in_order() {
        let p = build_prompt(VQA_INSTRUCTION, "Q", KNOWLEDGE_HEADER, &ctx("K"));
        let r = &p.rendered;
        let (a, b, c, d) = (
            r.find(VQA_INSTRUCTION).unwrap(),
            r.find("\nQ\n").unwrap() + 1,
            r.find(KNOWLEDGE_HEADER).unwrap(),
            r.rfind('K').unwrap(),
        );
        assert!(a < b && b < c && c < d);
        assert_eq!(r, "Answer the following question based on the retrieved knowledge:\nQ\nRetrieved context:\nK");
    }

    #[test]
    fn empty_query_text_keeps_order() {
        let p = build_prompt(CAPTION_INSTRUCTION, "", KNOWLEDGE_HEADER, &ctx("facts"));
        let r = &p.rendered;
        assert!(r.find(CAPTION_INSTRUCTION).unwrap() < r.find(KNOWLEDGE_HEADER).unwrap());
        assert!(r.ends_with("Retrieved context:\nfacts"));
        assert_eq!(p.context, "facts");
    }

    #[test]
    fn presets() {
        assert_eq!(TaskPreset::for_task(TaskKind::Classification).alpha, 0.5);
        assert_eq!(TaskPreset::for_task(TaskKind::VqaWk).instruction, VQA_INSTRUCTION);
        assert_eq!(TaskPreset::for_task(TaskKind::Captioning).alpha, 0.9);
    }
}
