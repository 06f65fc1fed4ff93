use serde::{Deserialize, Serialize};

use super::ContextError;
use crate::knowledge::KnowledgeDocument;
use crate::metrics::{token_count, token_spans};

pub const DEFAULT_CHUNK_BUDGET: usize = 256;
pub const MIN_CHUNK_BUDGET: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextChunk {
    pub record_id: String,
    pub chunk_index: usize,
    pub field_names: Vec<String>,
    pub text: String,
    pub token_count: usize,
}

impl TextChunk {
    pub fn entry_id(&self) -> String {
        chunk_entry_id(&self.record_id, self.chunk_index)
    }
}

pub fn chunk_entry_id(record_id: &str, chunk_index: usize) -> String {
    format!("{record_id}#c{chunk_index}")
}

/// Splits `text` into consecutive byte ranges that cover it exactly. A
/// segment ends after a newline, or after `.`, `!` or `?` plus the
/// whitespace that follows.
pub fn sentence_segments(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let end = if c == '\n' {
            Some(i + 1)
        } else if matches!(c, '.' | '!' | '?') && chars.peek().is_some_and(|&(_, n)| n.is_whitespace()) {
            let mut end = i + 1;
            while let Some(&(j, n)) = chars.peek() {
                if !n.is_whitespace() {
                    break;
                }
                end = j + n.len_utf8();
                chars.next();
                if n == '\n' {
                    break;
                }
            }
            Some(end)
        } else {
            None
        };
        if let Some(end) = end {
            out.push((start, end));
            start = end;
        }
    }
    if start < text.len() {
        out.push((start, text.len()));
    }
    out
}

struct Builder<'a> {
    text: &'a str,
    record_id: &'a str,
    budget: usize,
    chunks: Vec<TextChunk>,
    // pending whole sections
    start: usize,
    end: usize,
    tokens: usize,
    fields: Vec<String>,
}

impl Builder<'_> {
    fn emit(&mut self, start: usize, end: usize, fields: Vec<String>) {
        let text = &self.text[start..end];
        self.chunks.push(TextChunk {
            record_id: self.record_id.to_string(),
            chunk_index: self.chunks.len(),
            field_names: fields,
            text: text.to_string(),
            token_count: token_count(text),
        });
    }

    fn flush(&mut self) {
        if self.end > self.start {
            let fields = std::mem::take(&mut self.fields);
            self.emit(self.start, self.end, fields);
        }
        self.start = self.end;
        self.tokens = 0;
    }

    fn add_section(&mut self, field: &str, start: usize, end: usize) {
        let tokens = token_count(&self.text[start..end]);
        if tokens <= self.budget {
            if self.tokens + tokens > self.budget {
                self.flush();
            }
            if self.end == self.start {
                self.start = start;
            }
            self.end = end;
            self.tokens += tokens;
            self.fields.push(field.to_string());
            return;
        }
        self.flush();
        self.split_oversized(field, start, end);
        self.start = end;
        self.end = end;
    }

    /// Packs sentences of one field under the budget, hard-splitting any
    /// sentence that alone exceeds it.
    fn split_oversized(&mut self, field: &str, start: usize, end: usize) {
        let mut pieces: Vec<(usize, usize)> = Vec::new();
        let (mut acc_start, mut acc_end, mut acc_tokens) = (start, start, 0);
        for (s, e) in sentence_segments(&self.text[start..end]) {
            let (s, e) = (start + s, start + e);
            let t = token_count(&self.text[s..e]);
            if acc_tokens + t > self.budget && acc_end > acc_start {
                pieces.push((acc_start, acc_end));
                acc_start = acc_end;
                acc_tokens = 0;
            }
            if t > self.budget {
                let mut piece_start = s;
                for (n, (ts, _)) in token_spans(&self.text[s..e]).enumerate() {
                    if n > 0 && n % self.budget == 0 {
                        pieces.push((piece_start, s + ts));
                        piece_start = s + ts;
                    }
                }
                pieces.push((piece_start, e));
                acc_start = e;
                acc_end = e;
                acc_tokens = 0;
            } else {
                acc_end = e;
                acc_tokens += t;
            }
        }
        if acc_end > acc_start {
            pieces.push((acc_start, acc_end));
        }
        for (s, e) in pieces {
            self.emit(s, e, vec![field.to_string()]);
        }
    }
}

/// Field-aligned chunks whose texts, concatenated in order, equal
/// `doc.text()` byte for byte. Each chunk holds whole fields unless a field
/// alone exceeds `budget` tokens.
pub fn chunk_document(doc: &KnowledgeDocument, budget: usize) -> Result<Vec<TextChunk>, ContextError> {
    if budget < MIN_CHUNK_BUDGET {
        return Err(ContextError::BudgetTooSmall(budget));
    }
    let text = doc.text();
    let mut b = Builder {
        text: &text,
        record_id: &doc.record_id,
        budget,
        chunks: Vec::new(),
        start: 0,
        end: 0,
        tokens: 0,
        fields: Vec::new(),
    };
    let mut pos = 0;
    let last = doc.sections.len().saturating_sub(1);
    for (i, section) in doc.sections.iter().enumerate() {
        let sep = if i < last { KnowledgeDocument::SEPARATOR.len() } else { 0 };
        let end = pos + section.text.len() + sep;
        b.add_section(&section.field, pos, end);
        pos = end;
    }
    b.flush();
    Ok(b.chunks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::DocumentSection;
    use proptest::prelude::*;

    fn doc(sections: &[(&str, String)]) -> KnowledgeDocument {
        KnowledgeDocument {
            record_id: "R1".into(),
            sections: sections
                .iter()
                .map(|(f, t)| DocumentSection {
                    field: f.to_string(),
                    text: t.clone(),
                })
                .collect(),
        }
    }

    fn concat(chunks: &[TextChunk]) -> String {
        chunks.iter().map(|c| c.text.as_str()).collect()
    }

    #[test]
    fn short_fields_share_one_chunk() {
        let d = doc(&[
            ("name", "Name: Eiffel Tower".into()),
            ("category", "Category: Tower".into()),
            ("area", "Area: Paris".into()),
        ]);
        let chunks = chunk_document(&d, 256).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].field_names, ["name", "category", "area"]);
        assert_eq!(chunks[0].text, d.text());
        assert_eq!(chunks[0].entry_id(), "R1#c0");
    }

    #[test]
    fn long_field_is_split_under_budget() {
        let sentence = "The old harbour wall was rebuilt after the great storm of the century.";
        let body: Vec<&str> = std::iter::repeat_n(sentence, 50).collect();
        let text = format!("Historical Background: {}", body.join(" "));
        assert!(token_count(&text) >= 600);
        let d = doc(&[("name", "Name: Pier".into()), ("historical_background", text.clone())]);
        let chunks = chunk_document(&d, 256).unwrap();
        assert!(chunks.len() >= 4, "{}", chunks.len());
        assert!(chunks.iter().all(|c| c.token_count <= 256));
        assert_eq!(concat(&chunks), d.text());
        let field: String = chunks.iter().filter(|c| c.field_names == ["historical_background"]).map(|c| c.text.as_str()).collect();
        assert_eq!(field, text);
    }

    #[test]
    fn sentence_free_field_is_hard_split() {
        let text = format!("Details: {}", vec!["word"; 100].join(" "));
        let d = doc(&[("details", text)]);
        let chunks = chunk_document(&d, 32).unwrap();
        assert_eq!(chunks.iter().map(|c| c.token_count).collect::<Vec<_>>(), [32, 32, 32, 5]);
        assert_eq!(concat(&chunks), d.text());
    }

    #[test]
    fn empty_document_and_small_budget() {
        assert!(chunk_document(&doc(&[]), 256).unwrap().is_empty());
        assert!(matches!(chunk_document(&doc(&[]), 31), Err(ContextError::BudgetTooSmall(31))));
    }

    #[test]
    fn segments_cover_text() {
        let t = "One. Two!  Three?\nFour\nfive. ";
        let segs = sentence_segments(t);
        let parts: Vec<&str> = segs.iter().map(|&(s, e)| &t[s..e]).collect();
        assert_eq!(parts, ["One. ", "Two!  ", "Three?\n", "Four\n", "five. "]);
        assert!(sentence_segments("").is_empty());
        assert_eq!(sentence_segments("3.5 km"), [(0, 6)]);
    }

    proptest! {
        #[test]
        fn chunks_reconstruct_document(
            fields in prop::collection::vec(prop::collection::vec("[a-z]{1,8}[.!?]?", 1..120), 0..8),
            budget in 32usize..80,
        ) {
            let sections: Vec<(&str, String)> = fields.iter().enumerate().map(|(i, w)| (["a", "b", "c", "d", "e", "f", "g", "h"][i], w.join(" "))).collect();
            let d = doc(&sections);
            let chunks = chunk_document(&d, budget).unwrap();
            prop_assert_eq!(concat(&chunks), d.text());
            for (i, c) in chunks.iter().enumerate() {
                prop_assert!(c.token_count <= budget);
                prop_assert_eq!(c.chunk_index, i);
                prop_assert!(!c.field_names.is_empty());
            }
            prop_assert_eq!(chunk_document(&d, budget).unwrap(), chunks);
        }
    }
}
