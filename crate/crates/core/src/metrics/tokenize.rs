/// Lowercased alphanumeric runs. Every other character, punctuation and
/// whitespace alike, is a token boundary.
pub type TokenSequence = Vec<String>;

/// The one tokenizer shared by chunking and every metric.
pub fn tokenize(text: &str) -> TokenSequence {
    token_spans(text)
        .map(|(s, e)| text[s..e].to_lowercase())
        .collect()
}

/// Byte spans `[start, end)` of the tokens of `text`.
pub fn token_spans(text: &str) -> impl Iterator<Item = (usize, usize)> + '_ {
    let mut chars = text.char_indices().peekable();
    std::iter::from_fn(move || {
        while let Some(&(_, c)) = chars.peek() {
            if c.is_alphanumeric() {
                break;
            }
            chars.next();
        }
        let (start, _) = *chars.peek()?;
        let mut end = start;
        while let Some(&(i, c)) = chars.peek() {
            if !c.is_alphanumeric() {
                break;
            }
            end = i + c.len_utf8();
            chars.next();
        }
        Some((start, end))
    })
}

pub fn token_count(text: &str) -> usize {
    token_spans(text).count()
}
