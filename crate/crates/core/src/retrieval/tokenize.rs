use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

/// Byte ranges of the sub-word tokens of `text`.
///
/// Tokens are maximal alphanumeric runs, further split at camelCase
/// boundaries (`getAccept` -> `get`, `Accept`; `HTTPServer` -> `HTTP`,
/// `Server`). Underscores and punctuation separate tokens.
pub fn token_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let mut start = chars[i].0;
        let mut j = i + 1;
        while j < chars.len() && chars[j].1.is_alphanumeric() {
            let prev = chars[j - 1].1;
            let cur = chars[j].1;
            let next = chars.get(j + 1).map(|&(_, c)| c);
            let boundary = cur.is_uppercase()
                && (prev.is_lowercase()
                    || prev.is_numeric()
                    || (prev.is_uppercase() && next.is_some_and(char::is_lowercase)));
            if boundary {
                spans.push(start..chars[j].0);
                start = chars[j].0;
            }
            j += 1;
        }
        let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
        spans.push(start..end);
        i = j;
    }
    spans
}

/// Lowercased sub-word tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|r| text[r].to_lowercase())
        .collect()
}
