use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Snippet;
use crate::retrieval::token_spans;
use crate::{Error, Language, Result};

/// The unfinished code is never cut below this many trailing lines.
pub const TAIL_KEEP_LINES: usize = 50;

const HEADER: &str = "file: ";

/// Rough model-token count: sub-word runs plus punctuation characters.
pub fn estimate_tokens(text: &str) -> usize {
    let punct = text.chars().filter(|c| !c.is_whitespace() && !c.is_alphanumeric()).count();
    token_spans(text).len() + punct
}

fn render_block(out: &mut String, path: &str, text: &str, comment: &str) {
    out.push_str(&format!("{comment} {HEADER}{path}\n"));
    for line in text.lines() {
        out.push_str(comment);
        out.push(' ');
        out.push_str(line);
        out.push('\n');
    }
    out.push('\n');
}

/// Context snippets as comment blocks headed by their origin path, followed
/// by the code:
///
/// ```text
/// # file: utils/helpers.py
/// # class Validator:
/// #     def check(self, value):
///
/// <code>
/// ```
pub fn render_prompt(blocks: &[(&str, &str)], code: &str, language: Language) -> String {
    let mut out = String::new();
    for (path, text) in blocks {
        render_block(&mut out, path, text, language.comment_prefix());
    }
    out.push_str(code);
    out
}

/// A prompt split back into its context blocks and code.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedPrompt {
    pub blocks: Vec<(String, Vec<String>)>,
    pub code: String,
}

impl ParsedPrompt {
    pub fn snippet_lines(&self) -> impl Iterator<Item = &str> {
        self.blocks.iter().flat_map(|(_, lines)| lines.iter().map(String::as_str))
    }
}

fn header_of(line: &str) -> Option<(&'static str, &str)> {
    ["#", "//"].into_iter().find_map(|c| {
        line.strip_prefix(c)
            .and_then(|rest| rest.strip_prefix(' '))
            .and_then(|rest| rest.strip_prefix(HEADER))
            .map(|path| (c, path))
    })
}

/// Inverse of [`render_prompt`]. Parsing stops at the first line that does
/// not start a context block; everything from there on is code.
pub fn split_prompt(prompt: &str) -> ParsedPrompt {
    let mut parsed = ParsedPrompt::default();
    let mut offset = 0;
    let mut lines = prompt.split_inclusive('\n').peekable();
    while let Some(&first) = lines.peek() {
        let Some((comment, path)) = header_of(first.trim_end_matches(['\n', '\r'])) else { break };
        let prefix = format!("{comment} ");
        lines.next();
        offset += first.len();
        let mut body = Vec::new();
        while let Some(&line) = lines.peek() {
            lines.next();
            offset += line.len();
            let bare = line.trim_end_matches(['\n', '\r']);
            if bare.is_empty() {
                break;
            }
            body.push(bare.strip_prefix(&prefix).unwrap_or(bare).to_string());
        }
        parsed.blocks.push((path.to_string(), body));
    }
    parsed.code = prompt[offset..].to_string();
    parsed
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionPrompt {
    /// Included snippet texts, in the order they appear.
    pub context_snippets: Vec<String>,
    /// Ids of the included snippets.
    pub context_ids: Vec<String>,
    /// The (possibly head-truncated) unfinished code placed after the snippets.
    pub unfinished_code: String,
    pub rendered: String,
    pub token_budget: usize,
}

/// Prompt of context snippets followed by the unfinished code, within
/// `token_budget` estimated tokens.
///
/// The last [`TAIL_KEEP_LINES`] lines of the code are reserved first. Snippets
/// are then added in the given (descending score) order until the next one
/// does not fit, and any budget left over restores earlier code lines.
pub fn build_prompt(
    snippets: &[&Snippet],
    unfinished_code: &str,
    token_budget: usize,
    language: Language,
) -> Result<CompletionPrompt> {
    let lines: Vec<&str> = unfinished_code.split('\n').collect();
    let mut head = lines.len().saturating_sub(TAIL_KEEP_LINES);
    let tail_cost = estimate_tokens(&lines[head..].join("\n"));
    if tail_cost > token_budget {
        return Err(Error::InvalidConfig(format!(
            "token budget {token_budget} cannot hold the last {TAIL_KEEP_LINES} lines of unfinished code ({tail_cost} tokens)"
        )));
    }
    let mut remaining = token_budget - tail_cost;

    let comment = language.comment_prefix();
    let mut included: Vec<&Snippet> = Vec::new();
    for snippet in snippets {
        let mut block = String::new();
        render_block(&mut block, &snippet.origin_path, &snippet.text, comment);
        let cost = estimate_tokens(&block);
        if cost > remaining {
            break;
        }
        remaining -= cost;
        included.push(snippet);
    }

    while head > 0 {
        let cost = estimate_tokens(lines[head - 1]);
        if cost > remaining {
            break;
        }
        remaining -= cost;
        head -= 1;
    }

    let code = lines[head..].join("\n");
    let blocks: Vec<(&str, &str)> = included.iter().map(|s| (s.origin_path.as_str(), s.text.as_str())).collect();
    Ok(CompletionPrompt {
        context_snippets: included.iter().map(|s| s.text.clone()).collect(),
        context_ids: included.iter().map(|s| s.id.clone()).collect(),
        rendered: render_prompt(&blocks, &code, language),
        unfinished_code: code,
        token_budget,
    })
}
