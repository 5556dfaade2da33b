use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{LineSpan, MiniBlock, Snippet, SnippetKind, SourceFile};
use crate::{Error, Result};

fn is_blank(line: &str) -> bool {
    line.chars().all(char::is_whitespace)
}

/// Maximal runs of non-blank lines, in file order.
pub fn split_into_miniblocks(file: &SourceFile) -> Vec<MiniBlock> {
    let mut blocks = Vec::new();
    let mut current: Option<MiniBlock> = None;
    for (index, line) in file.lines().enumerate() {
        if is_blank(line) {
            blocks.extend(current.take());
            continue;
        }
        let block = current.get_or_insert_with(|| MiniBlock {
            start_line: index,
            end_line: index,
            lines: Vec::new(),
        });
        block.end_line = index;
        block.lines.push(line.to_string());
    }
    blocks.extend(current);
    blocks
}

struct Pending {
    start: usize,
    end: usize,
    lines: Vec<String>,
}

impl Pending {
    fn into_snippet(self, path: &str) -> Snippet {
        Snippet {
            id: format!("base:{path}:{}-{}", self.start, self.end),
            kind: SnippetKind::Base,
            origin_path: path.to_string(),
            span: Some(LineSpan { start: self.start, end: self.end }),
            text: self.lines.join("\n"),
            line_count: self.lines.len(),
        }
    }
}

/// Greedy left-to-right packing of mini-blocks into snippets of at most
/// `max_lines` lines. A block longer than the limit is cut into consecutive
/// chunks of at most `max_lines` lines first.
pub fn aggregate_blocks(blocks: &[MiniBlock], max_lines: usize, path: &str) -> Result<Vec<Snippet>> {
    if max_lines < 1 {
        return Err(Error::InvalidParameter("max snippet lines must be at least 1".into()));
    }
    let chunks = blocks.iter().flat_map(|block| {
        block.lines.chunks(max_lines).enumerate().map(move |(i, chunk)| {
            let start = block.start_line + i * max_lines;
            (start, start + chunk.len() - 1, chunk)
        })
    });

    let mut snippets = Vec::new();
    let mut pending: Option<Pending> = None;
    for (start, end, lines) in chunks {
        match pending.as_mut() {
            Some(p) if p.lines.len() + lines.len() <= max_lines => {
                p.end = end;
                p.lines.extend(lines.iter().cloned());
            }
            _ => {
                if let Some(done) = pending.take() {
                    snippets.push(done.into_snippet(path));
                }
                pending = Some(Pending { start, end, lines: lines.to_vec() });
            }
        }
    }
    if let Some(done) = pending {
        snippets.push(done.into_snippet(path));
    }
    Ok(snippets)
}

pub fn base_snippets(file: &SourceFile, max_lines: usize) -> Result<Vec<Snippet>> {
    aggregate_blocks(&split_into_miniblocks(file), max_lines, &file.path)
}
