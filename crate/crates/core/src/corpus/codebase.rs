use alloc::format;
use alloc::vec::Vec;

use super::{base_snippets, build_dependency_snippets, filter_intra_repo, CodeParser, Snippet, SourceFile};
use crate::{Diagnostics, Error, Result};

/// Default maximum number of lines in a base snippet.
pub const DEFAULT_MAX_LINES: usize = 15;

/// Immutable set of repository files, sorted by path.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Repo {
    files: Vec<SourceFile>,
}

impl Repo {
    /// Later files replace earlier ones with the same path.
    pub fn new(files: impl IntoIterator<Item = SourceFile>) -> Self {
        let mut files: Vec<SourceFile> = files.into_iter().collect();
        files.reverse();
        files.sort_by(|a, b| a.path.cmp(&b.path));
        files.dedup_by(|a, b| a.path == b.path);
        Self { files }
    }

    pub fn files(&self) -> &[SourceFile] {
        &self.files
    }

    pub fn get(&self, path: &str) -> Option<&SourceFile> {
        self.files
            .binary_search_by(|f| f.path.as_str().cmp(path))
            .ok()
            .map(|i| &self.files[i])
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodebaseConfig {
    pub max_lines: usize,
    pub include_dependencies: bool,
}

impl Default for CodebaseConfig {
    fn default() -> Self {
        Self { max_lines: DEFAULT_MAX_LINES, include_dependencies: true }
    }
}

/// Retrieval codebase for completing `completion_path`.
///
/// Base snippets come from every other file of the repository. Dependency
/// snippets come from the imports found in `in_file_context` (the visible
/// left context of the completion file; its full content when `None`).
/// Output is sorted by origin path, kind, span and id.
pub fn build_codebase(
    repo: &Repo,
    completion_path: &str,
    in_file_context: Option<&str>,
    config: &CodebaseConfig,
    parser: &dyn CodeParser,
    diags: &mut Diagnostics,
) -> Result<Vec<Snippet>> {
    let completion = repo
        .get(completion_path)
        .ok_or_else(|| Error::InvalidInput(format!("completion file {completion_path} is not in the repository")))?;

    let mut snippets = Vec::new();
    for file in repo.files().iter().filter(|f| f.path != completion_path) {
        snippets.extend(base_snippets(file, config.max_lines)?);
    }

    if config.include_dependencies {
        if let Some(language) = completion.language() {
            let context = SourceFile::new(
                completion_path,
                in_file_context.unwrap_or(&completion.content),
            );
            let imports = parser.extract_imports(&context, language, diags);
            let intra = filter_intra_repo(&imports, repo, completion_path, language);
            snippets.extend(build_dependency_snippets(&intra, repo, completion_path, language, parser, diags));
        }
    }

    snippets.sort_by(|a, b| {
        (&a.origin_path, a.kind, a.span, &a.id).cmp(&(&b.origin_path, b.kind, b.span, &b.id))
    });
    Ok(snippets)
}
