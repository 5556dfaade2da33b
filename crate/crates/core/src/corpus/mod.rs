//! Retrieval codebase construction: base snippets and dependency snippets.

mod codebase;
mod dependency;
mod resolve;
mod split;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Diagnostics, Language};

pub use codebase::{build_codebase, CodebaseConfig, Repo, DEFAULT_MAX_LINES};
pub use dependency::{build_dependency_snippets, render_dependency, signature_lines};
pub use resolve::{filter_intra_repo, resolve_module};
pub use split::{aggregate_blocks, base_snippets, split_into_miniblocks};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    pub content: String,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, content: impl Into<String>) -> Self {
        Self { path: path.into(), content: content.into() }
    }

    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.content.lines()
    }

    pub fn language(&self) -> Option<Language> {
        Language::from_path(&self.path)
    }
}

/// Maximal run of non-blank lines. Line indices are 0-based and inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiniBlock {
    pub start_line: usize,
    pub end_line: usize,
    pub lines: Vec<String>,
}

impl MiniBlock {
    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnippetKind {
    Base,
    Dependency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LineSpan {
    pub start: usize,
    pub end: usize,
}

/// One retrievable unit of the codebase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snippet {
    pub id: String,
    pub kind: SnippetKind,
    pub origin_path: String,
    /// Source line range; only base snippets have one.
    pub span: Option<LineSpan>,
    pub text: String,
    pub line_count: usize,
}

impl Snippet {
    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.text.lines()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportKind {
    Class,
    Method,
    Function,
    Module,
    Unknown,
}

/// One imported entity as written in the source.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ImportRef {
    /// Dotted module path. Python relative imports keep their leading dots.
    pub module: String,
    /// Imported name; empty for whole-module imports, `*` for wildcards.
    pub entity: String,
    pub alias: Option<String>,
    pub kind: ImportKind,
}

impl ImportRef {
    pub fn new(module: impl Into<String>, entity: impl Into<String>, alias: Option<String>) -> Self {
        Self { module: module.into(), entity: entity.into(), alias, kind: ImportKind::Unknown }
    }

    pub fn is_whole_module(&self) -> bool {
        self.entity.is_empty() || self.entity == "*"
    }
}

/// Nested class signature together with its own method signatures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedClass {
    pub signature: String,
    pub methods: Vec<String>,
}

/// Signatures extracted for one imported entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DependencyInfo {
    Class {
        signature: String,
        methods: Vec<String>,
        nested: Vec<NestedClass>,
    },
    Function { signature: String },
    Method { signature: String },
}

impl DependencyInfo {
    pub fn kind(&self) -> ImportKind {
        match self {
            DependencyInfo::Class { .. } => ImportKind::Class,
            DependencyInfo::Function { .. } => ImportKind::Function,
            DependencyInfo::Method { .. } => ImportKind::Method,
        }
    }

    pub fn nested_class_signatures(&self) -> Vec<&str> {
        match self {
            DependencyInfo::Class { nested, .. } => nested.iter().map(|n| n.signature.as_str()).collect(),
            _ => Vec::new(),
        }
    }

    pub fn nested_method_signatures(&self) -> Vec<&str> {
        match self {
            DependencyInfo::Class { nested, .. } => nested
                .iter()
                .flat_map(|n| n.methods.iter().map(String::as_str))
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Syntax-level services the corpus builder needs from a parser backend.
pub trait CodeParser {
    /// Import statements of `file`. Files that cannot be parsed yield an
    /// empty list and a warning, never an error.
    fn extract_imports(&self, file: &SourceFile, language: Language, diags: &mut Diagnostics) -> Vec<ImportRef>;

    /// Signatures of the entity called `name` defined in `file`: a top-level
    /// class or function, or a method of the file's primary class.
    fn find_entity(&self, file: &SourceFile, language: Language, name: &str) -> Option<DependencyInfo>;
}

/// Collapse whitespace runs to a single space and trim.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}
