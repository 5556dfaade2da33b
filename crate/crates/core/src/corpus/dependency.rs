use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{normalize_whitespace, resolve_module, CodeParser, DependencyInfo, ImportRef, Repo, Snippet, SnippetKind};
use crate::{Diagnostics, Language};

const INDENT: &str = "    ";

/// All signatures of `info`, whitespace-normalised, in rendering order.
pub fn signature_lines(info: &DependencyInfo) -> Vec<String> {
    render_dependency(info).lines().map(|l| l.trim().to_string()).collect()
}

/// Class signature, then its methods, then each nested class followed by
/// its methods, indented by nesting depth.
pub fn render_dependency(info: &DependencyInfo) -> String {
    let mut lines: Vec<String> = Vec::new();
    match info {
        DependencyInfo::Class { signature, methods, nested } => {
            lines.push(normalize_whitespace(signature));
            lines.extend(methods.iter().map(|m| format!("{INDENT}{}", normalize_whitespace(m))));
            for class in nested {
                lines.push(format!("{INDENT}{}", normalize_whitespace(&class.signature)));
                lines.extend(class.methods.iter().map(|m| format!("{INDENT}{INDENT}{}", normalize_whitespace(m))));
            }
        }
        DependencyInfo::Function { signature } | DependencyInfo::Method { signature } => {
            lines.push(normalize_whitespace(signature));
        }
    }
    lines.join("\n")
}

/// Dependency snippets for intra-repository imports of `importer`.
///
/// Every imported class becomes its own snippet. Signatures of all imported
/// functions and methods are gathered into a single snippet. Whole-module
/// imports contribute nothing; entities that cannot be found are skipped
/// with a warning.
pub fn build_dependency_snippets(
    imports: &[ImportRef],
    repo: &Repo,
    importer: &str,
    language: Language,
    parser: &dyn CodeParser,
    diags: &mut Diagnostics,
) -> Vec<Snippet> {
    let mut snippets = Vec::new();
    let mut seen_classes = BTreeSet::new();
    let mut callables: Vec<String> = Vec::new();
    let mut callable_origin: Option<String> = None;

    for import in imports {
        if import.is_whole_module() {
            continue;
        }
        let Some(file) = resolve_module(&import.module, importer, language, repo) else {
            diags.warn(format!("module {} of {} does not resolve", import.module, import.entity));
            continue;
        };
        let Some(info) = parser.find_entity(file, language, &import.entity) else {
            diags.warn(format!("entity {} not found in {}", import.entity, file.path));
            continue;
        };
        match &info {
            DependencyInfo::Class { .. } => {
                if !seen_classes.insert((file.path.clone(), import.entity.clone())) {
                    continue;
                }
                let text = render_dependency(&info);
                snippets.push(Snippet {
                    id: format!("dep:{}:{}", file.path, import.entity),
                    kind: SnippetKind::Dependency,
                    origin_path: file.path.clone(),
                    span: None,
                    line_count: text.lines().count(),
                    text,
                });
            }
            DependencyInfo::Function { .. } | DependencyInfo::Method { .. } => {
                let line = render_dependency(&info);
                if !callables.contains(&line) {
                    callables.push(line);
                }
                callable_origin.get_or_insert_with(|| file.path.clone());
            }
        }
    }

    if let Some(origin) = callable_origin {
        snippets.push(Snippet {
            id: format!("dep:{importer}:functions"),
            kind: SnippetKind::Dependency,
            origin_path: origin,
            span: None,
            line_count: callables.len(),
            text: callables.join("\n"),
        });
    }
    snippets
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::corpus::{NestedClass, SourceFile};
    use alloc::vec;

    /// Answers lookups from a fixed table instead of parsing.
    pub(crate) struct TableParser {
        pub imports: Vec<ImportRef>,
        pub entities: Vec<(&'static str, &'static str, DependencyInfo)>,
    }

    impl CodeParser for TableParser {
        fn extract_imports(&self, _: &SourceFile, _: Language, _: &mut Diagnostics) -> Vec<ImportRef> {
            self.imports.clone()
        }

        fn find_entity(&self, file: &SourceFile, _: Language, name: &str) -> Option<DependencyInfo> {
            self.entities
                .iter()
                .find(|(path, entity, _)| *path == file.path && *entity == name)
                .map(|(_, _, info)| info.clone())
        }
    }

    fn class_info() -> DependencyInfo {
        DependencyInfo::Class {
            signature: "class Validator:".into(),
            methods: vec!["def check(self, value):".into(), "def reset(self):".into()],
            nested: vec![NestedClass { signature: "class Rule:".into(), methods: vec!["def apply(self, x):".into()] }],
        }
    }

    fn fixture() -> (Repo, TableParser) {
        let repo = Repo::new([
            SourceFile::new("main.py", ""),
            SourceFile::new("utils/helpers.py", ""),
            SourceFile::new("utils/funcs.py", ""),
        ]);
        let parser = TableParser {
            imports: vec![],
            entities: vec![
                ("utils/helpers.py", "Validator", class_info()),
                ("utils/funcs.py", "parse", DependencyInfo::Function { signature: "def parse(text):".into() }),
                (
                    "utils/funcs.py",
                    "dump",
                    DependencyInfo::Function { signature: "def dump(obj,\n         fp):".into() },
                ),
            ],
        };
        (repo, parser)
    }

    #[test]
    fn class_import_renders_all_signatures() {
        let (repo, parser) = fixture();
        let mut diags = Diagnostics::new();
        let imports = vec![ImportRef::new("utils.helpers", "Validator", Some("V".into()))];
        let snippets = build_dependency_snippets(&imports, &repo, "main.py", Language::Python, &parser, &mut diags);
        assert_eq!(snippets.len(), 1);
        assert_eq!(
            snippets[0].text,
            "class Validator:\n    def check(self, value):\n    def reset(self):\n    class Rule:\n        def apply(self, x):"
        );
        assert_eq!(snippets[0].line_count, 5);
        assert_eq!(snippets[0].origin_path, "utils/helpers.py");
        assert!(diags.is_empty());
    }

    #[test]
    fn function_imports_share_one_snippet() {
        let (repo, parser) = fixture();
        let mut diags = Diagnostics::new();
        let imports = vec![ImportRef::new("utils.funcs", "parse", None), ImportRef::new("utils.funcs", "dump", None)];
        let snippets = build_dependency_snippets(&imports, &repo, "main.py", Language::Python, &parser, &mut diags);
        assert_eq!(snippets.len(), 1);
        assert_eq!(snippets[0].text, "def parse(text):\ndef dump(obj, fp):");
    }

    #[test]
    fn missing_entity_warns_once() {
        let (repo, parser) = fixture();
        let mut diags = Diagnostics::new();
        let imports = vec![ImportRef::new("utils.helpers", "Nope", None)];
        let snippets = build_dependency_snippets(&imports, &repo, "main.py", Language::Python, &parser, &mut diags);
        assert!(snippets.is_empty());
        assert_eq!(diags.len(), 1);
    }

    #[test]
    fn duplicate_class_import_yields_one_snippet() {
        let (repo, parser) = fixture();
        let mut diags = Diagnostics::new();
        let imports = vec![
            ImportRef::new("utils.helpers", "Validator", None),
            ImportRef::new("utils.helpers", "Validator", Some("V".into())),
            ImportRef::new("utils.helpers", "", None),
        ];
        let snippets = build_dependency_snippets(&imports, &repo, "main.py", Language::Python, &parser, &mut diags);
        assert_eq!(snippets.len(), 1);
    }

    #[test]
    fn nested_accessors() {
        let info = class_info();
        assert_eq!(info.kind(), crate::corpus::ImportKind::Class);
        assert_eq!(info.nested_class_signatures(), vec!["class Rule:"]);
        assert_eq!(info.nested_method_signatures(), vec!["def apply(self, x):"]);
        assert_eq!(signature_lines(&info).len(), 5);
    }
}
