//! Tree-sitter implementation of the corpus parser interface.

use align_retrieve_core::corpus::{CodeParser, DependencyInfo, ImportKind, ImportRef, NestedClass, SourceFile};
use align_retrieve_core::{Diagnostics, Language};
use tree_sitter::{Node, Parser, Tree};

/// Parses Python and Java sources with tree-sitter. Stateless: a fresh
/// parser is created per call, so one value can be shared across threads.
#[derive(Debug, Clone, Copy, Default)]
pub struct TreeSitterParser;

fn parse(source: &str, language: Language) -> Option<Tree> {
    let grammar: tree_sitter::Language = match language {
        Language::Python => tree_sitter_python::LANGUAGE.into(),
        Language::Java => tree_sitter_java::LANGUAGE.into(),
    };
    let mut parser = Parser::new();
    parser.set_language(&grammar).ok()?;
    parser.parse(source, None)
}

fn text<'a>(node: Node<'_>, source: &'a str) -> &'a str {
    &source[node.byte_range()]
}

fn compact(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn named_children<'t>(node: Node<'t>) -> Vec<Node<'t>> {
    let mut cursor = node.walk();
    node.named_children(&mut cursor).collect()
}

fn children<'t>(node: Node<'t>) -> Vec<Node<'t>> {
    let mut cursor = node.walk();
    node.children(&mut cursor).collect()
}

fn python_imports(node: Node<'_>, source: &str, out: &mut Vec<ImportRef>) {
    match node.kind() {
        "import_statement" => {
            for name in named_children(node) {
                let (module, alias) = match name.kind() {
                    "aliased_import" => (
                        name.child_by_field_name("name").map(|n| compact(text(n, source))),
                        name.child_by_field_name("alias").map(|n| text(n, source).to_string()),
                    ),
                    "dotted_name" => (Some(compact(text(name, source))), None),
                    _ => (None, None),
                };
                if let Some(module) = module {
                    let mut import = ImportRef::new(module, "", alias);
                    import.kind = ImportKind::Module;
                    out.push(import);
                }
            }
        }
        "import_from_statement" => {
            let Some(module_node) = node.child_by_field_name("module_name") else { return };
            let module = compact(text(module_node, source));
            for child in named_children(node) {
                if child.id() == module_node.id() {
                    continue;
                }
                match child.kind() {
                    "wildcard_import" => {
                        let mut import = ImportRef::new(module.clone(), "*", None);
                        import.kind = ImportKind::Module;
                        out.push(import);
                    }
                    "dotted_name" => out.push(ImportRef::new(module.clone(), compact(text(child, source)), None)),
                    "aliased_import" => {
                        let Some(name) = child.child_by_field_name("name") else { continue };
                        let alias = child.child_by_field_name("alias").map(|n| text(n, source).to_string());
                        out.push(ImportRef::new(module.clone(), compact(text(name, source)), alias));
                    }
                    _ => {}
                }
            }
        }
        _ => {}
    }
}

fn java_import(node: Node<'_>, source: &str) -> Option<ImportRef> {
    let mut is_static = false;
    let mut wildcard = false;
    let mut path = None;
    for child in children(node) {
        match child.kind() {
            "static" => is_static = true,
            "asterisk" => wildcard = true,
            "scoped_identifier" | "identifier" => path = Some(compact(text(child, source))),
            _ => {}
        }
    }
    let path = path?;
    if wildcard {
        let mut import = ImportRef::new(path, "*", None);
        import.kind = ImportKind::Module;
        return Some(import);
    }
    let (prefix, last) = path.rsplit_once('.').unwrap_or(("", &path));
    let mut import = if is_static {
        // `import static a.b.C.member;` names a member of class `a.b.C`.
        ImportRef::new(prefix, last, None)
    } else {
        ImportRef::new(path.clone(), last, None)
    };
    import.kind = if is_static { ImportKind::Method } else { ImportKind::Class };
    Some(import)
}

/// Python header text up to and including the `:` that opens the body.
fn python_header(node: Node<'_>, source: &str) -> String {
    let body_start = node.child_by_field_name("body").map_or(node.end_byte(), |b| b.start_byte());
    let end = children(node)
        .into_iter()
        .filter(|c| c.kind() == ":" && c.end_byte() <= body_start)
        .map(|c| c.end_byte())
        .next_back()
        .unwrap_or(body_start);
    normalize(&source[node.start_byte()..end])
}

fn unwrap_decorated(node: Node<'_>) -> Node<'_> {
    if node.kind() == "decorated_definition" {
        node.child_by_field_name("definition").unwrap_or(node)
    } else {
        node
    }
}

fn python_name<'a>(node: Node<'_>, source: &'a str) -> Option<&'a str> {
    node.child_by_field_name("name").map(|n| text(n, source))
}

fn python_body_members(node: Node<'_>) -> Vec<Node<'_>> {
    node.child_by_field_name("body").map(named_children).unwrap_or_default().into_iter().map(unwrap_decorated).collect()
}

fn python_methods(class: Node<'_>, source: &str) -> Vec<String> {
    python_body_members(class)
        .into_iter()
        .filter(|m| m.kind() == "function_definition")
        .map(|m| python_header(m, source))
        .collect()
}

fn python_class(class: Node<'_>, source: &str) -> DependencyInfo {
    let nested = python_body_members(class)
        .into_iter()
        .filter(|m| m.kind() == "class_definition")
        .map(|c| NestedClass { signature: python_header(c, source), methods: python_methods(c, source) })
        .collect();
    DependencyInfo::Class { signature: python_header(class, source), methods: python_methods(class, source), nested }
}

fn python_entity(root: Node<'_>, source: &str, name: &str) -> Option<DependencyInfo> {
    let top: Vec<Node<'_>> = named_children(root).into_iter().map(unwrap_decorated).collect();
    for node in &top {
        if python_name(*node, source) != Some(name) {
            continue;
        }
        match node.kind() {
            "class_definition" => return Some(python_class(*node, source)),
            "function_definition" => return Some(DependencyInfo::Function { signature: python_header(*node, source) }),
            _ => {}
        }
    }
    let primary = top.iter().find(|n| n.kind() == "class_definition")?;
    python_body_members(*primary)
        .into_iter()
        .find(|m| m.kind() == "function_definition" && python_name(*m, source) == Some(name))
        .map(|m| DependencyInfo::Method { signature: python_header(m, source) })
}

const JAVA_TYPES: &[&str] =
    &["class_declaration", "interface_declaration", "enum_declaration", "record_declaration", "annotation_type_declaration"];
const JAVA_METHODS: &[&str] = &["method_declaration", "constructor_declaration", "compact_constructor_declaration"];

/// Java declaration text before its body, without annotations.
fn java_header(node: Node<'_>, source: &str) -> String {
    let end = node.child_by_field_name("body").map_or(node.end_byte(), |b| b.start_byte());
    let mut skip: Vec<(usize, usize)> = Vec::new();
    for child in children(node) {
        if child.kind() == "modifiers" {
            for m in children(child) {
                if m.kind() == "annotation" || m.kind() == "marker_annotation" {
                    skip.push((m.start_byte(), m.end_byte()));
                }
            }
        }
    }
    let mut out = String::new();
    let mut at = node.start_byte();
    for (s, e) in skip {
        out.push_str(&source[at..s]);
        at = e;
    }
    if at < end {
        out.push_str(&source[at..end]);
    }
    normalize(out.trim_end().trim_end_matches(';'))
}

fn java_members(node: Node<'_>) -> Vec<Node<'_>> {
    node.child_by_field_name("body").map(named_children).unwrap_or_default()
}

fn java_methods(class: Node<'_>, source: &str) -> Vec<String> {
    java_members(class)
        .into_iter()
        .filter(|m| JAVA_METHODS.contains(&m.kind()))
        .map(|m| java_header(m, source))
        .collect()
}

fn java_entity(root: Node<'_>, source: &str, name: &str) -> Option<DependencyInfo> {
    let types: Vec<Node<'_>> = named_children(root).into_iter().filter(|n| JAVA_TYPES.contains(&n.kind())).collect();
    let named = |n: &Node<'_>| n.child_by_field_name("name").map(|x| text(x, source)) == Some(name);
    if let Some(class) = types.iter().find(|n| named(n)) {
        let nested = java_members(*class)
            .into_iter()
            .filter(|m| JAVA_TYPES.contains(&m.kind()))
            .map(|c| NestedClass { signature: java_header(c, source), methods: java_methods(c, source) })
            .collect();
        return Some(DependencyInfo::Class {
            signature: java_header(*class, source),
            methods: java_methods(*class, source),
            nested,
        });
    }
    let primary = types.first()?;
    java_members(*primary)
        .into_iter()
        .find(|m| m.kind() == "method_declaration" && named(m))
        .map(|m| DependencyInfo::Method { signature: java_header(m, source) })
}

impl CodeParser for TreeSitterParser {
    fn extract_imports(&self, file: &SourceFile, language: Language, diags: &mut Diagnostics) -> Vec<ImportRef> {
        let source = file.content.as_str();
        let Some(tree) = parse(source, language) else {
            diags.warn(format!("{}: could not be parsed", file.path));
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut stack = vec![tree.root_node()];
        while let Some(node) = stack.pop() {
            let is_import = matches!(node.kind(), "import_statement" | "import_from_statement" | "import_declaration");
            if is_import {
                if node.has_error() {
                    diags.warn(format!("{}:{}: skipping malformed import", file.path, node.start_position().row + 1));
                    continue;
                }
                match language {
                    Language::Python => python_imports(node, source, &mut out),
                    Language::Java => out.extend(java_import(node, source)),
                }
                continue;
            }
            // Imports only appear at statement level; do not descend into definitions.
            if matches!(node.kind(), "module" | "program" | "ERROR" | "if_statement" | "try_statement" | "block")
                || node.kind().ends_with("_clause")
            {
                let mut kids = named_children(node);
                kids.reverse();
                stack.extend(kids);
            }
        }
        out
    }

    fn find_entity(&self, file: &SourceFile, language: Language, name: &str) -> Option<DependencyInfo> {
        let tree = parse(&file.content, language)?;
        match language {
            Language::Python => python_entity(tree.root_node(), &file.content, name),
            Language::Java => java_entity(tree.root_node(), &file.content, name),
        }
    }
}
