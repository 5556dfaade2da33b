//! Mapping dotted module paths onto repository files.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{ImportRef, Repo, SourceFile};
use crate::Language;

fn parent_dir(path: &str) -> &str {
    path.rsplit_once('/').map_or("", |(dir, _)| dir)
}

fn join(dir: &str, rest: &str) -> String {
    match (dir.is_empty(), rest.is_empty()) {
        (true, _) => String::from(rest),
        (false, true) => String::from(dir),
        (false, false) => format!("{dir}/{rest}"),
    }
}

/// Directory names conventionally used as source roots.
const SOURCE_ROOTS: &[&str] = &["src", "lib", "source", "python", "src/main/java", "src/test/java", "main/java"];

fn is_root(prefix: &str, root: &str) -> bool {
    prefix == root || prefix.strip_suffix(root).is_some_and(|p| p.ends_with('/'))
}

/// Relative paths a module may live at, most specific first.
fn candidate_paths(module: &str, importer: &str, language: Language) -> (Vec<String>, bool) {
    match language {
        Language::Python if module.starts_with('.') => {
            let dots = module.chars().take_while(|&c| c == '.').count();
            let mut dir = parent_dir(importer);
            for _ in 1..dots {
                dir = parent_dir(dir);
            }
            let rest = module[dots..].replace('.', "/");
            let base = join(dir, &rest);
            let mut out = Vec::new();
            if !rest.is_empty() {
                out.push(format!("{base}.py"));
            }
            out.push(join(&base, "__init__.py"));
            // Relative imports are anchored; no source-root search.
            (out, false)
        }
        Language::Python => {
            let base = module.replace('.', "/");
            (alloc::vec![format!("{base}.py"), format!("{base}/__init__.py")], true)
        }
        Language::Java => (alloc::vec![format!("{}.java", module.replace('.', "/"))], true),
    }
}

/// Repository file defining `module` as imported from `importer`.
///
/// Dots become path separators and both `m.py` and `m/__init__.py` are
/// tried. Absolute modules may also live below a source root (`src/`,
/// `src/main/java/`, ...), optionally nested in a sub-project directory;
/// the shortest such path wins.
pub fn resolve_module<'r>(module: &str, importer: &str, language: Language, repo: &'r Repo) -> Option<&'r SourceFile> {
    if module.is_empty() {
        return None;
    }
    let (candidates, allow_roots) = candidate_paths(module, importer, language);
    for candidate in &candidates {
        if let Some(file) = repo.get(candidate) {
            return Some(file);
        }
    }
    if !allow_roots {
        return None;
    }
    for candidate in &candidates {
        let suffix = format!("/{candidate}");
        let hit = repo
            .files()
            .iter()
            .filter(|f| {
                f.path
                    .strip_suffix(&suffix)
                    .is_some_and(|prefix| SOURCE_ROOTS.iter().any(|root| is_root(prefix, root)))
            })
            .min_by(|a, b| a.path.len().cmp(&b.path.len()).then_with(|| a.path.cmp(&b.path)));
        if hit.is_some() {
            return hit;
        }
    }
    None
}

/// Keeps only imports whose module resolves inside the repository and is
/// not part of the standard library. Anything else is third-party.
pub fn filter_intra_repo(imports: &[ImportRef], repo: &Repo, importer: &str, language: Language) -> Vec<ImportRef> {
    imports
        .iter()
        .filter(|i| !language.is_stdlib(&i.module))
        .filter(|i| resolve_module(&i.module, importer, language, repo).is_some_and(|f| f.path != importer))
        .cloned()
        .collect()
}
