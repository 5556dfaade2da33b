//! Loading repositories from disk.

use std::collections::BTreeSet;
use std::path::Path;

use align_retrieve_core::corpus::{Repo, SourceFile};
use align_retrieve_core::{Diagnostics, Language};
use walkdir::WalkDir;

use crate::error::{AppError, AppResult};

const SKIPPED_DIRS: &[&str] = &["node_modules", "target", "build", "dist", "venv", "__pycache__"];

fn skipped(name: &str) -> bool {
    (name.starts_with('.') && name.len() > 1) || SKIPPED_DIRS.contains(&name)
}

/// Python and Java sources under `root`, keyed by `/`-separated relative
/// path. Hidden and build directories are skipped; non-UTF-8 files are
/// reported and left out.
pub fn load_repo(root: &Path, diags: &mut Diagnostics) -> AppResult<Repo> {
    let meta = std::fs::metadata(root).map_err(|e| AppError::io(root, e))?;
    if !meta.is_dir() {
        return Err(AppError::io(root, std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory")));
    }
    let mut files = Vec::new();
    let walker = WalkDir::new(root).sort_by_file_name().into_iter().filter_entry(|e| {
        e.depth() == 0 || !e.file_type().is_dir() || !skipped(&e.file_name().to_string_lossy())
    });
    for entry in walker {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            AppError::io(path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).expect("walk stays under root");
        let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        if Language::from_path(&rel).is_none() {
            continue;
        }
        match std::fs::read(entry.path()) {
            Ok(bytes) => match String::from_utf8(bytes) {
                Ok(content) => files.push(SourceFile::new(rel, content)),
                Err(_) => diags.warn(format!("{rel}: not UTF-8, skipped")),
            },
            Err(e) => return Err(AppError::io(entry.path(), e)),
        }
    }
    Ok(Repo::new(files))
}

/// Repository ids listed one per line; `#` starts a comment.
pub fn read_exclusions(path: &Path) -> AppResult<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}
