use serde::{Deserialize, Serialize};

const PYTHON_STDLIB: &str = include_str!("../data/python_stdlib.txt");
const JAVA_STDLIB: &str = include_str!("../data/java_stdlib.txt");

/// Source languages with import and signature support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Python,
    Java,
}

impl Language {
    pub fn from_path(path: &str) -> Option<Self> {
        let ext = path.rsplit_once('.').map(|(_, ext)| ext)?;
        match ext {
            "py" => Some(Language::Python),
            "java" => Some(Language::Java),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Language::Python => "py",
            Language::Java => "java",
        }
    }

    pub fn comment_prefix(self) -> &'static str {
        match self {
            Language::Python => "#",
            Language::Java => "//",
        }
    }

    fn stdlib_entries(self) -> impl Iterator<Item = &'static str> {
        let data = match self {
            Language::Python => PYTHON_STDLIB,
            Language::Java => JAVA_STDLIB,
        };
        data.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
    }

    /// Whether `module` (a dotted path) belongs to the bundled standard library list.
    pub fn is_stdlib(self, module: &str) -> bool {
        if module.starts_with('.') {
            return false;
        }
        match self {
            Language::Python => {
                let top = module.split('.').next().unwrap_or("");
                self.stdlib_entries().any(|e| e == top)
            }
            Language::Java => self.stdlib_entries().any(|prefix| {
                module == prefix
                    || (module.starts_with(prefix) && module.as_bytes().get(prefix.len()) == Some(&b'.'))
            }),
        }
    }
}
