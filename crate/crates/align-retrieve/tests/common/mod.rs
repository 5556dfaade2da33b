//! Fixtures shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use align_retrieve::core::corpus::SourceFile;
use align_retrieve::core::eval::BenchmarkTask;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const GENERATOR_PY: &str = "\
import torch
from .util import clamp


class ExLlamaGenerator:
    \"\"\"Token-by-token sampler over a cached model.\"\"\"

    class Settings:
        def __init__(self):
            self.temperature = 0.95
            self.top_k = 20

        def copy(self):
            return ExLlamaGenerator.Settings()

    def __init__(self, model, tokenizer, cache):
        self.model = model
        self.tokenizer = tokenizer
        self.cache = cache
        self.settings = ExLlamaGenerator.Settings()

    @torch.no_grad()
    def gen_begin(self, in_tokens, mask = None):
        self.sequence = in_tokens.clone()
        self.cache.current_seq_len = 0
        return self.sequence

    def get_accept_token(self, logits,
                         temperature = 1.0):
        logits = logits / clamp(temperature, 0.01, 10.0)
        return logits.argmax(dim = -1)

    def gen_feed_tokens(self, in_tokens):
        self.sequence = torch.cat((self.sequence, in_tokens), dim = 1)


def make_generator(model, tokenizer, cache):
    return ExLlamaGenerator(model, tokenizer, cache)
";

pub const UTIL_PY: &str = "\
def clamp(value, lo, hi):
    return max(lo, min(hi, value))
";

pub const EXAMPLE_CFG_PY: &str = "\
from pkg.generator import ExLlamaGenerator
import pkg.util


def run(model, tokenizer, cache, logits):
    generator = ExLlamaGenerator(model, tokenizer, cache)
    generator.gen_begin(tokenizer.encode(\"hello\"))
    token = generator.get_accept_token(
";

/// Signatures a reader lists by hand for the imported generator class.
pub const GENERATOR_SIGNATURES: &[&str] = &[
    "class ExLlamaGenerator:",
    "def __init__(self, model, tokenizer, cache):",
    "def gen_begin(self, in_tokens, mask = None):",
    "def get_accept_token(self, logits, temperature = 1.0):",
    "def gen_feed_tokens(self, in_tokens):",
    "class Settings:",
    "def __init__(self):",
    "def copy(self):",
];

/// Small Python repository with a class imported across files.
pub fn generator_repo() -> Vec<SourceFile> {
    vec![
        SourceFile::new("pkg/__init__.py", ""),
        SourceFile::new("pkg/generator.py", GENERATOR_PY),
        SourceFile::new("pkg/util.py", UTIL_PY),
        SourceFile::new("example_cfg.py", EXAMPLE_CFG_PY),
    ]
}

pub fn write_files(root: &std::path::Path, files: &[SourceFile]) {
    for f in files {
        let path = root.join(&f.path);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, &f.content).unwrap();
    }
}

const WORDS: &[&str] = &[
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliet", "kilo", "lima",
    "mike", "november", "oscar", "papa", "quebec", "romeo", "sierra", "tango", "uniform", "victor", "whiskey",
    "xray", "yankee", "zulu", "amber", "basalt", "cobalt", "dune", "ember", "fjord", "granite", "harbor", "iris",
    "jasper", "kelp", "lagoon", "marble", "nectar", "onyx", "pebble", "quartz", "reef", "slate", "tundra",
    "umber", "velvet", "willow", "yarrow", "zephyr", "acorn", "birch", "cedar", "daisy", "elm", "fern", "gorse",
    "hazel", "ivy", "juniper", "kale", "laurel", "maple", "nettle", "oak", "poplar", "rowan", "sorrel", "thyme",
];

fn word(i: usize) -> &'static str {
    WORDS[i % WORDS.len()]
}

/// `count` files of random code lines with random blank-line gaps, some
/// blocks much longer than a snippet and some whitespace-only separators.
pub fn random_repo(count: usize, seed: u64) -> Vec<SourceFile> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|f| {
            let mut lines: Vec<String> = Vec::new();
            let blocks = rng.random_range(1..12);
            for _ in 0..blocks {
                let len = if rng.random_bool(0.15) { rng.random_range(16..60) } else { rng.random_range(1..14) };
                for _ in 0..len {
                    let indent = "    ".repeat(rng.random_range(0..3));
                    let a = word(rng.random_range(0..WORDS.len()));
                    let b = word(rng.random_range(0..WORDS.len()));
                    lines.push(format!("{indent}{a} = {b}({})", rng.random_range(0..100)));
                }
                for _ in 0..rng.random_range(1..4) {
                    lines.push(if rng.random_bool(0.3) { "   \t".to_string() } else { String::new() });
                }
            }
            let ext = if f % 5 == 0 { "java" } else { "py" };
            SourceFile::new(format!("src/m{f:02}/file{f:02}.{ext}"), lines.join("\n"))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskType {
    /// The answer line only appears once candidate completions pull its
    /// snippet into fine retrieval.
    QueryDependent,
    /// The answer line only appears, in this exact form, in a dependency
    /// snippet.
    DependencyDependent,
    /// The answer is in an ordinary cross-file snippet.
    Plain,
}

pub struct AblationTask {
    pub kind: TaskType,
    pub task: BenchmarkTask,
}

fn query_task(i: usize) -> BenchmarkTask {
    let a: Vec<&str> = (0..24).map(|j| word(i + j)).collect();
    let b: Vec<&str> = (24..30).map(|j| word(i + j)).collect();
    let (r1, r2) = (word(i + 30), word(i + 31));
    let mut files = Vec::new();
    for d in 0..16 {
        let x = |k: usize| a[(3 * d + k) % a.len()];
        files.push(SourceFile::new(
            format!("lib/part{d:02}.py"),
            format!("{} = {}.{}({}, {})\n", x(0), x(1), x(2), x(3), word(i + 32 + d)),
        ));
    }
    let groundtruth = format!("{r1} = {r2}({}, {})", b[0], b[4]);
    let kernel = [
        format!("def {}_{}({}, {}):", b[0], b[1], b[2], b[3]),
        format!("    {} = {} * {}", b[4], b[2], b[3]),
        format!("    {} = {} + {}", b[5], b[4], b[0]),
        format!("    {} = {}({}, {})", b[1], b[5], b[2], b[4]),
        format!("    if {} > {}:", b[3], b[1]),
        format!("        {} = {} - {}", b[2], b[3], b[5]),
        format!("    {groundtruth}"),
        format!("    {} = [{}, {}]", b[0], b[1], b[4]),
        format!("    return {}", b[5]),
    ];
    files.push(SourceFile::new("ops/kernel.py", kernel.join("\n") + "\n"));
    let mut code = vec![format!("# built on {} {} {} {} {} {}", b[0], b[1], b[2], b[3], b[4], b[5])];
    for l in 0..12 {
        let x = |k: usize| a[(4 * l + k) % a.len()];
        code.push(format!("{} = {}.{}({})", x(0), x(1), x(2), x(3)));
    }
    code.push(format!("{r1} = {r2}("));
    let unfinished = code.join("\n");
    files.push(SourceFile::new("main.py", unfinished.clone()));
    BenchmarkTask {
        task_id: format!("qh{i:02}"),
        files,
        completion_file: "main.py".into(),
        unfinished_code: unfinished,
        groundtruth,
    }
}

fn camel(w: &str) -> String {
    let mut c = w.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

fn dependency_task(i: usize) -> BenchmarkTask {
    let class = format!("{}{}", camel(word(i * 5)), camel(word(i * 5 + 1)));
    let (m1, m2, p1, p2) = (word(i * 5 + 2), word(i * 5 + 3), word(i * 5 + 4), word(i * 5 + 30));
    let module = format!("{}_impl", word(i * 5 + 31));
    let source = format!(
        "class {class}:\n    def __init__(self, model):\n        self.model = model\n\n    def {m1}_{m2}(self,\n            {p1},\n            {p2}):\n        return self.model\n"
    );
    let unfinished = format!(
        "from pkg.{module} import {class}\n\n\nclass Fast{class}({class}):\n    # override {m1} {m2} with {p1} and {p2}\n"
    );
    BenchmarkTask {
        task_id: format!("dc{i:02}"),
        files: vec![
            SourceFile::new(format!("pkg/{module}.py"), source),
            SourceFile::new("main.py", unfinished.clone()),
        ],
        completion_file: "main.py".into(),
        unfinished_code: unfinished,
        groundtruth: format!("def {m1}_{m2}(self, {p1}, {p2}):"),
    }
}

fn plain_task(i: usize) -> BenchmarkTask {
    let (w1, w2, w3) = (word(i * 7), word(i * 7 + 1), word(i * 7 + 2));
    let helper = format!("def {w1}_{w2}({w3}):\n    return {w3} * 2\n\n\nvalue = {w1}_{w2}({w3})\n");
    let unfinished = format!("import os\n\n{w3} = 3\nvalue = {w1}_{w2}(");
    BenchmarkTask {
        task_id: format!("pl{i:02}"),
        files: vec![SourceFile::new("util/helpers.py", helper), SourceFile::new("main.py", unfinished.clone())],
        completion_file: "main.py".into(),
        unfinished_code: unfinished,
        groundtruth: format!("value = {w1}_{w2}({w3})"),
    }
}

/// 20 query-dependent, 20 dependency-dependent and 10 plain tasks.
pub fn ablation_benchmark() -> Vec<AblationTask> {
    let mut out = Vec::new();
    for i in 0..20 {
        out.push(AblationTask { kind: TaskType::QueryDependent, task: query_task(i) });
        out.push(AblationTask { kind: TaskType::DependencyDependent, task: dependency_task(i) });
    }
    for i in 0..10 {
        out.push(AblationTask { kind: TaskType::Plain, task: plain_task(i) });
    }
    out
}
