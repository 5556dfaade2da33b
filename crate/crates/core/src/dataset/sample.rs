use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{build_file_dependency_graph, cluster_files, RepoCluster};
use crate::corpus::{CodeParser, Repo, SourceFile};
use crate::retrieval::token_spans;
use crate::seed::{stream_rng, stream_seed, DATASET};
use crate::{Diagnostics, Error, Result};

pub const MIN_TARGET_TOKENS: usize = 16;
pub const MAX_TARGET_TOKENS: usize = 96;
/// Fraction of lines at each end of a file where targets may not start.
pub const EDGE_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub repo_id: String,
    pub completion_file: String,
    pub unfinished_code: String,
    pub target: String,
    pub cross_files: Vec<SourceFile>,
    pub seed: u64,
}

/// Byte offsets at which a target of `tokens` tokens may start in `content`:
/// the first non-blank character of a line outside the first and last
/// [`EDGE_MARGIN`] of lines, with enough tokens after it and a non-empty
/// remainder of the file after the target. Each entry is `(line, start, end)`.
pub fn admissible_starts(content: &str, tokens: usize) -> Vec<(usize, usize, usize)> {
    let spans = token_spans(content);
    let lines: Vec<(usize, &str)> = content
        .split_inclusive('\n')
        .scan(0usize, |offset, line| {
            let start = *offset;
            *offset += line.len();
            Some((start, line))
        })
        .collect();
    let n = lines.len();
    let margin = (n as f64 * EDGE_MARGIN) as usize;
    if tokens == 0 || n <= 2 * margin {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (line_no, &(line_start, line)) in lines.iter().enumerate().take(n - margin).skip(margin) {
        let Some(col) = line.find(|c: char| !c.is_whitespace()) else { continue };
        let start = line_start + col;
        let first = spans.partition_point(|s| s.start < start);
        // The line must itself contain the first target token.
        let Some(first_span) = spans.get(first) else { continue };
        if first_span.start >= line_start + line.trim_end().len() {
            continue;
        }
        let Some(last) = spans.get(first + tokens - 1) else { continue };
        if last.end < content.len() {
            out.push((line_no, start, last.end));
        }
    }
    out
}

/// Draws one training sample from `cluster`: a uniformly chosen non-first
/// file, a target length uniform in `[16, 96]` tokens and a uniformly chosen
/// admissible start. Falls back to other non-first files, then to the
/// minimum length, before giving up.
pub fn sample_target(repo_id: &str, cluster: &RepoCluster, repo: &Repo, seed: u64) -> Result<TrainingSample> {
    let mut rng = stream_rng(seed, DATASET);
    if cluster.files.len() < 2 {
        return Err(Error::ClusterUnusable(format!("cluster of {} file(s)", cluster.files.len())));
    }
    let length = rng.random_range(MIN_TARGET_TOKENS..=MAX_TARGET_TOKENS);
    let mut candidates: Vec<&String> = cluster.files[1..].iter().collect();
    candidates.shuffle(&mut rng);

    let lengths = if length > MIN_TARGET_TOKENS { [length, MIN_TARGET_TOKENS].to_vec() } else { [length].to_vec() };
    for tokens in lengths {
        for path in &candidates {
            let Some(file) = repo.get(path) else { continue };
            let starts = admissible_starts(&file.content, tokens);
            if starts.is_empty() {
                continue;
            }
            let (_, start, end) = starts[rng.random_range(0..starts.len())];
            let cross_files = cluster
                .files
                .iter()
                .filter(|f| *f != *path)
                .filter_map(|f| repo.get(f).cloned())
                .collect();
            return Ok(TrainingSample {
                repo_id: String::from(repo_id),
                completion_file: file.path.clone(),
                unfinished_code: String::from(&file.content[..start]),
                target: String::from(&file.content[start..end]),
                cross_files,
                seed,
            });
        }
    }
    Err(Error::ClusterUnusable(format!("no admissible target position in cluster starting at {}", cluster.files[0])))
}

/// Samples from every multi-file cluster of a repository, sorted by seed.
/// Unusable clusters are reported as warnings.
pub fn build_training_samples(
    repo_id: &str,
    repo: &Repo,
    parser: &dyn CodeParser,
    master_seed: u64,
    samples_per_cluster: usize,
    diags: &mut Diagnostics,
) -> Vec<TrainingSample> {
    let graph = build_file_dependency_graph(repo, parser, diags);
    let mut samples = Vec::new();
    for (c, cluster) in cluster_files(&graph).iter().enumerate() {
        for j in 0..samples_per_cluster {
            let seed = stream_seed(master_seed ^ ((c as u64) << 32) ^ j as u64, repo_id);
            match sample_target(repo_id, cluster, repo, seed) {
                Ok(sample) => samples.push(sample),
                Err(err) => {
                    diags.warn(format!("{repo_id}: {err}"));
                    break;
                }
            }
        }
    }
    samples.sort_by(|a, b| (&a.repo_id, a.seed).cmp(&(&b.repo_id, b.seed)));
    samples
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use alloc::vec;

    fn body(lines: usize) -> String {
        (0..lines).map(|i| format!("    value_{i} = compute(alpha, beta, gamma)\n")).collect()
    }

    fn cluster(files: &[&str]) -> RepoCluster {
        RepoCluster { files: files.iter().map(|f| String::from(*f)).collect(), edges: BTreeSet::new() }
    }

    #[test]
    fn deterministic_under_seed() {
        let repo = Repo::new([SourceFile::new("a.py", body(50)), SourceFile::new("b.py", body(50))]);
        let c = cluster(&["a.py", "b.py"]);
        assert_eq!(sample_target("r", &c, &repo, 3).unwrap(), sample_target("r", &c, &repo, 3).unwrap());
    }

    #[test]
    fn completion_file_is_never_first() {
        let repo = Repo::new([SourceFile::new("a.py", body(50)), SourceFile::new("b.py", body(50))]);
        let c = cluster(&["a.py", "b.py"]);
        for seed in 0..50 {
            assert_eq!(sample_target("r", &c, &repo, seed).unwrap().completion_file, "b.py");
        }
    }

    #[test]
    fn start_lines_avoid_file_edges() {
        let content = body(200);
        let repo = Repo::new([SourceFile::new("a.py", "x = 1\n"), SourceFile::new("b.py", content.clone())]);
        let c = cluster(&["a.py", "b.py"]);
        for seed in 0..1000 {
            let s = sample_target("r", &c, &repo, seed).unwrap();
            let start_line = s.unfinished_code.matches('\n').count();
            assert!((20..=180).contains(&start_line), "start line {start_line}");
            assert!(content.starts_with(&format!("{}{}", s.unfinished_code, s.target)));
            let n = token_spans(&s.target).len();
            assert!((MIN_TARGET_TOKENS..=MAX_TARGET_TOKENS).contains(&n));
            assert!(s.unfinished_code.len() + s.target.len() < content.len());
        }
    }

    #[test]
    fn tiny_cluster_is_unusable() {
        let repo = Repo::new([SourceFile::new("a.py", "x\n"), SourceFile::new("b.py", "y = 1\n")]);
        assert!(matches!(sample_target("r", &cluster(&["a.py", "b.py"]), &repo, 0), Err(Error::ClusterUnusable(_))));
        assert!(matches!(sample_target("r", &cluster(&["a.py"]), &repo, 0), Err(Error::ClusterUnusable(_))));
    }

    #[test]
    fn admissible_requires_remaining_suffix() {
        let content = "a b c d\n".repeat(10);
        let starts = admissible_starts(&content, 4);
        assert_eq!(starts.iter().map(|s| s.0).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5, 6, 7, 8]);
        let last = starts.last().unwrap();
        assert!(last.2 < content.len());
    }
}
