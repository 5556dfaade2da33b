//! Property tests for invariants that span modules.

use std::collections::BTreeSet;

use align_retrieve_core::backend::{CompletionBackend, MockBackend, SamplingParams};
use align_retrieve_core::corpus::{
    base_snippets, split_into_miniblocks, CodeParser, DependencyInfo, ImportRef, Repo, Snippet, SourceFile,
};
use align_retrieve_core::dataset::{build_file_dependency_graph, cluster_files, sample_target, topo_sort_cluster};
use align_retrieve_core::eval::{Aggregates, TaskRow};
use align_retrieve_core::query::{build_prompt, estimate_tokens, sample_candidates};
use align_retrieve_core::retrieval::{tokenize, EmbedderParams, RetrievalIndex};
use align_retrieve_core::reward::{reward, reward_gradient_wrt_scores, softmax};
use align_retrieve_core::seed::{stream_rng, INIT};
use align_retrieve_core::{Diagnostics, Language};
use proptest::prelude::*;

fn source_text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop_oneof![3 => "[a-z_]{1,8}( [a-z=()+]{1,6}){0,4}", 1 => Just(String::new()), 1 => "[ \t]{1,3}"], 0..80)
        .prop_map(|lines| lines.join("\n"))
}

fn corpus(files: &[String]) -> Vec<Snippet> {
    files
        .iter()
        .enumerate()
        .flat_map(|(i, text)| base_snippets(&SourceFile::new(format!("f{i}.py"), text.clone()), 15).unwrap())
        .collect()
}

/// `from X import Y` lines become imports; no entities are resolvable.
struct LineParser;

impl CodeParser for LineParser {
    fn extract_imports(&self, file: &SourceFile, _: Language, _: &mut Diagnostics) -> Vec<ImportRef> {
        file.lines()
            .filter_map(|l| {
                let rest = l.strip_prefix("from ")?;
                let (module, entity) = rest.split_once(" import ")?;
                Some(ImportRef::new(module.trim(), entity.trim(), None))
            })
            .collect()
    }

    fn find_entity(&self, _: &SourceFile, _: Language, _: &str) -> Option<DependencyInfo> {
        None
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn miniblocks_are_blank_free_runs(text in source_text()) {
        let file = SourceFile::new("a.py", text);
        for block in split_into_miniblocks(&file) {
            prop_assert!(block.start_line <= block.end_line);
            prop_assert_eq!(block.lines.len(), block.end_line - block.start_line + 1);
            prop_assert!(block.lines.iter().all(|l| !l.trim().is_empty()));
        }
    }

    #[test]
    fn base_snippets_bounded_unique_and_complete(files in prop::collection::vec(source_text(), 1..5), max_lines in 1usize..20) {
        let mut ids = BTreeSet::new();
        for (i, text) in files.iter().enumerate() {
            let file = SourceFile::new(format!("f{i}.py"), text.clone());
            let snippets = base_snippets(&file, max_lines).unwrap();
            for s in &snippets {
                prop_assert!(s.line_count <= max_lines && s.line_count > 0);
                prop_assert!(!s.text.trim().is_empty());
                prop_assert!(ids.insert(s.id.clone()));
            }
            let rebuilt: Vec<&str> = snippets.iter().flat_map(|s| s.text.lines()).collect();
            let expected: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
            prop_assert_eq!(rebuilt, expected);
        }
    }

    #[test]
    fn embeddings_have_unit_norm(files in prop::collection::vec(source_text(), 1..4), seed in 0u64..100) {
        let params = EmbedderParams::random_init(8, 64, &mut stream_rng(seed, INIT)).unwrap();
        let index = RetrievalIndex::build(corpus(&files)).with_embeddings(&params);
        for e in index.embeddings().unwrap() {
            let norm: f64 = e.values.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-6, "norm {}", norm);
        }
    }

    #[test]
    fn rankings_sorted_with_id_tiebreak(files in prop::collection::vec(source_text(), 1..4), query in "[a-z_ ]{1,30}", seed in 0u64..50) {
        let params = EmbedderParams::random_init(8, 64, &mut stream_rng(seed, INIT)).unwrap();
        let index = RetrievalIndex::build(corpus(&files)).with_embeddings(&params);
        let rankings = [index.bm25_retrieve(&query, 50).unwrap(), index.dense_retrieve(&params, &query, 50).unwrap()];
        for ranking in rankings {
            for (i, pair) in ranking.windows(2).enumerate() {
                prop_assert!(pair[0].score > pair[1].score
                    || (pair[0].score == pair[1].score && pair[0].snippet_id < pair[1].snippet_id));
                prop_assert_eq!(pair[0].rank, i + 1);
            }
        }
    }

    #[test]
    fn prompt_respects_budget(files in prop::collection::vec(source_text(), 1..4), code in source_text(), budget in 200usize..2000) {
        let snippets = corpus(&files);
        let refs: Vec<&Snippet> = snippets.iter().collect();
        if let Ok(prompt) = build_prompt(&refs, &code, budget, Language::Python) {
            prop_assert!(estimate_tokens(&prompt.rendered) <= budget,
                "{} > {}", estimate_tokens(&prompt.rendered), budget);
            prop_assert!(code.ends_with(&prompt.unfinished_code));
        }
    }

    #[test]
    fn sampled_candidates_are_indexed_once(files in prop::collection::vec(source_text(), 1..3), k in 1usize..9, seed in any::<u64>()) {
        let snippets = corpus(&files);
        let refs: Vec<&Snippet> = snippets.iter().collect();
        let prompt = build_prompt(&refs, "x = ", 4096, Language::Python).unwrap();
        let candidates = sample_candidates(&MockBackend, &prompt, k, 0.8, 0.95, seed, 32).unwrap();
        prop_assert_eq!(candidates.len(), k);
        let indices: BTreeSet<usize> = candidates.iter().map(|c| c.sample_index).collect();
        prop_assert_eq!(indices.len(), k);
    }

    #[test]
    fn mock_logprobs_are_nonpositive(context in source_text(), continuation in "[a-z]{1,6}( [a-z(),]{1,6}){0,6}") {
        let lp = MockBackend.score_continuation(&context, &continuation).unwrap();
        prop_assert_eq!(lp.tokens().len(), lp.logprobs().len());
        prop_assert!(lp.logprobs().iter().all(|&l| l <= 0.0));
        let ppl = lp.perplexity().unwrap();
        prop_assert!((1.0..=std::f64::consts::E + 1e-12).contains(&ppl));
    }

    #[test]
    fn reward_is_log_softmax(scores in prop::collection::vec(-1.0f64..1.0, 1..12), mp in 0usize..12) {
        let mp = mp % scores.len();
        let p = softmax(&scores);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((reward(&scores, mp).unwrap() - p[mp].ln()).abs() < 1e-9);
        prop_assert!(reward_gradient_wrt_scores(&scores, mp).unwrap().iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn aggregates_are_mean_percentages(rows in prop::collection::vec((0u8..2, 0.0f64..1.0, prop::option::of(0u8..2)), 0..20)) {
        let rows: Vec<TaskRow> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (em, es, em_at_k))| TaskRow {
                task_id: format!("t{i}"),
                prediction: String::new(),
                em,
                es: if em == 1 { 1.0 } else { es },
                em_at_k,
                error: None,
            })
            .collect();
        let agg = Aggregates::from_rows(&rows);
        prop_assert_eq!(agg.tasks, rows.len());
        if rows.is_empty() {
            prop_assert!(agg.em.is_none() && agg.es.is_none());
        } else {
            let n = rows.len() as f64;
            let em = rows.iter().map(|r| f64::from(r.em)).sum::<f64>() / n * 100.0;
            let es = rows.iter().map(|r| r.es).sum::<f64>() / n * 100.0;
            prop_assert!((agg.em.unwrap() - em).abs() < 1e-9);
            prop_assert!((agg.es.unwrap() - es).abs() < 1e-9);
        }
    }

    #[test]
    fn clusters_start_with_dependency_free_file(edges in prop::collection::vec((0usize..8, 0usize..8), 0..16)) {
        let mut files: Vec<SourceFile> = Vec::new();
        for i in 0..8 {
            let imports: String = edges
                .iter()
                .filter(|(a, _)| *a == i)
                .map(|(_, b)| format!("from m{b} import thing\n"))
                .collect();
            files.push(SourceFile::new(format!("m{i}.py"), format!("{imports}value = {i}\n")));
        }
        let repo = Repo::new(files);
        let graph = build_file_dependency_graph(&repo, &LineParser, &mut Diagnostics::new());
        prop_assert!(graph.edges.iter().all(|(a, b)| a != b && graph.nodes.contains(a) && graph.nodes.contains(b)));
        for cluster in cluster_files(&graph) {
            prop_assert!(cluster.files.len() >= 2);
            let first = &cluster.files[0];
            prop_assert!(cluster.edges.iter().all(|(a, _)| a != first));
            let position = |f: &String| cluster.files.iter().position(|x| x == f).unwrap();
            prop_assert!(cluster.edges.iter().all(|(a, b)| position(b) < position(a)));
            let (order, _) = topo_sort_cluster(&cluster.files, &cluster.edges);
            prop_assert_eq!(order.len(), cluster.files.len());
        }
    }

    #[test]
    fn training_targets_lie_inside_the_file(seed in any::<u64>(), lines in 30usize..120) {
        let body: String = (0..lines).map(|i| format!("result_{i} = combine(alpha_{i}, beta_{i})\n")).collect();
        let repo = Repo::new([
            SourceFile::new("base.py", "def combine(a, b):\n    return a + b\n"),
            SourceFile::new("user.py", format!("from base import combine\n{body}")),
        ]);
        let graph = build_file_dependency_graph(&repo, &LineParser, &mut Diagnostics::new());
        let clusters = cluster_files(&graph);
        prop_assert_eq!(clusters.len(), 1);
        let sample = sample_target("r", &clusters[0], &repo, seed).unwrap();
        let content = &repo.get(&sample.completion_file).unwrap().content;
        prop_assert!(!sample.unfinished_code.is_empty());
        let prefix = format!("{}{}", sample.unfinished_code, sample.target);
        prop_assert!(content.starts_with(&prefix));
        prop_assert!(sample.unfinished_code.len() + sample.target.len() < content.len());
        let tokens = tokenize(&sample.target).len();
        prop_assert!((16..=96).contains(&tokens), "{} tokens", tokens);
    }
}

#[test]
fn mock_generation_is_pure() {
    let prompt = "# file: a.py\n# alpha = beta(gamma)\n# delta = epsilon\n\nalpha = ";
    let params = SamplingParams { n: 3, seed: 9, ..SamplingParams::default() };
    assert_eq!(MockBackend.complete(prompt, &params).unwrap(), MockBackend.complete(prompt, &params).unwrap());
}
