use alloc::string::String;
use alloc::vec::Vec;

use super::bm25::{Bm25Params, Bm25Stats};
use super::embed::{cosine, embed, EmbedderParams, Embedding};
use super::{top_k, RankedResult};
use crate::corpus::Snippet;
use crate::{Error, Result};

/// Immutable retrieval corpus: BM25 statistics plus, optionally, dense
/// snippet embeddings tagged with the embedder version that produced them.
#[derive(Debug, Clone)]
pub struct RetrievalIndex {
    snippets: Vec<Snippet>,
    bm25: Bm25Stats,
    embeddings: Option<Vec<Embedding>>,
    embedder_version: Option<String>,
}

impl RetrievalIndex {
    pub fn build(snippets: Vec<Snippet>) -> Self {
        let texts: Vec<&str> = snippets.iter().map(|s| s.text.as_str()).collect();
        let bm25 = Bm25Stats::build(&texts, Bm25Params::default());
        Self { snippets, bm25, embeddings: None, embedder_version: None }
    }

    /// Same corpus with embeddings computed by `params`.
    pub fn with_embeddings(mut self, params: &EmbedderParams) -> Self {
        self.embeddings = Some(self.snippets.iter().map(|s| embed(params, &s.text)).collect());
        self.embedder_version = Some(params.version());
        self
    }

    pub fn snippets(&self) -> &[Snippet] {
        &self.snippets
    }

    pub fn snippet(&self, index: usize) -> &Snippet {
        &self.snippets[index]
    }

    pub fn len(&self) -> usize {
        self.snippets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snippets.is_empty()
    }

    pub fn bm25(&self) -> &Bm25Stats {
        &self.bm25
    }

    pub fn embeddings(&self) -> Option<&[Embedding]> {
        self.embeddings.as_deref()
    }

    pub fn embedder_version(&self) -> Option<&str> {
        self.embedder_version.as_deref()
    }

    /// Top-`k` snippets by BM25 against `query`. Zero-score snippets are
    /// never returned.
    pub fn bm25_retrieve(&self, query: &str, k: usize) -> Result<Vec<RankedResult>> {
        if k < 1 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let scores = self.bm25.scores(query);
        Ok(top_k(
            scores
                .into_iter()
                .enumerate()
                .filter(|&(_, s)| s > 0.0)
                .map(|(i, s)| (i, self.snippets[i].id.as_str(), s)),
            k,
        ))
    }

    /// Top-`k` snippets by cosine similarity between the embedded query and
    /// the stored snippet embeddings.
    pub fn dense_retrieve(&self, params: &EmbedderParams, query: &str, k: usize) -> Result<Vec<RankedResult>> {
        if k < 1 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let embeddings = self.embeddings.as_ref().ok_or_else(|| Error::StaleIndex {
            index: String::from("<none>"),
            params: params.version(),
        })?;
        let version = params.version();
        if self.embedder_version.as_deref() != Some(version.as_str()) {
            return Err(Error::StaleIndex {
                index: self.embedder_version.clone().unwrap_or_default(),
                params: version,
            });
        }
        let q = embed(params, query);
        Ok(top_k(
            embeddings
                .iter()
                .enumerate()
                .map(|(i, e)| (i, self.snippets[i].id.as_str(), cosine(&q, e))),
            k,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SnippetKind;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn snippet(id: &str, text: &str) -> Snippet {
        Snippet {
            id: id.into(),
            kind: SnippetKind::Base,
            origin_path: "f.py".into(),
            span: None,
            text: text.into(),
            line_count: text.lines().count(),
        }
    }

    fn params(seed: u64) -> EmbedderParams {
        EmbedderParams::random_init(16, 64, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn no_overlap_returns_nothing() {
        let idx = RetrievalIndex::build(vec![snippet("a", "foo bar"), snippet("b", "baz")]);
        assert!(idx.bm25_retrieve("qux", 5).unwrap().is_empty());
        assert!(idx.bm25_retrieve("", 5).unwrap().is_empty());
        assert!(idx.bm25_retrieve("foo", 0).is_err());
    }

    #[test]
    fn duplicates_tie_by_id() {
        let idx = RetrievalIndex::build(vec![snippet("b", "foo bar"), snippet("a", "foo bar"), snippet("c", "x")]);
        let res = idx.bm25_retrieve("foo", 5).unwrap();
        assert_eq!(res.len(), 2);
        assert_eq!(res[0].snippet_id, "a");
        assert_eq!(res[1].snippet_id, "b");
        assert_eq!(res[0].score, res[1].score);
        assert_eq!((res[0].rank, res[1].rank), (1, 2));
    }

    #[test]
    fn dense_requires_matching_embeddings() {
        let p = params(0);
        let idx = RetrievalIndex::build(vec![snippet("a", "foo")]);
        assert!(matches!(idx.dense_retrieve(&p, "foo", 1), Err(Error::StaleIndex { .. })));
        let idx = idx.with_embeddings(&p);
        assert!(idx.dense_retrieve(&p, "foo", 1).is_ok());
        assert!(matches!(idx.dense_retrieve(&params(1), "foo", 1), Err(Error::StaleIndex { .. })));
    }

    #[test]
    fn identical_text_scores_one() {
        let p = params(4);
        let idx = RetrievalIndex::build(vec![
            snippet("a", "return self.cache.lookup(key)"),
            snippet("b", "def get_accept_token(self, prefix):"),
            snippet("c", "import os"),
        ])
        .with_embeddings(&p);
        let res = idx.dense_retrieve(&p, "def get_accept_token(self, prefix):", 3).unwrap();
        assert_eq!(res[0].snippet_id, "b");
        assert!((res[0].score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_query_scores_zero() {
        let p = params(4);
        let idx = RetrievalIndex::build(vec![snippet("a", "foo"), snippet("b", "bar")]).with_embeddings(&p);
        let res = idx.dense_retrieve(&p, "((", 2).unwrap();
        assert!(res.iter().all(|r| r.score == 0.0));
        assert_eq!(res[0].snippet_id, "a");
    }

    #[test]
    fn dense_matches_brute_force_on_hand_set_weights() {
        // 3 snippets, W chosen by hand on 4 buckets.
        let w = vec![1.0, 0.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.5];
        let p = EmbedderParams::new(2, 4, w).unwrap();
        let texts = ["alpha beta", "gamma", "alpha alpha delta"];
        let idx = RetrievalIndex::build(texts.iter().enumerate().map(|(i, t)| snippet(&format!("s{i}"), t)).collect())
            .with_embeddings(&p);
        let query = "alpha gamma";
        let q = embed(&p, query);
        let mut brute: Vec<(f64, usize)> = texts.iter().enumerate().map(|(i, t)| (cosine(&q, &embed(&p, t)), i)).collect();
        brute.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let got: Vec<usize> = idx.dense_retrieve(&p, query, 3).unwrap().iter().map(|r| r.index).collect();
        assert_eq!(got, brute.iter().map(|b| b.1).collect::<Vec<_>>());
    }

    fn corpus() -> Vec<Snippet> {
        [
            "def load(path): return open(path).read()",
            "class Cache: pass",
            "cache = Cache()",
            "value = cache.get(key)",
            "for item in items: total += item",
            "raise ValueError(msg)",
            "self.tokenizer = tokenizer",
            "x = 1",
        ]
        .iter()
        .enumerate()
        .map(|(i, t)| snippet(&format!("s{i}"), t))
        .collect()
    }

    proptest! {
        #[test]
        fn bm25_monotone_in_term_frequency(extra in 1usize..5, doc in 0usize..8) {
            let mut snippets = corpus();
            let before = RetrievalIndex::build(snippets.clone()).bm25().scores("cache");
            for _ in 0..extra {
                snippets[doc].text.push_str(" cache");
            }
            let after = RetrievalIndex::build(snippets).bm25().scores("cache");
            prop_assert!(after[doc] >= before[doc] - 1e-12);
        }

        #[test]
        fn dense_rank_invariant_under_rescaling(scale in 0.01f64..100.0, seed in 0u64..20) {
            let p = params(seed);
            let scaled = EmbedderParams::new(16, 64, p.weights().iter().map(|x| x * scale).collect()).unwrap();
            let order = |p: &EmbedderParams| {
                RetrievalIndex::build(corpus())
                    .with_embeddings(p)
                    .dense_retrieve(p, "value = cache.get(key)", 8)
                    .unwrap()
                    .iter()
                    .map(|r| r.index)
                    .collect::<Vec<_>>()
            };
            prop_assert_eq!(order(&p), order(&scaled));
        }

        #[test]
        fn top_k_is_prefix(k in 1usize..8, q in "[a-z ]{1,20}") {
            let idx = RetrievalIndex::build(corpus()).with_embeddings(&params(2));
            let p = params(2);
            let a = idx.dense_retrieve(&p, &q, k).unwrap();
            let b = idx.dense_retrieve(&p, &q, k + 1).unwrap();
            prop_assert_eq!(&a[..], &b[..a.len()]);
            let a = idx.bm25_retrieve(&q, k).unwrap();
            let b = idx.bm25_retrieve(&q, k + 1).unwrap();
            prop_assert_eq!(&a[..], &b[..a.len()]);
        }
    }
}
