//! Okapi BM25 over snippet token bags.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::tokenize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// Inverted index: term -> (document, term frequency) postings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bm25Stats {
    postings: BTreeMap<String, Vec<(usize, u32)>>,
    doc_lens: Vec<usize>,
    avg_len: f64,
    params: Bm25Params,
}

impl Bm25Stats {
    pub fn build<S: AsRef<str>>(documents: &[S], params: Bm25Params) -> Self {
        let mut postings: BTreeMap<String, Vec<(usize, u32)>> = BTreeMap::new();
        let mut doc_lens = Vec::with_capacity(documents.len());
        for (doc, text) in documents.iter().enumerate() {
            let tokens = tokenize(text.as_ref());
            doc_lens.push(tokens.len());
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *counts.entry(t).or_insert(0) += 1;
            }
            for (term, tf) in counts {
                postings.entry(term).or_default().push((doc, tf));
            }
        }
        let total: usize = doc_lens.iter().sum();
        let avg_len = if doc_lens.is_empty() { 0.0 } else { total as f64 / doc_lens.len() as f64 };
        Self { postings, doc_lens, avg_len, params }
    }

    pub fn num_docs(&self) -> usize {
        self.doc_lens.len()
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// `ln((N - df + 0.5) / (df + 0.5) + 1)`; always positive.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.num_docs() as f64;
        let df = self.doc_freq(term) as f64;
        libm::log((n - df + 0.5) / (df + 0.5) + 1.0)
    }

    /// Scores of every document for `query`. Repeated query tokens count
    /// once per occurrence.
    pub fn scores(&self, query: &str) -> Vec<f64> {
        let mut scores = vec![0.0; self.num_docs()];
        let Bm25Params { k1, b } = self.params;
        for term in tokenize(query) {
            let Some(postings) = self.postings.get(&term) else { continue };
            let idf = self.idf(&term);
            for &(doc, tf) in postings {
                let tf = f64::from(tf);
                let norm = if self.avg_len > 0.0 { self.doc_lens[doc] as f64 / self.avg_len } else { 0.0 };
                scores[doc] += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm));
            }
        }
        scores
    }
}
