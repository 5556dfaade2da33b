//! Planted-relevance corpus for checking that training moves recall.
//!
//! Every sample's query is dominated by boilerplate identifiers that the
//! distractor snippets repeat, while the single planted snippet shares only
//! two topic identifiers with the query and contains every target token.
//! Under the mock evaluator the planted snippet is the unique perplexity
//! minimiser, yet an untrained embedder prefers the distractors.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::corpus::{Snippet, SnippetKind};
use crate::query::{build_enhanced_query, DEFAULT_TAIL_LINES};
use crate::reward::RewardSample;
use crate::seed::{stream_rng, DATASET};
use crate::Language;

const BOILERPLATE: &[&str] = &[
    "self", "value", "data", "result", "config", "items", "index", "count", "name", "state", "buffer", "logger",
];
const TOPICS: usize = 40;
const QUERY_BOILERPLATE: usize = 6;
const DISTRACTOR_BOILERPLATE: usize = 4;
const TARGET_TOKENS: usize = 4;

fn topic(i: usize) -> String {
    format!("topic{i}")
}

fn snippet(sample: usize, slot: usize, text: String) -> Snippet {
    Snippet {
        id: format!("syn:{sample:04}:{slot:02}"),
        kind: SnippetKind::Base,
        origin_path: format!("pkg/mod_{sample:04}_{slot:02}.py"),
        span: None,
        line_count: text.lines().count(),
        text,
    }
}

/// `count` samples of `n` snippets each (`n >= 2`), deterministic in `seed`.
pub fn planted_samples(count: usize, n: usize, seed: u64) -> Vec<RewardSample> {
    assert!(n >= 2, "a planted sample needs at least one distractor");
    let mut rng = stream_rng(seed, DATASET);
    let topics: Vec<String> = (0..TOPICS).map(topic).collect();
    (0..count)
        .map(|i| {
            let chosen: Vec<&String> = topics.choose_multiple(&mut rng, 2).collect();
            let boiler: Vec<&str> = BOILERPLATE.choose_multiple(&mut rng, QUERY_BOILERPLATE).copied().collect();
            let target_words: Vec<String> = (0..TARGET_TOKENS).map(|j| format!("out{i}v{j}")).collect();

            let unfinished = format!(
                "{} = {}.{}({})\n{}.{}(",
                boiler[0],
                boiler[1],
                boiler[2],
                boiler[3],
                chosen[0],
                chosen[1],
            ) + &format!("{}, {})", boiler[4], boiler[5]);
            let query = build_enhanced_query(&unfinished, Vec::new(), DEFAULT_TAIL_LINES);
            let target = target_words.join(" + ");

            let planted_slot = rng.random_range(0..n);
            let snippets = (0..n)
                .map(|slot| {
                    if slot == planted_slot {
                        let text = format!("def {}_{}():\n    return {}", chosen[0], chosen[1], target_words.join(" + "));
                        return snippet(i, slot, text);
                    }
                    let mut words: Vec<&str> = boiler.choose_multiple(&mut rng, DISTRACTOR_BOILERPLATE).copied().collect();
                    words.shuffle(&mut rng);
                    let other = loop {
                        let t = &topics[rng.random_range(0..TOPICS)];
                        if !chosen.contains(&t) {
                            break t;
                        }
                    };
                    let text = format!("{} = {}.{}\n{}({})", words[0], words[1], other, words[2], words[3]);
                    snippet(i, slot, text)
                })
                .collect();
            RewardSample { query, snippets, target, language: Language::Python }
        })
        .collect()
}
