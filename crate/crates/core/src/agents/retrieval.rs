//! TF-IDF / cosine retrieval over rulebook passages.
//!
//! Weights are raw term frequency times `ln((1 + P) / (1 + df)) + 1`, with
//! lowercase alphanumeric tokens. A zero vector has similarity 0 with
//! everything, so an empty query returns passages in their original order.

use std::collections::{BTreeMap, HashMap};

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

fn term_counts(text: &str) -> BTreeMap<String, f64> {
    let mut counts = BTreeMap::new();
    for t in tokenize(text) {
        *counts.entry(t).or_insert(0.0) += 1.0;
    }
    counts
}

pub fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let norm = |v: &BTreeMap<String, f64>| v.values().map(|w| w * w).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().filter_map(|(t, w)| b.get(t).map(|v| w * v)).sum();
    dot / (na * nb)
}

#[derive(Clone, Debug)]
pub struct RulebookIndex {
    passages: Vec<String>,
    doc_freq: HashMap<String, usize>,
    vectors: Vec<BTreeMap<String, f64>>,
}

impl RulebookIndex {
    pub fn new(passages: Vec<String>) -> Self {
        let counts: Vec<_> = passages.iter().map(|p| term_counts(p)).collect();
        let mut doc_freq = HashMap::new();
        for c in &counts {
            for term in c.keys() {
                *doc_freq.entry(term.clone()).or_insert(0) += 1;
            }
        }
        let mut index = RulebookIndex { passages, doc_freq, vectors: Vec::new() };
        index.vectors = counts.into_iter().map(|c| index.weigh(c)).collect();
        index
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn passages(&self) -> &[String] {
        &self.passages
    }

    pub fn idf(&self, term: &str) -> f64 {
        let p = self.passages.len() as f64;
        let df = self.doc_freq.get(term).copied().unwrap_or(0) as f64;
        ((1.0 + p) / (1.0 + df)).ln() + 1.0
    }

    fn weigh(&self, counts: BTreeMap<String, f64>) -> BTreeMap<String, f64> {
        counts
            .into_iter()
            .map(|(t, tf)| {
                let w = tf * self.idf(&t);
                (t, w)
            })
            .collect()
    }

    pub fn vectorize(&self, text: &str) -> BTreeMap<String, f64> {
        self.weigh(term_counts(text))
    }

    pub fn passage_vector(&self, i: usize) -> &BTreeMap<String, f64> {
        &self.vectors[i]
    }

    /// Cosine similarity of `query` with every passage, in passage order.
    pub fn similarities(&self, query: &str) -> Vec<f64> {
        let q = self.vectorize(query);
        self.vectors.iter().map(|v| cosine(&q, v)).collect()
    }
}

/// The `k` passages most similar to `query`; ties keep passage order.
pub fn retrieve_rules<'a>(query: &str, index: &'a RulebookIndex, k: usize) -> Vec<&'a str> {
    let sims = index.similarities(query);
    let mut order: Vec<usize> = (0..index.len()).collect();
    order.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]));
    order.into_iter().take(k).map(|i| index.passages[i].as_str()).collect()
}
