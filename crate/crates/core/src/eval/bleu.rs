//! BLEU without smoothing.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::tokenize;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BleuMode {
    /// Clipped n-gram counts and lengths pooled over all pairs.
    #[default]
    Corpus,
    /// Mean of per-pair sentence BLEU.
    SentenceAverage,
}

/// Lowercased tokens; punctuation (including the final `?`) is kept.
pub fn bleu_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .tokens
        .into_iter()
        .map(|t| {
            if t.normalized.is_empty() {
                t.surface.to_lowercase()
            } else {
                t.normalized
            }
        })
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

#[derive(Clone, Debug, Default)]
struct Stats {
    matches: Vec<usize>,
    totals: Vec<usize>,
    reference_totals: Vec<usize>,
    candidate_len: usize,
    reference_len: usize,
}

impl Stats {
    fn new(max_order: usize) -> Self {
        Stats {
            matches: vec![0; max_order],
            totals: vec![0; max_order],
            reference_totals: vec![0; max_order],
            ..Default::default()
        }
    }

    fn add(&mut self, candidate: &[String], reference: &[String]) {
        self.candidate_len += candidate.len();
        self.reference_len += reference.len();
        for n in 1..=self.matches.len() {
            let refs = ngram_counts(reference, n);
            self.reference_totals[n - 1] += reference.len().saturating_sub(n - 1);
            for (gram, count) in ngram_counts(candidate, n) {
                self.matches[n - 1] += count.min(refs.get(gram).copied().unwrap_or(0));
                self.totals[n - 1] += count;
            }
        }
    }

    /// Score in [0, 100]; zero when any order has no matches.
    ///
    /// An order for which neither side has a single n-gram (every text is
    /// shorter than n) is vacuously exact rather than zero.
    fn score(&self) -> f64 {
        if self.candidate_len == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 0..self.matches.len() {
            let (m, t) = (self.matches[n], self.totals[n]);
            if t == 0 && self.reference_totals[n] == 0 {
                continue;
            }
            if m == 0 {
                return 0.0;
            }
            log_sum += (m as f64 / t as f64).ln();
        }
        let order = self.matches.len() as f64;
        let brevity = (1.0 - self.reference_len as f64 / self.candidate_len as f64).min(0.0);
        100.0 * (log_sum / order + brevity).exp()
    }
}

/// BLEU over `(candidate, reference)` pairs with uniform weights over orders
/// `1..=max_order`. `None` for an empty evaluation set.
pub fn bleu<C, R>(pairs: &[(C, R)], max_order: usize, mode: BleuMode) -> Option<f64>
where
    C: AsRef<str>,
    R: AsRef<str>,
{
    assert!(max_order >= 1, "BLEU needs at least unigrams");
    if pairs.is_empty() {
        return None;
    }
    let tokenized = pairs
        .iter()
        .map(|(c, r)| (bleu_tokens(c.as_ref()), bleu_tokens(r.as_ref())));
    match mode {
        BleuMode::Corpus => {
            let mut stats = Stats::new(max_order);
            for (c, r) in tokenized {
                stats.add(&c, &r);
            }
            Some(stats.score())
        }
        BleuMode::SentenceAverage => {
            let total: f64 = tokenized
                .map(|(c, r)| {
                    let mut stats = Stats::new(max_order);
                    stats.add(&c, &r);
                    stats.score()
                })
                .sum();
            Some(total / pairs.len() as f64)
        }
    }
}
