//! ROUGE-1, ROUGE-2 and ROUGE-L (F1 with β = 1) over whitespace tokens.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

static PUNCTUATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\p{P}+").unwrap());

/// NFC-normalizes, lowercases, strips Unicode punctuation and splits on whitespace.
///
/// Vietnamese writes one syllable per space-delimited token, so no further
/// segmentation is applied.
pub fn tokenize(text: &str) -> Vec<String> {
    let normalized: String = text.nfc().collect::<String>().to_lowercase();
    PUNCTUATION
        .replace_all(&normalized, "")
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

pub fn token_count(text: &str) -> usize {
    tokenize(text).len()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    pub const ZERO: RougeScore = RougeScore {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    pub fn from_counts(overlap: usize, candidate_total: usize, reference_total: usize) -> Self {
        if candidate_total == 0 || reference_total == 0 {
            return Self::ZERO;
        }
        Self::from_pr(
            overlap as f64 / candidate_total as f64,
            overlap as f64 / reference_total as f64,
        )
    }

    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram overlap: each n-gram counts `min(candidate, reference)` times.
pub fn ngram_overlap<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> usize {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    cand.iter()
        .map(|(gram, &c)| c.min(refs.get(gram).copied().unwrap_or(0)))
        .sum()
}

/// ROUGE-N over pre-tokenized sequences.
pub fn rouge_n_tokens<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> RougeScore {
    assert!(n >= 1, "ROUGE-N requires n >= 1");
    let cand_total = candidate.len().saturating_sub(n - 1);
    let ref_total = reference.len().saturating_sub(n - 1);
    RougeScore::from_counts(ngram_overlap(candidate, reference, n), cand_total, ref_total)
}

pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> RougeScore {
    rouge_n_tokens(&tokenize(candidate), &tokenize(reference), n)
}

/// Length of the longest common subsequence, O(|a|·|b|) time and O(|b|) space.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if x == y {
                diag + 1
            } else {
                above.max(row[j])
            };
            diag = above;
        }
    }
    row[b.len()]
}

pub fn rouge_l_tokens<T: PartialEq>(candidate: &[T], reference: &[T]) -> RougeScore {
    RougeScore::from_counts(lcs_length(candidate, reference), candidate.len(), reference.len())
}

pub fn rouge_l(candidate: &str, reference: &str) -> RougeScore {
    rouge_l_tokens(&tokenize(candidate), &tokenize(reference))
}

/// All three variants for one (candidate, reference) pair.
pub fn score_pair(candidate: &str, reference: &str) -> [RougeScore; 3] {
    let c = tokenize(candidate);
    let r = tokenize(reference);
    [
        rouge_n_tokens(&c, &r, 1),
        rouge_n_tokens(&c, &r, 2),
        rouge_l_tokens(&c, &r),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeReport {
    pub r1: RougeScore,
    pub r2: RougeScore,
    pub rl: RougeScore,
    pub sample_count: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RougeError {
    #[error("no (candidate, reference) pairs to score")]
    EmptyCorpus,
}

/// Unweighted mean of per-pair precision, recall and F1 for each variant.
pub fn corpus_rouge<'a, I>(pairs: I) -> Result<RougeReport, RougeError>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut sums = [[0.0f64; 3]; 3];
    let mut count = 0usize;
    for (candidate, reference) in pairs {
        for (acc, score) in sums.iter_mut().zip(score_pair(candidate, reference)) {
            acc[0] += score.precision;
            acc[1] += score.recall;
            acc[2] += score.f1;
        }
        count += 1;
    }
    if count == 0 {
        return Err(RougeError::EmptyCorpus);
    }
    let mean = |acc: [f64; 3]| RougeScore {
        precision: acc[0] / count as f64,
        recall: acc[1] / count as f64,
        f1: acc[2] / count as f64,
    };
    Ok(RougeReport {
        r1: mean(sums[0]),
        r2: mean(sums[1]),
        rl: mean(sums[2]),
        sample_count: count,
    })
}
