//! Lead-sentence extractive baseline bounded to 20% of the transcript.

use crate::rouge::tokenize;
use crate::summarize::{BackendError, SummarizeTask};

/// Fraction of transcript tokens a summary may use, as a ratio numerator/denominator.
pub const BUDGET_NUM: usize = 1;
pub const BUDGET_DEN: usize = 5;

/// Token budget for a transcript of `token_count` tokens: `max(1, floor(0.2 n))`.
pub fn token_budget(token_count: usize) -> usize {
    (token_count * BUDGET_NUM / BUDGET_DEN).max(1)
}

const TERMINALS: [char; 4] = ['.', '?', '!', '…'];
const CLOSERS: [char; 6] = ['"', '\'', ')', ']', '”', '’'];

fn ends_sentence(word: &str) -> bool {
    word.trim_end_matches(CLOSERS)
        .chars()
        .last()
        .is_some_and(|c| TERMINALS.contains(&c))
}

struct Word<'a> {
    raw: &'a str,
    tokens: usize,
}

/// Picks leading whole sentences while they fit the token budget; when not
/// even the first sentence fits, returns the first `budget` tokens instead.
///
/// Output words are copied verbatim from the transcript, so the summary's
/// tokens are always a prefix of the transcript's tokens.
pub fn extractive_summarize(transcript: &str) -> String {
    let words: Vec<Word<'_>> = transcript
        .split_whitespace()
        .map(|raw| Word {
            raw,
            tokens: tokenize(raw).len(),
        })
        .collect();
    let total: usize = words.iter().map(|w| w.tokens).sum();
    if total == 0 {
        return String::new();
    }
    let budget = token_budget(total);

    let mut taken_words = 0;
    let mut taken_tokens = 0;
    let mut start = 0;
    while start < words.len() {
        let end = words[start..]
            .iter()
            .position(|w| ends_sentence(w.raw))
            .map_or(words.len(), |p| start + p + 1);
        let sentence_tokens: usize = words[start..end].iter().map(|w| w.tokens).sum();
        if taken_tokens + sentence_tokens > budget {
            break;
        }
        taken_tokens += sentence_tokens;
        taken_words = end;
        start = end;
    }

    if taken_tokens == 0 {
        // first sentence alone is over budget
        taken_words = 0;
        for w in &words {
            if taken_tokens + w.tokens > budget {
                break;
            }
            taken_tokens += w.tokens;
            taken_words += 1;
        }
    }

    words[..taken_words]
        .iter()
        .map(|w| w.raw)
        .collect::<Vec<_>>()
        .join(" ")
}

/// The extractive backend behind the common summarize contract.
pub fn summarize_extractive(task: &SummarizeTask) -> Result<String, BackendError> {
    if task.transcript.trim().is_empty() {
        return Err(BackendError::EmptyTranscript);
    }
    let summary = extractive_summarize(&task.transcript);
    if summary.is_empty() {
        return Err(BackendError::EmptyResponse);
    }
    Ok(summary)
}
