//! Spoken-style conversation simulation from clean text.
//!
//! Written text is cut into utterance-sized chunks with ragged boundaries,
//! then roughened with repeated words and filler words at small fixed rates.

use std::ops::Range;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusSample, Source, Split};
use crate::extractive::extractive_summarize;
use crate::rouge::tokenize;
use crate::session::{Session, SessionError};
use crate::transcript::{Conversation, Utterance, WindowPolicy};

/// Common Vietnamese hesitation and filler words.
pub const DEFAULT_FILLERS: &[&str] = &["à", "ờ", "ừ", "ừm", "ơ", "hử", "nhỉ"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub p_repeat: f64,
    pub p_filler: f64,
    pub fillers: Vec<String>,
    /// Candidate utterance lengths in words.
    pub avg_lengths: Vec<usize>,
    pub seed: u64,
    pub words_per_second: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            p_repeat: 0.01,
            p_filler: 0.01,
            fillers: DEFAULT_FILLERS.iter().map(|s| s.to_string()).collect(),
            avg_lengths: vec![100, 110, 120],
            seed: 0,
            words_per_second: 3.5,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("source text has no tokens")]
    EmptySource,
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        for (name, p) in [("p_repeat", self.p_repeat), ("p_filler", self.p_filler)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be a probability, got {p}"));
            }
        }
        if self.p_filler > 0.0 && self.fillers.is_empty() {
            return bad("fillers must be non-empty when p_filler > 0".into());
        }
        if self.avg_lengths.is_empty() || self.avg_lengths.contains(&0) {
            return bad("avg_lengths must be non-empty with entries >= 1".into());
        }
        if !(self.words_per_second > 0.0 && self.words_per_second.is_finite()) {
            return bad(format!(
                "words_per_second must be positive, got {}",
                self.words_per_second
            ));
        }
        Ok(())
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Emits every word, then with probability `p_repeat` the same word again,
/// then with probability `p_filler` a uniformly chosen filler.
pub fn simulate_speaking_style<S: AsRef<str>, R: Rng + ?Sized>(
    words: &[S],
    cfg: &SimConfig,
    rng: &mut R,
) -> Vec<String> {
    let mut out = Vec::with_capacity(words.len() + words.len() / 32);
    for word in words {
        let word = word.as_ref();
        out.push(word.to_owned());
        if rng.random::<f64>() < cfg.p_repeat {
            out.push(word.to_owned());
        }
        if rng.random::<f64>() < cfg.p_filler {
            if let Some(filler) = cfg.fillers.choose(rng) {
                out.push(filler.clone());
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrimStrategy {
    /// Keep the beginning.
    Back,
    /// Keep the end.
    Front,
    /// Keep a window from the middle.
    Both,
}

const STRATEGIES: [TrimStrategy; 3] = [TrimStrategy::Back, TrimStrategy::Front, TrimStrategy::Both];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrimPlan {
    pub chosen_len: usize,
    pub strategy: TrimStrategy,
    /// Window start, used by [`TrimStrategy::Both`].
    pub start: usize,
}

impl TrimPlan {
    pub fn draw<R: Rng + ?Sized>(len: usize, cfg: &SimConfig, rng: &mut R) -> Self {
        let chosen_len = *cfg.avg_lengths.choose(rng).expect("avg_lengths validated non-empty");
        let strategy = *STRATEGIES.choose(rng).expect("non-empty");
        let start = if strategy == TrimStrategy::Both && chosen_len < len {
            rng.random_range(0..=len - chosen_len)
        } else {
            0
        };
        Self {
            chosen_len,
            strategy,
            start,
        }
    }

    /// The kept range of a sequence of `len` words.
    pub fn range(&self, len: usize) -> Range<usize> {
        if self.chosen_len >= len {
            return 0..len;
        }
        match self.strategy {
            TrimStrategy::Back => 0..self.chosen_len,
            TrimStrategy::Front => len - self.chosen_len..len,
            TrimStrategy::Both => {
                let start = self.start.min(len - self.chosen_len);
                start..start + self.chosen_len
            }
        }
    }
}

/// Cuts `words` to a randomly chosen length using a random trimming strategy.
pub fn trim_utterance<'a, S, R: Rng + ?Sized>(words: &'a [S], cfg: &SimConfig, rng: &mut R) -> &'a [S] {
    let plan = TrimPlan::draw(words.len(), cfg, rng);
    &words[plan.range(words.len())]
}

/// Turns clean text into a timestamped spoken-style conversation.
///
/// The text is walked in regions of `max(avg_lengths)` words; each region is
/// trimmed to a drawn length (words trimmed off are dropped, as an ASR segment
/// boundary would), roughened, and timed at `words_per_second`.
pub fn simulate_conversation(id: &str, source: &str, cfg: &SimConfig) -> Result<Conversation, SimError> {
    cfg.validate()?;
    if tokenize(source).is_empty() {
        return Err(SimError::EmptySource);
    }
    let words: Vec<&str> = source.split_whitespace().collect();
    let region = *cfg.avg_lengths.iter().max().expect("validated non-empty");
    let mut rng = cfg.rng();
    let mut utterances = Vec::new();
    let mut clock = 0.0;
    for chunk in words.chunks(region) {
        let kept = trim_utterance(chunk, cfg, &mut rng);
        let spoken = simulate_speaking_style(kept, cfg, &mut rng);
        let text = spoken.join(" ");
        if tokenize(&text).is_empty() {
            continue;
        }
        let duration = spoken.len() as f64 / cfg.words_per_second;
        let index = utterances.len();
        utterances.push(Utterance::new(
            format!("{id}-u{index:04}"),
            text,
            clock,
            clock + duration,
        ));
        clock += duration;
    }
    Ok(Conversation::new(id, utterances))
}

/// Split for the `index`-th simulated conversation, in an 8:1:1 rotation.
pub fn split_for_index(index: usize) -> Split {
    match index % 10 {
        8 => Split::Dev,
        9 => Split::Test,
        _ => Split::Train,
    }
}

/// Windows `conv` under `policy` and pairs each window, plus the whole
/// conversation, with an extractive draft summary ready for human editing.
pub fn draft_samples(conv: &Conversation, policy: WindowPolicy, split: Split) -> Result<Vec<CorpusSample>, SessionError> {
    let mut session = Session::new(conv.id.clone(), policy)?;
    let mut requests = Vec::new();
    for u in &conv.utterances {
        requests.extend(session.ingest(u.clone())?);
    }
    requests.extend(session.end()?);
    Ok(requests
        .into_iter()
        .filter_map(|r| {
            let transcript = r.transcript();
            let summary = extractive_summarize(&transcript);
            if summary.is_empty() {
                return None;
            }
            let id = match r.window_index {
                Some(w) => format!("{}-w{w:03}", conv.id),
                None => format!("{}-global", conv.id),
            };
            Some(CorpusSample {
                id,
                split,
                scope: r.scope,
                source: Source::Sim,
                transcript,
                summary,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn numbered(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("w{i}")).collect()
    }

    fn quiet() -> SimConfig {
        SimConfig {
            p_repeat: 0.0,
            p_filler: 0.0,
            ..SimConfig::default()
        }
    }

    #[test]
    fn zero_probabilities_pass_through() {
        let words = numbered(500);
        let out = simulate_speaking_style(&words, &quiet(), &mut quiet().rng());
        assert_eq!(out, words);
    }

    #[test]
    fn same_seed_same_output() {
        let cfg = SimConfig {
            p_repeat: 0.2,
            p_filler: 0.2,
            ..SimConfig::default()
        };
        let words = numbered(300);
        let a = simulate_speaking_style(&words, &cfg, &mut cfg.rng());
        let b = simulate_speaking_style(&words, &cfg, &mut cfg.rng());
        assert_eq!(a, b);
        let other = SimConfig { seed: 1, ..cfg.clone() };
        assert_ne!(a, simulate_speaking_style(&words, &other, &mut other.rng()));
    }

    #[test]
    fn trim_plan_ranges() {
        let plan = |strategy, start| TrimPlan {
            chosen_len: 5,
            strategy,
            start,
        };
        assert_eq!(plan(TrimStrategy::Back, 0).range(10), 0..5);
        assert_eq!(plan(TrimStrategy::Front, 0).range(10), 5..10);
        assert_eq!(plan(TrimStrategy::Both, 2).range(10), 2..7);
        assert_eq!(plan(TrimStrategy::Both, 2).range(4), 0..4);
    }

    #[test]
    fn both_strategy_start_is_uniform_over_valid_offsets() {
        // 10 words, length 5: starts 0..=5 should each appear ~1/6 of the time
        let cfg = SimConfig {
            avg_lengths: vec![5],
            ..SimConfig::default()
        };
        let mut rng = cfg.rng();
        let mut counts = [0usize; 6];
        let mut both = 0;
        for _ in 0..60_000 {
            let plan = TrimPlan::draw(10, &cfg, &mut rng);
            if plan.strategy == TrimStrategy::Both {
                counts[plan.start] += 1;
                both += 1;
            }
        }
        let expected = both as f64 / 6.0;
        for c in counts {
            // 5 sigma of a binomial(both, 1/6)
            let sigma = (both as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
            assert!((c as f64 - expected).abs() < 5.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn conversation_identity_configuration() {
        let source = numbered(37).join(" ");
        let cfg = SimConfig {
            avg_lengths: vec![37],
            ..quiet()
        };
        let conv = simulate_conversation("c", &source, &cfg).unwrap();
        assert_eq!(conv.utterances.len(), 1);
        assert_eq!(conv.utterances[0].text, source);
        assert!(conv.validate().is_valid());
    }

    #[test]
    fn conversation_chunk_count() {
        let source = numbered(1000).join(" ");
        let cfg = SimConfig {
            avg_lengths: vec![20],
            ..SimConfig::default()
        };
        let conv = simulate_conversation("c", &source, &cfg).unwrap();
        assert_eq!(conv.utterances.len(), 50);
        for u in &conv.utterances {
            let plain = u.text.split_whitespace().filter(|w| w.starts_with('w')).count();
            assert!(plain <= 2 * 20);
        }
        assert!(conv.validate().is_valid());
        assert_eq!(conv, simulate_conversation("c", &source, &cfg).unwrap());
    }

    #[test]
    fn drafts_cover_every_window_and_the_whole_conversation() {
        let source = numbered(200).join(" ");
        let cfg = SimConfig {
            avg_lengths: vec![10],
            ..quiet()
        };
        let conv = simulate_conversation("d", &source, &cfg).unwrap();
        let samples = draft_samples(&conv, WindowPolicy::new(4, 30.0).unwrap(), Split::Dev).unwrap();
        // 20 utterances of ~2.9 s -> 5 local windows of 4, then one global
        assert_eq!(samples.len(), 6);
        assert_eq!(samples[5].scope, crate::Scope::Global);
        assert_eq!(samples[5].transcript, conv.transcript());
        assert!(samples.iter().all(|s| s.split == Split::Dev && s.source == Source::Sim));
        assert!(samples.iter().all(|s| s.check().is_ok()));
        assert_eq!(split_for_index(0), Split::Train);
        assert_eq!(split_for_index(18), Split::Dev);
        assert_eq!(split_for_index(29), Split::Test);
    }

    #[test]
    fn empty_source_rejected() {
        assert_eq!(
            simulate_conversation("c", " .. ", &SimConfig::default()),
            Err(SimError::EmptySource)
        );
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig { p_repeat: 1.5, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { fillers: vec![], ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { fillers: vec![], p_filler: 0.0, ..SimConfig::default() }.validate().is_ok());
        assert!(SimConfig { avg_lengths: vec![0], ..SimConfig::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn removing_fillers_and_duplicates_recovers_input(
            n in 1usize..200, seed in any::<u64>(), p in 0.0f64..0.5
        ) {
            let cfg = SimConfig {
                p_repeat: p,
                p_filler: p,
                fillers: vec!["ờ".into(), "à".into()],
                seed,
                ..SimConfig::default()
            };
            let words = numbered(n);
            let out = simulate_speaking_style(&words, &cfg, &mut cfg.rng());
            prop_assert!(out.len() >= words.len());
            let mut recovered: Vec<String> = Vec::new();
            for w in out.into_iter().filter(|w| !cfg.fillers.contains(w)) {
                if recovered.last() != Some(&w) {
                    recovered.push(w);
                }
            }
            prop_assert_eq!(recovered, words);
        }

        #[test]
        fn trim_output_is_contiguous_slice(n in 1usize..60, seed in any::<u64>()) {
            let cfg = SimConfig { avg_lengths: vec![3, 10, 25], seed, ..SimConfig::default() };
            let words = numbered(n);
            let out = trim_utterance(&words, &cfg, &mut cfg.rng());
            prop_assert!(!out.is_empty());
            let first: usize = out[0][1..].parse().unwrap();
            for (k, w) in out.iter().enumerate() {
                prop_assert_eq!(w, &format!("w{}", first + k));
            }
        }
    }
}
