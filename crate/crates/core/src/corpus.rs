//! Summarization corpora: JSON-lines I/O, split statistics and annotation checks.
//!
//! One record per line with keys `id`, `split`, `scope`, `source`,
//! `transcript` and `summary`. Text fields use JSON string escaping, so
//! newlines and quotes inside transcripts survive a round trip.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rouge::tokenize;
use crate::transcript::Scope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Transcribed real-world recordings.
    Real,
    /// Simulated spoken-style text.
    Sim,
    /// Model-generated summaries without human editing.
    Syn,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Real, Source::Sim, Source::Syn];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Real => "real",
            Source::Sim => "sim",
            Source::Syn => "syn",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSample {
    pub id: String,
    pub split: Split,
    pub scope: Scope,
    pub source: Source,
    pub transcript: String,
    pub summary: String,
}

impl CorpusSample {
    pub fn check(&self) -> Result<(), String> {
        if self.transcript.trim().is_empty() {
            return Err("empty transcript".into());
        }
        if self.summary.trim().is_empty() {
            return Err("empty summary".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus file not found: {0}")]
    NotFound(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid sample {id:?}: {message}")]
    InvalidSample { id: String, message: String },
    #[error("transcript has no tokens")]
    EmptyTranscript,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parses JSON-lines records, skipping blank lines. Line numbers are 1-based.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<CorpusSample>, CorpusError> {
    let mut samples = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = index + 1;
        let sample: CorpusSample = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        sample.check().map_err(|message| CorpusError::Parse {
            line: line_no,
            message,
        })?;
        samples.push(sample);
    }
    Ok(samples)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusSample>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => CorpusError::NotFound(path.display().to_string()),
        _ => CorpusError::Io(e),
    })?;
    read_corpus(BufReader::new(file))
}

pub fn write_samples<W: Write>(samples: &[CorpusSample], mut writer: W) -> Result<(), CorpusError> {
    for sample in samples {
        sample.check().map_err(|message| CorpusError::InvalidSample {
            id: sample.id.clone(),
            message,
        })?;
        let line = serde_json::to_string(sample).expect("sample serializes");
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_corpus(samples: &[CorpusSample], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let file = File::create(path)?;
    write_samples(samples, BufWriter::new(file))
}

/// Sample count and word totals for one split × scope × source cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CellStats {
    pub count: usize,
    pub summary_words: usize,
    pub input_words: usize,
}

impl CellStats {
    fn add(&mut self, other: CellStats) {
        self.count += other.count;
        self.summary_words += other.summary_words;
        self.input_words += other.input_words;
    }

    pub fn avg_summary_length(&self) -> Option<f64> {
        (self.count > 0).then(|| self.summary_words as f64 / self.count as f64)
    }

    pub fn avg_input_length(&self) -> Option<f64> {
        (self.count > 0).then(|| self.input_words as f64 / self.count as f64)
    }
}

pub type CellKey = (Split, Scope, Source);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    cells: BTreeMap<CellKey, CellStats>,
}

/// One row of machine-readable statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub split: Split,
    pub scope: Scope,
    pub source: Source,
    #[serde(flatten)]
    pub stats: CellStats,
}

/// Columns of the standard layout: real local, real global, sim local, syn local.
const STANDARD_COLUMNS: [(Source, Scope); 4] = [
    (Source::Real, Scope::Local),
    (Source::Real, Scope::Global),
    (Source::Sim, Scope::Local),
    (Source::Syn, Scope::Local),
];

impl CorpusStats {
    pub fn cell(&self, split: Split, scope: Scope, source: Source) -> CellStats {
        self.cells.get(&(split, scope, source)).copied().unwrap_or_default()
    }

    pub fn count(&self, split: Split, scope: Scope, source: Source) -> usize {
        self.cell(split, scope, source).count
    }

    /// Totals over all splits for one source × scope column.
    pub fn column(&self, source: Source, scope: Scope) -> CellStats {
        let mut total = CellStats::default();
        for split in Split::ALL {
            total.add(self.cell(split, scope, source));
        }
        total
    }

    pub fn split_total(&self, split: Split) -> CellStats {
        let mut total = CellStats::default();
        for (key, cell) in &self.cells {
            if key.0 == split {
                total.add(*cell);
            }
        }
        total
    }

    pub fn total(&self) -> CellStats {
        let mut total = CellStats::default();
        for cell in self.cells.values() {
            total.add(*cell);
        }
        total
    }

    pub fn records(&self) -> Vec<CellRecord> {
        self.cells
            .iter()
            .map(|(&(split, scope, source), &stats)| CellRecord {
                split,
                scope,
                source,
                stats,
            })
            .collect()
    }

    fn columns(&self) -> Vec<(Source, Scope)> {
        let mut cols = STANDARD_COLUMNS.to_vec();
        for source in Source::ALL {
            for scope in [Scope::Local, Scope::Global] {
                if !cols.contains(&(source, scope)) && self.column(source, scope).count > 0 {
                    cols.push((source, scope));
                }
            }
        }
        cols
    }

    /// Counts per split with word totals and averages per column.
    pub fn render_table(&self) -> String {
        let cols = self.columns();
        let mut out = String::new();
        let _ = write!(out, "{:<20}", "");
        for (source, scope) in &cols {
            let _ = write!(out, "{:>13}", format!("{source}/{scope}"));
        }
        let _ = writeln!(out, "{:>13}", "all");
        for split in Split::ALL {
            let _ = write!(out, "{:<20}", split.as_str());
            for &(source, scope) in &cols {
                let _ = write!(out, "{:>13}", self.count(split, scope, source));
            }
            let _ = writeln!(out, "{:>13}", self.split_total(split).count);
        }
        let total = self.total();
        type Render = fn(&CellStats) -> String;
        let rows: [(&str, Render); 5] = [
            ("total", |c| c.count.to_string()),
            ("#summary words", |c| c.summary_words.to_string()),
            ("#input words", |c| c.input_words.to_string()),
            ("avg summary length", |c| {
                c.avg_summary_length().map_or("-".into(), |v| format!("{v:.2}"))
            }),
            ("avg input length", |c| {
                c.avg_input_length().map_or("-".into(), |v| format!("{v:.2}"))
            }),
        ];
        for (label, render) in rows {
            let _ = write!(out, "{label:<20}");
            for &(source, scope) in &cols {
                let _ = write!(out, "{:>13}", render(&self.column(source, scope)));
            }
            let _ = writeln!(out, "{:>13}", render(&total));
        }
        out
    }
}

pub fn corpus_stats<'a, I>(samples: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a CorpusSample>,
{
    let mut stats = CorpusStats::default();
    for s in samples {
        stats.cells.entry((s.split, s.scope, s.source)).or_default().add(CellStats {
            count: 1,
            summary_words: tokenize(&s.summary).len(),
            input_words: tokenize(&s.transcript).len(),
        });
    }
    stats
}

/// Summary tokens divided by transcript tokens.
pub fn compression_rate(transcript: &str, summary: &str) -> Result<f64, CorpusError> {
    let t = tokenize(transcript).len();
    if t == 0 {
        return Err(CorpusError::EmptyTranscript);
    }
    Ok(tokenize(summary).len() as f64 / t as f64)
}

/// Largest allowed summary/transcript token ratio, as numerator/denominator.
pub const MAX_COMPRESSION: (usize, usize) = (1, 5);
pub const DEFAULT_SHORT_THRESHOLD: usize = 50;

#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GuidelineFinding {
    CompressionExceeded { summary_tokens: usize, transcript_tokens: usize },
    EmptySummary,
    EmptyTranscript,
    MissingEntity { entity: String },
}

impl fmt::Display for GuidelineFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CompressionExceeded {
                summary_tokens,
                transcript_tokens,
            } => write!(
                f,
                "summary has {summary_tokens} tokens, more than 20% of the {transcript_tokens}-token transcript"
            ),
            Self::EmptySummary => f.write_str("summary is empty"),
            Self::EmptyTranscript => f.write_str("transcript is empty"),
            Self::MissingEntity { entity } => {
                write!(f, "entity {entity:?} appears in the transcript but not the summary")
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GuidelineReport {
    pub compression_ok: bool,
    pub compression_rate: f64,
    pub exempt_short: bool,
    pub findings: Vec<GuidelineFinding>,
}

impl GuidelineReport {
    pub fn passes(&self) -> bool {
        self.findings.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidelineOptions {
    /// Transcripts with fewer tokens than this are exempt from the length cap.
    pub short_threshold: usize,
    /// Entities that must be kept when the transcript mentions them.
    pub entities: Vec<String>,
}

impl Default for GuidelineOptions {
    fn default() -> Self {
        Self {
            short_threshold: DEFAULT_SHORT_THRESHOLD,
            entities: Vec::new(),
        }
    }
}

fn contains_phrase(haystack: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && haystack.windows(phrase.len()).any(|w| w == phrase)
}

/// Checks the automatable annotation rules: the length cap (with the
/// short-dialogue exemption), a non-empty summary, and optional entity retention.
pub fn validate_guideline(transcript: &str, summary: &str, opts: &GuidelineOptions) -> GuidelineReport {
    let t_tokens = tokenize(transcript);
    let s_tokens = tokenize(summary);
    let mut findings = Vec::new();

    let exempt_short = t_tokens.len() < opts.short_threshold;
    let (num, den) = MAX_COMPRESSION;
    let within_cap = s_tokens.len() * den <= t_tokens.len() * num;
    let compression_ok = within_cap || exempt_short;
    let compression_rate = if t_tokens.is_empty() {
        findings.push(GuidelineFinding::EmptyTranscript);
        0.0
    } else {
        s_tokens.len() as f64 / t_tokens.len() as f64
    };
    if !compression_ok {
        findings.push(GuidelineFinding::CompressionExceeded {
            summary_tokens: s_tokens.len(),
            transcript_tokens: t_tokens.len(),
        });
    }
    if s_tokens.is_empty() {
        findings.push(GuidelineFinding::EmptySummary);
    }
    for entity in &opts.entities {
        let phrase = tokenize(entity);
        if contains_phrase(&t_tokens, &phrase) && !contains_phrase(&s_tokens, &phrase) {
            findings.push(GuidelineFinding::MissingEntity {
                entity: entity.clone(),
            });
        }
    }
    GuidelineReport {
        compression_ok,
        compression_rate,
        exempt_short,
        findings,
    }
}

pub fn validate_sample(sample: &CorpusSample, opts: &GuidelineOptions) -> GuidelineReport {
    validate_guideline(&sample.transcript, &sample.summary, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn sample(id: &str, split: Split, scope: Scope, source: Source) -> CorpusSample {
        CorpusSample {
            id: id.into(),
            split,
            scope,
            source,
            transcript: "bác sĩ hỏi bệnh nhân về cơn sốt".into(),
            summary: "hỏi về sốt".into(),
        }
    }

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("t{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn reads_valid_lines() {
        let text = r#"{"id":"1","split":"train","scope":"local","source":"real","transcript":"a b","summary":"a"}
{"id":"2","split":"dev","scope":"global","source":"sim","transcript":"a b","summary":"a"}

{"id":"3","split":"test","scope":"local","source":"syn","transcript":"a b","summary":"a"}
"#;
        let samples = read_corpus(Cursor::new(text)).unwrap();
        assert_eq!(samples.len(), 3);
        assert_eq!(samples[2].source, Source::Syn);
    }

    #[test]
    fn empty_summary_is_parse_error_with_line() {
        let text = concat!(
            r#"{"id":"1","split":"train","scope":"local","source":"real","transcript":"a b","summary":"a"}"#,
            "\n",
            r#"{"id":"2","split":"train","scope":"local","source":"real","transcript":"a b","summary":" "}"#,
        );
        match read_corpus(Cursor::new(text)) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_split_is_parse_error() {
        let text = r#"{"id":"1","split":"validation","scope":"local","source":"real","transcript":"a","summary":"a"}"#;
        assert!(matches!(
            read_corpus(Cursor::new(text)),
            Err(CorpusError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn missing_file_is_not_found() {
        assert!(matches!(
            load_corpus("/definitely/not/here.jsonl"),
            Err(CorpusError::NotFound(_))
        ));
    }

    #[test]
    fn empty_corpus_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        write_corpus(&[], &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap().len(), 0);
        assert!(load_corpus(&path).unwrap().is_empty());
    }

    #[test]
    fn embedded_newlines_are_escaped() {
        let mut s = sample("n", Split::Train, Scope::Local, Source::Real);
        s.transcript = "dòng một\ndòng \"hai\"\r\n\tba".into();
        let mut buf = Vec::new();
        write_samples(std::slice::from_ref(&s), &mut buf).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 1);
        assert_eq!(read_corpus(Cursor::new(buf)).unwrap(), vec![s]);
    }

    #[test]
    fn writing_invalid_sample_fails() {
        let mut s = sample("n", Split::Train, Scope::Local, Source::Real);
        s.summary.clear();
        assert!(matches!(
            write_samples(&[s], Vec::new()),
            Err(CorpusError::InvalidSample { .. })
        ));
    }

    #[test]
    fn stats_cell_counts() {
        let samples = vec![
            sample("a", Split::Train, Scope::Local, Source::Real),
            sample("b", Split::Train, Scope::Local, Source::Real),
            sample("c", Split::Test, Scope::Global, Source::Real),
        ];
        let stats = corpus_stats(&samples);
        assert_eq!(stats.count(Split::Train, Scope::Local, Source::Real), 2);
        assert_eq!(stats.count(Split::Test, Scope::Global, Source::Real), 1);
        assert_eq!(stats.count(Split::Dev, Scope::Local, Source::Real), 0);
        assert_eq!(stats.count(Split::Train, Scope::Local, Source::Sim), 0);
        assert_eq!(stats.total().count, 3);
        assert_eq!(stats.total().summary_words, 9);
        assert_eq!(stats.total().input_words, 24);
        let col = stats.column(Source::Real, Scope::Local);
        assert_eq!(col.avg_summary_length(), Some(3.0));
        assert_eq!(col.avg_input_length(), Some(8.0));
        let table = stats.render_table();
        assert!(table.contains("real/local"));
        assert!(table.contains("avg input length"));
    }

    #[test]
    fn stats_are_permutation_invariant() {
        let mut samples: Vec<_> = (0..20)
            .map(|i| {
                let mut s = sample(
                    &i.to_string(),
                    Split::ALL[i % 3],
                    if i % 2 == 0 { Scope::Local } else { Scope::Global },
                    Source::ALL[i % 3],
                );
                s.transcript = words(i + 1);
                s
            })
            .collect();
        let before = corpus_stats(&samples);
        samples.reverse();
        samples.swap(3, 11);
        assert_eq!(before, corpus_stats(&samples));
    }

    #[test]
    fn compression_rate_examples() {
        assert_eq!(compression_rate(&words(100), &words(30)).unwrap(), 0.30);
        assert_eq!(compression_rate(&words(100), &words(100)).unwrap(), 1.0);
        assert_eq!(compression_rate(&words(100), &words(20)).unwrap(), 0.20);
        assert!(matches!(compression_rate("", "x"), Err(CorpusError::EmptyTranscript)));
    }

    #[test]
    fn guideline_boundaries() {
        let opts = GuidelineOptions::default();
        let pass = validate_guideline(&words(100), &words(20), &opts);
        assert!(pass.compression_ok && pass.passes() && !pass.exempt_short);
        let fail = validate_guideline(&words(100), &words(21), &opts);
        assert!(!fail.compression_ok);
        assert_eq!(fail.findings.len(), 1);
        let short = validate_guideline(&words(30), &words(15), &GuidelineOptions {
            short_threshold: 50,
            ..GuidelineOptions::default()
        });
        assert!(short.exempt_short && short.compression_ok);
    }

    #[test]
    fn guideline_monotone_in_summary_length() {
        let opts = GuidelineOptions::default();
        let transcript = words(120);
        let mut failed = false;
        for n in 1..120 {
            let ok = validate_guideline(&transcript, &words(n), &opts).compression_ok;
            assert!(!(failed && ok), "pass after failure at {n}");
            failed |= !ok;
        }
        assert!(failed);
    }

    #[test]
    fn guideline_entity_retention() {
        let opts = GuidelineOptions {
            short_threshold: 0,
            entities: vec!["Sốt xuất huyết".into(), "ung thư".into()],
        };
        let transcript = format!("bệnh nhân bị sốt xuất huyết {}", words(60));
        let report = validate_guideline(&transcript, "bệnh nhân sốt", &opts);
        assert_eq!(
            report.findings,
            vec![GuidelineFinding::MissingEntity {
                entity: "Sốt xuất huyết".into()
            }]
        );
        let report = validate_guideline(&transcript, "bị sốt xuất huyết", &opts);
        assert!(report.passes());
    }

    #[test]
    fn empty_summary_reported() {
        let report = validate_guideline(&words(10), "", &GuidelineOptions::default());
        assert!(report.findings.contains(&GuidelineFinding::EmptySummary));
    }
}
