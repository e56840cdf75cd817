//! Test-set evaluation: summarize each transcript and score it against the reference.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusSample, Split};
use crate::rouge::{corpus_rouge, RougeError, RougeReport};
use crate::summarize::{BackendError, SummarizeTask};
use crate::transcript::Scope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeFilter {
    Local,
    Global,
    #[default]
    All,
}

impl ScopeFilter {
    pub fn admits(self, scope: Scope) -> bool {
        match self {
            ScopeFilter::All => true,
            ScopeFilter::Local => scope == Scope::Local,
            ScopeFilter::Global => scope == Scope::Global,
        }
    }
}

impl std::str::FromStr for ScopeFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local" => Ok(Self::Local),
            "global" => Ok(Self::Global),
            "all" => Ok(Self::All),
            other => Err(format!("unknown scope filter {other:?} (expected local, global or all)")),
        }
    }
}

/// Test-split samples admitted by `filter`, in corpus order.
pub fn test_samples(samples: &[CorpusSample], filter: ScopeFilter) -> Vec<&CorpusSample> {
    samples
        .iter()
        .filter(|s| s.split == Split::Test && filter.admits(s.scope))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleFailure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub local: Option<RougeReport>,
    pub global: Option<RougeReport>,
    pub overall: RougeReport,
    /// Samples whose summary could not be produced; they score zero.
    pub failures: Vec<SampleFailure>,
}

impl EvaluationReport {
    /// Scores as percentages, one row per scope.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<8} {:>8} {:>8} {:>8} {:>8}", "scope", "n", "R-1", "R-2", "R-L");
        let rows = [
            ("local", self.local.as_ref()),
            ("global", self.global.as_ref()),
            ("all", Some(&self.overall)),
        ];
        for (label, report) in rows {
            if let Some(r) = report {
                let _ = writeln!(
                    out,
                    "{:<8} {:>8} {:>8.2} {:>8.2} {:>8.2}",
                    label,
                    r.sample_count,
                    r.r1.f1 * 100.0,
                    r.r2.f1 * 100.0,
                    r.rl.f1 * 100.0
                );
            }
        }
        if !self.failures.is_empty() {
            let _ = writeln!(out, "{} sample(s) failed to summarize and scored 0", self.failures.len());
        }
        out
    }
}

/// Scores pre-computed candidates (`Err` entries count as empty summaries).
pub fn score_candidates(
    samples: &[&CorpusSample],
    candidates: &[Result<String, BackendError>],
) -> Result<EvaluationReport, RougeError> {
    assert_eq!(samples.len(), candidates.len(), "one candidate per sample");
    let mut failures = Vec::new();
    let texts: Vec<&str> = samples
        .iter()
        .zip(candidates)
        .map(|(s, c)| match c {
            Ok(text) => text.as_str(),
            Err(e) => {
                failures.push(SampleFailure {
                    id: s.id.clone(),
                    error: e.to_string(),
                });
                ""
            }
        })
        .collect();
    let pairs_for = |scope: Option<Scope>| {
        samples
            .iter()
            .zip(&texts)
            .filter(move |(s, _)| scope.is_none_or(|sc| s.scope == sc))
            .map(|(s, c)| (*c, s.summary.as_str()))
    };
    let overall = corpus_rouge(pairs_for(None))?;
    Ok(EvaluationReport {
        local: corpus_rouge(pairs_for(Some(Scope::Local))).ok(),
        global: corpus_rouge(pairs_for(Some(Scope::Global))).ok(),
        overall,
        failures,
    })
}

/// Summarizes and scores every admitted test sample with a synchronous backend.
pub fn evaluate_with<F>(samples: &[CorpusSample], filter: ScopeFilter, mut summarize: F) -> Result<EvaluationReport, RougeError>
where
    F: FnMut(&SummarizeTask, &CorpusSample) -> Result<String, BackendError>,
{
    let selected = test_samples(samples, filter);
    let candidates: Vec<_> = selected
        .iter()
        .map(|s| summarize(&SummarizeTask::new(s.scope, s.transcript.clone()), s))
        .collect();
    score_candidates(&selected, &candidates)
}
