//! Few-shot prompt construction for chat-completion backends.

use std::fmt;

use crate::summarize::{BackendError, ExamplePair, SummarizeTask};
use crate::transcript::Scope;

/// Default instruction, restating the annotation rules the reference
/// summaries were edited against.
pub const DEFAULT_INSTRUCTION: &str = "\
You summarize transcripts of spoken medical conversations.
Follow these rules:
1. Keep the summary as short as possible without losing key information; it must be at most 20% of the length of the transcript, except for very short dialogues.
2. Keep as many medical named entities as the length limit allows.
3. Keep the purpose of the passage: a question should be summarized as a question.
4. The summary must read naturally.
Ignore hesitations, filler words and repeated words in the transcript.
Write the summary in the same language as the transcript.";

/// A rendered prompt, split into the system instruction and the user turn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

impl fmt::Display for Prompt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\n\n{}", self.system, self.user)
    }
}

fn task_heading(scope: Scope) -> &'static str {
    match scope {
        Scope::Local => "Summarize this segment of the conversation.",
        Scope::Global => "Summarize the entire conversation.",
    }
}

/// Lays out `instruction`, each example pair in order, then the task transcript.
///
/// `required` is the number of example pairs the caller expects (two by
/// default); a mismatch or an example with a blank side is rejected.
pub fn build_prompt(
    task: &SummarizeTask,
    examples: &[ExamplePair],
    instruction: Option<&str>,
    required: usize,
) -> Result<Prompt, BackendError> {
    if examples.len() != required {
        return Err(BackendError::InvalidExample(format!(
            "expected {required} example pair(s), got {}",
            examples.len()
        )));
    }
    if task.transcript.trim().is_empty() {
        return Err(BackendError::EmptyTranscript);
    }
    let mut user = String::new();
    for (i, ex) in examples.iter().enumerate() {
        if ex.transcript.trim().is_empty() {
            return Err(BackendError::InvalidExample(format!(
                "example {} has an empty transcript",
                i + 1
            )));
        }
        if ex.summary.trim().is_empty() {
            return Err(BackendError::InvalidExample(format!(
                "example {} has an empty summary",
                i + 1
            )));
        }
        user.push_str(&format!(
            "Example {}\nTranscript:\n{}\nSummary:\n{}\n\n",
            i + 1,
            ex.transcript.trim(),
            ex.summary.trim()
        ));
    }
    user.push_str(task_heading(task.scope));
    user.push_str("\nTranscript:\n");
    user.push_str(task.transcript.trim());
    user.push_str("\nSummary:\n");
    Ok(Prompt {
        system: instruction.unwrap_or(DEFAULT_INSTRUCTION).trim().to_owned(),
        user,
    })
}
