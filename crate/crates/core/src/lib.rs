//! Windowed real-time summarization of streamed conversation transcripts.
//!
//! Utterances arrive one at a time; a [`session::Session`] groups them into
//! local windows (at most `n_max` utterances or `t_max` seconds) and asks for
//! one local summary per window, then a single global summary once the
//! conversation ends. Around that core sit the pieces needed to build and
//! judge such a system: ROUGE scoring, a spoken-style conversation simulator,
//! corpus I/O and statistics, an annotation budget calculator, and the
//! newline-delimited wire protocol used by the streaming service.

pub mod budget;
pub mod corpus;
pub mod evaluate;
pub mod extractive;
pub mod prompt;
pub mod rouge;
pub mod session;
pub mod simulate;
pub mod summarize;
pub mod transcript;
pub mod wire;

pub use rouge::{tokenize, RougeReport, RougeScore};
pub use session::{FlushDecision, Session, SessionEngine, SummaryRequest};
pub use summarize::{BackendConfig, BackendError, BackendKind, SummarizeTask};
pub use transcript::{Conversation, Scope, SummaryUnit, Utterance, WindowPolicy};
