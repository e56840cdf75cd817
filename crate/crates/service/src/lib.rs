//! Streaming summarization service and the `rtsum` command-line tool.

pub mod backend;
pub mod cli;
pub mod config;
pub mod serve;
