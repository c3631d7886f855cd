//! Markdown documentation for notebook code cells.
//!
//! The crate pairs code cells with their markdown, measures the code with 21
//! static metrics, retrieves similar documented cells as few-shot exemplars,
//! renders prompts for a chat model and scores what comes back.

pub mod curation;
pub mod evaluation;
pub mod http;
pub mod ingest;
pub mod metrics;
pub mod par;
pub mod prompting;
pub mod retrieval;
