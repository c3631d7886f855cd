//! Notebook ingestion: cells, structural pairing and markdown cleanup.

mod normalize;
mod notebook;
mod pairing;

use serde::{Deserialize, Serialize};

pub use normalize::{length_filter, normalize_markdown, word_count};
pub use notebook::{parse_notebook, parse_notebook_document, NotebookDocument};
pub use pairing::{number_pairs, pair_cells};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("malformed notebook: {0}")]
    MalformedNotebook(String),
    #[error("unsupported notebook format version {0} (expected 4)")]
    UnsupportedFormatVersion(i64),
    #[error("invalid word bounds: min {min} > max {max}")]
    InvalidBounds { min: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Code,
    Markdown,
    /// Raw cells are kept so they still separate their neighbours.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotebookCell {
    pub index: usize,
    pub kind: CellKind,
    pub source: String,
    pub execution_count: Option<u64>,
    pub has_outputs: bool,
}

impl NotebookCell {
    pub fn meta(&self) -> CellMeta {
        CellMeta {
            index: self.index,
            execution_count: self.execution_count,
            has_outputs: self.has_outputs,
        }
    }
}

/// Execution metadata of a code cell, carried on each pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CellMeta {
    pub index: usize,
    pub execution_count: Option<u64>,
    pub has_outputs: bool,
}

impl CellMeta {
    pub fn executed(&self) -> bool {
        self.execution_count.is_some() || self.has_outputs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairProvenance {
    pub notebook_id: String,
    pub author_tier: u32,
    #[serde(default)]
    pub is_fork: bool,
}

pub type PairId = u64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeMarkdownPair {
    pub pair_id: PairId,
    pub code: String,
    pub markdown_raw: String,
    pub markdown_normalized: String,
    #[serde(flatten)]
    pub provenance: PairProvenance,
    pub cell_meta: CellMeta,
}
