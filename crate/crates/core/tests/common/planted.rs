//! A 60-pair corpus with known curation violations.

#![allow(dead_code)]

use nbdoc_core::ingest::{CellMeta, CodeMarkdownPair, PairId, PairProvenance};

const OFF_TOPIC: &str = "Tune chart colours before presenting slides";

pub fn topical(i: PairId) -> String {
    format!("Load frame {i} from the csv file, then the mean stat of {i}")
}

/// Exactly `n` words that still describe the code of pair `i`.
pub fn words(i: PairId, n: usize) -> String {
    let tag = i.to_string();
    let base = ["frame", tag.as_str(), "stat", tag.as_str()];
    (0..n).map(|k| base[k % base.len()]).collect::<Vec<_>>().join(" ")
}

pub fn code(i: PairId) -> String {
    format!("frame_{i} = load(\"file_{i}.csv\")\nstat_{i} = frame_{i}.mean()\n")
}

pub fn pair(id: PairId, code: String, markdown: String, tier: u32) -> CodeMarkdownPair {
    CodeMarkdownPair {
        pair_id: id,
        code,
        markdown_raw: markdown.clone(),
        markdown_normalized: markdown,
        provenance: PairProvenance { notebook_id: format!("nb{}", id % 7), author_tier: tier, is_fork: false },
        cell_meta: CellMeta::default(),
    }
}

/// 1-5 too short, 6-10 too long, 11-20 off topic, 21-30 tier 0, then three
/// triangles of identical code (31-33, 34-36, 37-39). 40 has exactly the
/// minimum word count and 41 exactly the maximum.
pub fn planted() -> Vec<CodeMarkdownPair> {
    (1..=60)
        .map(|id| match id {
            1..=5 => pair(id, code(id), words(id, 3), 1),
            6..=10 => pair(id, code(id), words(id, 282), 1),
            11..=20 => pair(id, code(id), OFF_TOPIC.into(), 1),
            21..=30 => pair(id, code(id), topical(id), 0),
            31..=39 => {
                let root = 31 + (id - 31) / 3 * 3;
                pair(id, code(root), topical(root), 1)
            }
            40 => pair(id, code(id), words(id, 4), 1),
            41 => pair(id, code(id), words(id, 281), 1),
            _ => pair(id, code(id), topical(id), 1),
        })
        .collect()
}

