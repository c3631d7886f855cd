//! Conceptual filtering of pairs: semantic relevance, author tier, forks and
//! near-duplicates.

pub mod dedup;
pub mod embedding;

use serde::{Deserialize, Serialize};

use crate::ingest::{length_filter, CodeMarkdownPair, IngestError, PairId};
use crate::par::Execution;

pub use dedup::{code_similarity, near_duplicates, DuplicateGroups};
pub use embedding::{
    cosine, EmbeddingProvider, HttpEmbeddingConfig, HttpEmbeddingProvider, StubEmbeddingProvider,
};

#[derive(Debug, thiserror::Error)]
pub enum CurationError {
    #[error("invalid curation config: {0}")]
    InvalidConfig(String),
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupBackend {
    #[default]
    Shingles,
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurationConfig {
    pub semantic_threshold: f64,
    pub min_author_tier: u32,
    pub dedup_threshold: f64,
    pub dedup_backend: DedupBackend,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self {
            semantic_threshold: 0.58,
            min_author_tier: 1,
            dedup_threshold: 0.70,
            dedup_backend: DedupBackend::Shingles,
        }
    }
}

impl CurationConfig {
    pub fn validate(&self) -> Result<(), CurationError> {
        if !(-1.0..=1.0).contains(&self.semantic_threshold) {
            return Err(CurationError::InvalidConfig(format!(
                "semantic_threshold {} outside [-1, 1]",
                self.semantic_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.dedup_threshold) {
            return Err(CurationError::InvalidConfig(format!(
                "dedup_threshold {} outside [0, 1]",
                self.dedup_threshold
            )));
        }
        Ok(())
    }
}

/// Cosine similarity between the embeddings of the code and its normalized
/// markdown. Keep when the score is at least the semantic threshold.
pub fn semantic_relevance(
    pair: &CodeMarkdownPair,
    provider: &dyn EmbeddingProvider,
) -> Result<f64, CurationError> {
    let v = provider.embed(&[&pair.code, &pair.markdown_normalized])?;
    Ok(cosine(&v[0], &v[1]))
}

pub fn tier_filter(pair: &CodeMarkdownPair, min_author_tier: u32) -> bool {
    pair.provenance.author_tier >= min_author_tier
}

/// Input/output counts of one curation stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCount {
    pub stage: String,
    pub input: usize,
    pub output: usize,
    pub removed: Vec<PairId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationReport {
    pub stages: Vec<StageCount>,
}

impl CurationReport {
    pub fn stage(&self, name: &str) -> Option<&StageCount> {
        self.stages.iter().find(|s| s.stage == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<10} {:>8} {:>8} {:>8}\n", "stage", "in", "out", "removed");
        for s in &self.stages {
            out.push_str(&format!(
                "{:<10} {:>8} {:>8} {:>8}\n",
                s.stage,
                s.input,
                s.output,
                s.removed.len()
            ));
        }
        out
    }
}

/// Full curation plan: word bounds plus the conceptual filters.
#[derive(Debug, Clone, PartialEq)]
pub struct Curator {
    pub min_words: usize,
    pub max_words: usize,
    pub config: CurationConfig,
    pub execution: Execution,
}

impl Default for Curator {
    fn default() -> Self {
        Self { min_words: 4, max_words: 281, config: CurationConfig::default(), execution: Execution::default() }
    }
}

#[derive(Debug, Clone)]
pub struct CurationOutcome {
    pub kept: Vec<CodeMarkdownPair>,
    pub report: CurationReport,
}

fn apply_stage(
    report: &mut CurationReport,
    stage: &str,
    pairs: Vec<CodeMarkdownPair>,
    keep: &[bool],
) -> Vec<CodeMarkdownPair> {
    let input = pairs.len();
    let mut removed = Vec::new();
    let mut kept = Vec::with_capacity(input);
    for (pair, k) in pairs.into_iter().zip(keep) {
        if *k {
            kept.push(pair);
        } else {
            removed.push(pair.pair_id);
        }
    }
    log::info!("curation stage {stage}: {input} -> {}", kept.len());
    report.stages.push(StageCount { stage: stage.to_string(), input, output: kept.len(), removed });
    kept
}

impl Curator {
    /// Runs length → semantic → tier → fork → dedup. Pairs are processed in
    /// ascending id order, so the result does not depend on input order.
    pub fn run(
        &self,
        mut pairs: Vec<CodeMarkdownPair>,
        provider: &dyn EmbeddingProvider,
    ) -> Result<CurationOutcome, CurationError> {
        self.config.validate()?;
        if self.min_words > self.max_words {
            return Err(IngestError::InvalidBounds { min: self.min_words, max: self.max_words }.into());
        }
        pairs.sort_by_key(|p| p.pair_id);
        let mut report = CurationReport::default();

        let keep = pairs
            .iter()
            .map(|p| length_filter(p, self.min_words, self.max_words))
            .collect::<Result<Vec<_>, _>>()?;
        let pairs = apply_stage(&mut report, "length", pairs, &keep);

        let mut texts: Vec<&str> = Vec::with_capacity(pairs.len() * 2);
        for p in &pairs {
            texts.push(&p.code);
            texts.push(&p.markdown_normalized);
        }
        let vectors = provider.embed(&texts)?;
        let keep: Vec<bool> = (0..pairs.len())
            .map(|i| cosine(&vectors[2 * i], &vectors[2 * i + 1]) >= self.config.semantic_threshold)
            .collect();
        let pairs = apply_stage(&mut report, "semantic", pairs, &keep);

        let keep: Vec<bool> = pairs.iter().map(|p| tier_filter(p, self.config.min_author_tier)).collect();
        let pairs = apply_stage(&mut report, "tier", pairs, &keep);

        let keep: Vec<bool> = pairs.iter().map(|p| !p.provenance.is_fork).collect();
        let pairs = apply_stage(&mut report, "fork", pairs, &keep);

        let groups = match self.config.dedup_backend {
            DedupBackend::Shingles => {
                let codes: Vec<&str> = pairs.iter().map(|p| p.code.as_str()).collect();
                near_duplicates(&codes, self.config.dedup_threshold, self.execution)
            }
            DedupBackend::Embedding => {
                let codes: Vec<&str> = pairs.iter().map(|p| p.code.as_str()).collect();
                let vecs = provider.embed(&codes)?;
                let edges = dedup::similarity_edges(
                    vecs.len(),
                    self.config.dedup_threshold,
                    self.execution,
                    |i, j| cosine(&vecs[i], &vecs[j]),
                );
                dedup::group_edges(vecs.len(), &edges)
            }
        };
        let mut keep = vec![false; pairs.len()];
        for r in groups.representatives() {
            keep[r] = true;
        }
        let kept = apply_stage(&mut report, "dedup", pairs, &keep);
        Ok(CurationOutcome { kept, report })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{CellMeta, PairProvenance};

    struct Fixed(Vec<Vec<f64>>);

    impl EmbeddingProvider for Fixed {
        fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, CurationError> {
            Ok((0..texts.len()).map(|i| self.0[i % self.0.len()].clone()).collect())
        }
        fn dim(&self) -> usize {
            self.0[0].len()
        }
        fn model_id(&self) -> &str {
            "fixed"
        }
    }

    fn pair(id: PairId, tier: u32) -> CodeMarkdownPair {
        CodeMarkdownPair {
            pair_id: id,
            code: format!("value_{id} = compute({id})"),
            markdown_raw: "compute the stored value".into(),
            markdown_normalized: "compute the stored value".into(),
            provenance: PairProvenance { notebook_id: "nb".into(), author_tier: tier, is_fork: false },
            cell_meta: CellMeta::default(),
        }
    }

    #[test]
    fn identical_and_orthogonal_vectors() {
        let same = Fixed(vec![vec![0.6, 0.8]]);
        assert!((semantic_relevance(&pair(1, 1), &same).unwrap() - 1.0).abs() < 1e-15);
        let orth = Fixed(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(semantic_relevance(&pair(1, 1), &orth).unwrap(), 0.0);
    }

    #[test]
    fn threshold_is_inclusive() {
        // norm 50, so the cosine is exactly 29/50
        let p = Fixed(vec![vec![29.0, 33.0, 13.0, 20.0, 1.0], vec![1.0, 0.0, 0.0, 0.0, 0.0]]);
        let score = semantic_relevance(&pair(1, 1), &p).unwrap();
        assert_eq!(score, 0.58);
        let c = Curator { min_words: 0, max_words: 100, ..Default::default() };
        let out = c.run(vec![pair(1, 1)], &p).unwrap();
        assert_eq!(out.kept.len(), 1);
    }

    #[test]
    fn tiers() {
        assert!(!tier_filter(&pair(1, 0), 1));
        assert!(tier_filter(&pair(1, 3), 1));
        assert!(tier_filter(&pair(1, 0), 0));
    }

    #[test]
    fn forks_are_dropped_before_dedup() {
        let mut a = pair(1, 1);
        a.provenance.is_fork = true;
        let mut b = pair(2, 1);
        b.code = a.code.clone();
        let out = Curator::default().run(vec![b, a], &Fixed(vec![vec![1.0]])).unwrap();
        assert_eq!(out.kept.iter().map(|p| p.pair_id).collect::<Vec<_>>(), vec![2]);
        assert_eq!(out.report.stage("fork").unwrap().removed, vec![1]);
        assert!(out.report.stage("dedup").unwrap().removed.is_empty());
    }

    #[test]
    fn config_ranges() {
        assert!(CurationConfig::default().validate().is_ok());
        let bad = CurationConfig { dedup_threshold: 1.5, ..Default::default() };
        assert!(matches!(bad.validate(), Err(CurationError::InvalidConfig(_))));
        let bad = CurationConfig { semantic_threshold: -2.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn report_text_lists_stages() {
        let out = Curator::default().run(vec![pair(1, 1)], &Fixed(vec![vec![1.0]])).unwrap();
        let text = out.report.to_text();
        for stage in ["length", "semantic", "tier", "fork", "dedup"] {
            assert!(text.contains(stage));
        }
    }
}
