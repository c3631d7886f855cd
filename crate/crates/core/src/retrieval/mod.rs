//! Exemplar retrieval for few-shot prompts.
//!
//! A [`CorpusIndex`] holds the metric vectors (raw and min-max normalized)
//! and optional unit-norm code embeddings of every indexed pair. Queries are
//! scored exhaustively; ties go to the smaller pair id.

mod index_file;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curation::{cosine, CurationError, EmbeddingProvider};
use crate::ingest::PairId;
use crate::metrics::{MetricVector, METRIC_COUNT};
use crate::par::Execution;

pub use index_file::{IndexHeader, INDEX_FORMAT_VERSION, INDEX_MAGIC};

pub type MetricRow = [f64; METRIC_COUNT];

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("sampler needs code embeddings but the index has none (or no provider was given)")]
    MissingEmbeddings,
    #[error("sampler needs query metrics but none were given")]
    MissingQueryMetrics,
    #[error("invalid sampler config: {0}")]
    InvalidSampler(String),
    #[error("duplicate pair id {0} in index")]
    DuplicateId(PairId),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("embedding provider failed: {0}")]
    Provider(#[from] CurationError),
    #[error("bad index file: {0}")]
    BadIndexFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub min: MetricRow,
    pub max: MetricRow,
}

impl NormalizationStats {
    pub fn is_constant(&self, column: usize) -> bool {
        self.min[column] == self.max[column]
    }
}

pub fn fit_normalizer(rows: &[MetricRow]) -> Result<NormalizationStats, RetrievalError> {
    let first = rows.first().ok_or(RetrievalError::EmptyCorpus)?;
    let (mut min, mut max) = (*first, *first);
    for row in &rows[1..] {
        for j in 0..METRIC_COUNT {
            min[j] = min[j].min(row[j]);
            max[j] = max[j].max(row[j]);
        }
    }
    Ok(NormalizationStats { min, max })
}

/// `(x - min) / (max - min)` clamped to `[0, 1]`; constant columns give 0.
pub fn normalize_row(row: &MetricRow, stats: &NormalizationStats) -> MetricRow {
    let mut out = [0.0; METRIC_COUNT];
    for j in 0..METRIC_COUNT {
        if !stats.is_constant(j) {
            out[j] = ((row[j] - stats.min[j]) / (stats.max[j] - stats.min[j])).clamp(0.0, 1.0);
        }
    }
    out
}

pub fn normalize(vector: &MetricVector, stats: &NormalizationStats) -> MetricRow {
    normalize_row(&vector.to_array(), stats)
}

pub fn cm_similarity(a: &MetricRow, b: &MetricRow) -> f64 {
    cosine(a, b)
}

pub fn combined_similarity(emb_sim: f64, cm_sim: f64, alpha: f64) -> f64 {
    alpha * emb_sim + (1.0 - alpha) * cm_sim
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    ZeroShot,
    RandomShot,
    EmbeddingIr,
    CmIr,
    CombinedIr,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 5] = [
        SamplerKind::ZeroShot,
        SamplerKind::RandomShot,
        SamplerKind::EmbeddingIr,
        SamplerKind::CmIr,
        SamplerKind::CombinedIr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::ZeroShot => "zero_shot",
            SamplerKind::RandomShot => "random_shot",
            SamplerKind::EmbeddingIr => "embedding_ir",
            SamplerKind::CmIr => "cm_ir",
            SamplerKind::CombinedIr => "combined_ir",
        }
    }

    pub fn needs_embeddings(self) -> bool {
        matches!(self, SamplerKind::EmbeddingIr | SamplerKind::CombinedIr)
    }

    pub fn needs_metrics(self) -> bool {
        matches!(self, SamplerKind::CmIr | SamplerKind::CombinedIr)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub n_shots: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub rng_seed: Option<u64>,
}

fn default_alpha() -> f64 {
    0.5
}

pub const ALLOWED_SHOTS: [usize; 4] = [0, 1, 5, 10];

impl SamplerConfig {
    pub fn new(kind: SamplerKind, n_shots: usize) -> Self {
        Self { kind, n_shots, alpha: default_alpha(), rng_seed: None }
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        if !ALLOWED_SHOTS.contains(&self.n_shots) {
            return Err(RetrievalError::InvalidSampler(format!(
                "n_shots must be one of {ALLOWED_SHOTS:?}, got {}",
                self.n_shots
            )));
        }
        if self.kind == SamplerKind::ZeroShot && self.n_shots != 0 {
            return Err(RetrievalError::InvalidSampler("zero_shot requires n_shots = 0".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(RetrievalError::InvalidSampler(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        Ok(())
    }
}

/// Retrieval input: code, its raw metrics, and the pair to leave out when
/// the query itself is indexed.
#[derive(Debug, Clone, PartialEq)]
pub struct Query<'a> {
    pub code: &'a str,
    pub metrics: Option<MetricVector>,
    pub exclude: Option<PairId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub pair_id: PairId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusIndex {
    pub ids: Vec<PairId>,
    pub raw: Vec<MetricRow>,
    pub normalized: Vec<MetricRow>,
    /// Unit-norm rows, one per pair, when built with embeddings.
    pub embeddings: Option<Vec<Vec<f64>>>,
    pub stats: NormalizationStats,
    pub header: IndexHeader,
}

impl CorpusIndex {
    /// Builds an index; rows are stored in ascending pair id order.
    pub fn build(
        rows: Vec<(PairId, MetricRow)>,
        embeddings: Option<Vec<Vec<f64>>>,
        header: IndexHeader,
    ) -> Result<Self, RetrievalError> {
        if rows.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        if let Some(e) = &embeddings {
            if e.len() != rows.len() {
                return Err(RetrievalError::DimensionMismatch(format!(
                    "{} embedding rows for {} pairs",
                    e.len(),
                    rows.len()
                )));
            }
            let d = e[0].len();
            if d == 0 || e.iter().any(|v| v.len() != d) {
                return Err(RetrievalError::DimensionMismatch("ragged embedding matrix".into()));
            }
        }
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by_key(|&i| rows[i].0);
        for w in order.windows(2) {
            if rows[w[0]].0 == rows[w[1]].0 {
                return Err(RetrievalError::DuplicateId(rows[w[0]].0));
            }
        }
        let ids: Vec<PairId> = order.iter().map(|&i| rows[i].0).collect();
        let raw: Vec<MetricRow> = order.iter().map(|&i| rows[i].1).collect();
        let stats = fit_normalizer(&raw)?;
        let normalized = raw.iter().map(|r| normalize_row(r, &stats)).collect();
        let embeddings = embeddings.map(|e| {
            order
                .iter()
                .map(|&i| {
                    let mut v = e[i].clone();
                    crate::curation::embedding::l2_normalize(&mut v);
                    v
                })
                .collect()
        });
        Ok(Self { ids, raw, normalized, embeddings, stats, header })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn embedding_dim(&self) -> usize {
        self.embeddings.as_ref().map_or(0, |e| e[0].len())
    }

    pub fn position(&self, id: PairId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }
}

/// Sorts by descending score, then ascending pair id.
pub fn rank_hits(hits: &mut [Hit]) {
    hits.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.pair_id.cmp(&b.pair_id)));
}

fn query_embedding(
    code: &str,
    provider: &dyn EmbeddingProvider,
    dim: usize,
) -> Result<Vec<f64>, RetrievalError> {
    let mut v = provider.embed(&[code])?.pop().unwrap_or_default();
    if v.len() != dim {
        return Err(RetrievalError::DimensionMismatch(format!(
            "query embedding has {} dims, index has {dim}",
            v.len()
        )));
    }
    crate::curation::embedding::l2_normalize(&mut v);
    Ok(v)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Selects up to `cfg.n_shots` exemplars for the query.
pub fn top_k(
    query: &Query<'_>,
    index: &CorpusIndex,
    cfg: &SamplerConfig,
    provider: Option<&dyn EmbeddingProvider>,
    exec: Execution,
) -> Result<Vec<Hit>, RetrievalError> {
    cfg.validate()?;
    if cfg.kind.needs_embeddings() && (index.embeddings.is_none() || provider.is_none()) {
        return Err(RetrievalError::MissingEmbeddings);
    }
    if cfg.kind == SamplerKind::ZeroShot || cfg.n_shots == 0 {
        return Ok(Vec::new());
    }
    let candidates: Vec<usize> =
        (0..index.len()).filter(|&i| Some(index.ids[i]) != query.exclude).collect();

    if cfg.kind == SamplerKind::RandomShot {
        let seed = cfg.rng_seed.unwrap_or(0) ^ fnv1a(query.code.as_bytes());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = cfg.n_shots.min(candidates.len());
        return Ok(rand::seq::index::sample(&mut rng, candidates.len(), k)
            .into_iter()
            .map(|c| Hit { pair_id: index.ids[candidates[c]], score: 0.0 })
            .collect());
    }

    let qn = if cfg.kind.needs_metrics() {
        let m = query.metrics.as_ref().ok_or(RetrievalError::MissingQueryMetrics)?;
        Some(normalize(m, &index.stats))
    } else {
        None
    };
    let qe = match (cfg.kind.needs_embeddings(), provider) {
        (true, Some(p)) => Some(query_embedding(query.code, p, index.embedding_dim())?),
        _ => None,
    };
    let emb = index.embeddings.as_deref();
    let score = |i: usize| -> f64 {
        let cm = || cm_similarity(qn.as_ref().expect("metric query"), &index.normalized[i]);
        let em = || dot(qe.as_deref().expect("embedding query"), &emb.expect("embeddings")[i]);
        match cfg.kind {
            SamplerKind::CmIr => cm(),
            SamplerKind::EmbeddingIr => em(),
            _ => combined_similarity(em(), cm(), cfg.alpha),
        }
    };
    let mut hits = exec.map(&candidates, |&i| Hit { pair_id: index.ids[i], score: score(i) });
    rank_hits(&mut hits);
    hits.truncate(cfg.n_shots);
    Ok(hits)
}

/// Runs [`top_k`] for many queries, in parallel across queries.
pub fn top_k_batch(
    queries: &[Query<'_>],
    index: &CorpusIndex,
    cfg: &SamplerConfig,
    provider: Option<&dyn EmbeddingProvider>,
    exec: Execution,
) -> Result<Vec<Vec<Hit>>, RetrievalError> {
    // `dyn EmbeddingProvider` is Sync, so the reference can cross threads
    exec.map(queries, |q| top_k(q, index, cfg, provider, Execution::Sequential))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(values: &[(usize, f64)]) -> MetricRow {
        let mut r = [0.0; METRIC_COUNT];
        for &(j, v) in values {
            r[j] = v;
        }
        r
    }

    #[test]
    fn normalizer_cases() {
        let single = fit_normalizer(&[row(&[(0, 3.0)])]).unwrap();
        assert_eq!(single.min, single.max);
        let s = fit_normalizer(&[row(&[(0, 0.0), (1, 5.0)]), row(&[(0, 10.0), (1, 5.0)])]).unwrap();
        assert_eq!((s.min[0], s.max[0]), (0.0, 10.0));
        assert!(s.is_constant(1));
        assert_eq!(normalize_row(&row(&[(0, 5.0), (1, 5.0)]), &s)[..2], [0.5, 0.0]);
        assert_eq!(normalize_row(&row(&[(0, 25.0)]), &s)[0], 1.0);
        assert_eq!(normalize_row(&s.min, &s), [0.0; METRIC_COUNT]);
        assert!(matches!(fit_normalizer(&[]), Err(RetrievalError::EmptyCorpus)));
    }

    #[test]
    fn similarity_cases() {
        let a = row(&[(0, 1.0)]);
        let b = row(&[(0, 1.0), (1, 1.0)]);
        assert!((cm_similarity(&a, &b) - 0.707_106_781_186_547_5).abs() < 1e-12);
        assert_eq!(cm_similarity(&a, &row(&[(1, 1.0)])), 0.0);
        assert_eq!(cm_similarity(&a, &[0.0; METRIC_COUNT]), 0.0);
        assert_eq!(combined_similarity(0.8, 0.4, 1.0), 0.8);
        assert_eq!(combined_similarity(0.8, 0.4, 0.0), 0.4);
        assert!((combined_similarity(0.8, 0.4, 0.5) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn sampler_validation() {
        assert!(SamplerConfig::new(SamplerKind::ZeroShot, 0).validate().is_ok());
        assert!(SamplerConfig::new(SamplerKind::ZeroShot, 1).validate().is_err());
        assert!(SamplerConfig::new(SamplerKind::CmIr, 3).validate().is_err());
        let mut c = SamplerConfig::new(SamplerKind::CombinedIr, 5);
        c.alpha = 1.5;
        assert!(c.validate().is_err());
    }

    fn small_index() -> CorpusIndex {
        let rows = vec![
            (30, row(&[(0, 1.0), (1, 0.0)])),
            (10, row(&[(0, 2.0), (1, 2.0)])),
            (20, row(&[(0, 0.0), (1, 4.0)])),
        ];
        CorpusIndex::build(rows, None, IndexHeader::default()).unwrap()
    }

    #[test]
    fn build_sorts_and_rejects_duplicates() {
        let idx = small_index();
        assert_eq!(idx.ids, vec![10, 20, 30]);
        let dup = vec![(1, row(&[])), (1, row(&[]))];
        assert!(matches!(
            CorpusIndex::build(dup, None, IndexHeader::default()),
            Err(RetrievalError::DuplicateId(1))
        ));
    }

    #[test]
    fn zero_shot_is_empty_and_embedding_kinds_need_embeddings() {
        let idx = small_index();
        let q = Query { code: "x", metrics: Some(MetricVector::default()), exclude: None };
        let zero = SamplerConfig::new(SamplerKind::ZeroShot, 0);
        assert!(top_k(&q, &idx, &zero, None, Execution::Sequential).unwrap().is_empty());
        let emb = SamplerConfig::new(SamplerKind::EmbeddingIr, 1);
        assert!(matches!(
            top_k(&q, &idx, &emb, None, Execution::Sequential),
            Err(RetrievalError::MissingEmbeddings)
        ));
    }

    #[test]
    fn cm_ir_excludes_the_query_pair() {
        let idx = small_index();
        let metrics = MetricVector::from_array(&row(&[(0, 1.0), (1, 0.0)]));
        let q = Query { code: "", metrics: Some(metrics), exclude: Some(30) };
        let hits = top_k(&q, &idx, &SamplerConfig::new(SamplerKind::CmIr, 1), None, Execution::Sequential)
            .unwrap();
        assert_eq!(hits.len(), 1);
        // normalized query (0.5, 0); pair 10 -> (1, 0.5), pair 20 -> (0, 1)
        assert_eq!(hits[0].pair_id, 10);
    }

    #[test]
    fn random_shot_is_seeded() {
        let idx = small_index();
        let q = Query { code: "cell", metrics: None, exclude: Some(10) };
        let mut cfg = SamplerConfig::new(SamplerKind::RandomShot, 1);
        cfg.rng_seed = Some(7);
        let a = top_k(&q, &idx, &cfg, None, Execution::Sequential).unwrap();
        let b = top_k(&q, &idx, &cfg, None, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].pair_id, 10);
        cfg.n_shots = 10;
        let all = top_k(&q, &idx, &cfg, None, Execution::Sequential).unwrap();
        let mut ids: Vec<_> = all.iter().map(|h| h.pair_id).collect();
        ids.sort();
        assert_eq!(ids, vec![20, 30]);
    }

    #[test]
    fn ties_go_to_smaller_ids() {
        let mut hits = vec![
            Hit { pair_id: 5, score: 0.5 },
            Hit { pair_id: 2, score: 0.5 },
            Hit { pair_id: 9, score: 0.9 },
        ];
        rank_hits(&mut hits);
        assert_eq!(hits.iter().map(|h| h.pair_id).collect::<Vec<_>>(), vec![9, 2, 5]);
    }
}
