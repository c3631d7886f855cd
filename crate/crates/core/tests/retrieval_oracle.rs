mod common;

use common::synthetic::{brute_force, corpus, random_code, random_row};
use nbdoc_core::curation::{EmbeddingProvider, StubEmbeddingProvider};
use nbdoc_core::metrics::MetricVector;
use nbdoc_core::par::Execution;
use nbdoc_core::retrieval::{top_k, CorpusIndex, IndexHeader, Query, SamplerConfig, SamplerKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn top_k_matches_brute_force() {
    let c = corpus();
    let stub = StubEmbeddingProvider::default();
    let texts: Vec<&str> = c.codes.iter().map(String::as_str).collect();
    let emb = stub.embed(&texts).unwrap();
    let rows = c.ids.iter().copied().zip(c.rows.iter().copied()).collect();
    let index = CorpusIndex::build(rows, Some(emb), IndexHeader::default()).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let settings = [
        (SamplerKind::CmIr, 0.5),
        (SamplerKind::EmbeddingIr, 0.5),
        (SamplerKind::CombinedIr, 0.0),
        (SamplerKind::CombinedIr, 0.5),
        (SamplerKind::CombinedIr, 1.0),
    ];
    for q in 0..20 {
        let q_row = if q % 4 == 0 { c.rows[q] } else { random_row(&mut rng) };
        let q_code = if q % 4 == 0 { c.codes[q].clone() } else { random_code(&mut rng) };
        let exclude = (q % 4 == 0).then_some(c.ids[q]);
        let query = Query { code: &q_code, metrics: Some(MetricVector::from_array(&q_row)), exclude };
        for &(kind, alpha) in &settings {
            let want = brute_force(&c, &q_row, &q_code, kind, alpha, exclude);
            for k in [1, 5, 10] {
                let cfg = SamplerConfig { alpha, ..SamplerConfig::new(kind, k) };
                for exec in [Execution::Sequential, Execution::Parallel] {
                    let got = top_k(&query, &index, &cfg, Some(&stub), exec).unwrap();
                    assert_eq!(got.len(), k);
                    for (pos, hit) in got.iter().enumerate() {
                        assert!((hit.score - want[pos].1).abs() < 1e-9);
                        assert_eq!(hit.pair_id, want[pos].0, "{kind:?} a={alpha} k={k} pos={pos}");
                    }
                    assert!(got.iter().all(|h| Some(h.pair_id) != exclude));
                }
            }
        }
    }
}

#[test]
fn alpha_extremes_reduce_to_single_signal() {
    let c = corpus();
    let stub = StubEmbeddingProvider::default();
    let texts: Vec<&str> = c.codes.iter().map(String::as_str).collect();
    let rows = c.ids.iter().copied().zip(c.rows.iter().copied()).collect();
    let index = CorpusIndex::build(rows, Some(stub.embed(&texts).unwrap()), IndexHeader::default()).unwrap();
    let q_code = "df = read_csv = mean";
    let query = Query { code: q_code, metrics: Some(MetricVector::from_array(&c.rows[3])), exclude: None };
    let ids = |kind, alpha| {
        let cfg = SamplerConfig { alpha, ..SamplerConfig::new(kind, 10) };
        top_k(&query, &index, &cfg, Some(&stub), Execution::Sequential)
            .unwrap()
            .into_iter()
            .map(|h| h.pair_id)
            .collect::<Vec<_>>()
    };
    assert_eq!(ids(SamplerKind::CombinedIr, 1.0), ids(SamplerKind::EmbeddingIr, 0.5));
    assert_eq!(ids(SamplerKind::CombinedIr, 0.0), ids(SamplerKind::CmIr, 0.5));
}
