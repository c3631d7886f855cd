mod common;

use common::planted::planted;
use nbdoc_core::curation::{semantic_relevance, CurationConfig, Curator, StubEmbeddingProvider};
use nbdoc_core::ingest::PairId;
use nbdoc_core::par::Execution;

fn removed(out: &nbdoc_core::curation::CurationOutcome, stage: &str) -> Vec<PairId> {
    out.report.stage(stage).unwrap().removed.clone()
}

#[test]
fn each_stage_removes_exactly_the_planted_pairs() {
    let stub = StubEmbeddingProvider::default();
    let out = Curator::default().run(planted(), &stub).unwrap();
    assert_eq!(removed(&out, "length"), (1..=10).collect::<Vec<_>>());
    assert_eq!(removed(&out, "semantic"), (11..=20).collect::<Vec<_>>());
    assert_eq!(removed(&out, "tier"), (21..=30).collect::<Vec<_>>());
    assert!(removed(&out, "fork").is_empty());
    assert_eq!(removed(&out, "dedup"), vec![32, 33, 35, 36, 38, 39]);
    assert_eq!(out.kept.len(), 24);
    let ids: Vec<PairId> = out.kept.iter().map(|p| p.pair_id).collect();
    assert!(ids.contains(&40) && ids.contains(&41));
    assert!(ids.contains(&31) && ids.contains(&34) && ids.contains(&37));

    let stages = &out.report.stages;
    for w in stages.windows(2) {
        assert_eq!(w[0].output, w[1].input);
    }
    assert_eq!(stages[0].input, 60);
}

#[test]
fn semantic_threshold_equal_to_score_keeps_pair() {
    let stub = StubEmbeddingProvider::default();
    let pairs = planted();
    let score = semantic_relevance(&pairs[41], &stub).unwrap();
    let config = CurationConfig { semantic_threshold: score, ..Default::default() };
    let out = Curator { config, ..Default::default() }.run(vec![pairs[41].clone()], &stub).unwrap();
    assert_eq!(out.kept.len(), 1);
}

#[test]
fn result_is_independent_of_order_and_execution() {
    let stub = StubEmbeddingProvider::default();
    let base = Curator::default().run(planted(), &stub).unwrap();
    let mut shuffled = planted();
    shuffled.reverse();
    shuffled.swap(3, 40);
    let seq = Curator { execution: Execution::Sequential, ..Default::default() };
    let other = seq.run(shuffled, &stub).unwrap();
    assert_eq!(base.report, other.report);
    assert_eq!(
        base.kept.iter().map(|p| p.pair_id).collect::<Vec<_>>(),
        other.kept.iter().map(|p| p.pair_id).collect::<Vec<_>>()
    );
}
