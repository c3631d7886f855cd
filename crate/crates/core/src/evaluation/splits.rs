//! Train / test / eval assignments.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::PairId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("corpus of {n} items is too small for this split (need {need})")]
    CorpusTooSmall { n: usize, need: usize },
    #[error("invalid split strategy: {0}")]
    InvalidStrategy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SplitStrategy {
    /// k folds of 8/1/1 tenths when k = 10: train, test, eval.
    Kfold { k: usize },
    /// Stratified single test set holding `fraction` of the corpus.
    Holdout { fraction: f64 },
}

/// What the splitter needs to know about a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitItem {
    pub pair_id: PairId,
    pub code_loc: u32,
    pub markdown_words: usize,
}

/// Stratum of a pair: code length bucket x markdown length bucket.
pub fn stratum(item: &SplitItem) -> (u8, u8) {
    let loc = match item.code_loc {
        0..=5 => 0,
        6..=15 => 1,
        _ => 2,
    };
    let words = match item.markdown_words {
        0..=15 => 0,
        16..=50 => 1,
        _ => 2,
    };
    (loc, words)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<PairId>,
    pub test: Vec<PairId>,
    pub eval: Vec<PairId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub strategy: SplitStrategy,
    pub seed: u64,
    pub folds: Vec<Fold>,
}

fn sorted(mut v: Vec<PairId>) -> Vec<PairId> {
    v.sort_unstable();
    v
}

pub fn make_splits(
    items: &[SplitItem],
    strategy: SplitStrategy,
    seed: u64,
) -> Result<SplitAssignment, SplitError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<PairId> = items.iter().map(|i| i.pair_id).collect();
    ids.sort_unstable();
    let folds = match strategy {
        SplitStrategy::Kfold { k } => {
            if k < 3 {
                return Err(SplitError::InvalidStrategy(format!("kfold needs k >= 3, got {k}")));
            }
            if ids.len() < k {
                return Err(SplitError::CorpusTooSmall { n: ids.len(), need: k });
            }
            ids.shuffle(&mut rng);
            // the first n % k chunks get one extra item
            let (base, extra) = (ids.len() / k, ids.len() % k);
            let mut chunks = Vec::with_capacity(k);
            let mut start = 0;
            for c in 0..k {
                let len = base + usize::from(c < extra);
                chunks.push(ids[start..start + len].to_vec());
                start += len;
            }
            (0..k)
                .map(|f| {
                    let e = (f + 1) % k;
                    let train = (0..k)
                        .filter(|&c| c != f && c != e)
                        .flat_map(|c| chunks[c].iter().copied())
                        .collect();
                    Fold { train: sorted(train), test: sorted(chunks[f].clone()), eval: sorted(chunks[e].clone()) }
                })
                .collect()
        }
        SplitStrategy::Holdout { fraction } => {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(SplitError::InvalidStrategy(format!("holdout fraction {fraction} outside (0, 1)")));
            }
            let target = (fraction * items.len() as f64).round() as usize;
            if target == 0 {
                return Err(SplitError::CorpusTooSmall { n: items.len(), need: (0.5 / fraction).ceil() as usize });
            }
            let mut strata: BTreeMap<(u8, u8), Vec<PairId>> = BTreeMap::new();
            for it in items {
                strata.entry(stratum(it)).or_default().push(it.pair_id);
            }
            // largest-remainder apportionment of the test quota
            let mut quotas: Vec<((u8, u8), usize, f64)> = strata
                .iter()
                .map(|(key, members)| {
                    let exact = fraction * members.len() as f64;
                    (*key, exact.floor() as usize, exact - exact.floor())
                })
                .collect();
            let assigned: usize = quotas.iter().map(|q| q.1).sum();
            let mut by_remainder: Vec<usize> = (0..quotas.len()).collect();
            by_remainder.sort_by(|&a, &b| quotas[b].2.total_cmp(&quotas[a].2).then(a.cmp(&b)));
            for &q in by_remainder.iter().take(target.saturating_sub(assigned)) {
                quotas[q].1 += 1;
            }
            let mut test = Vec::new();
            let mut train = Vec::new();
            for (key, quota, _) in quotas {
                let mut members = strata[&key].clone();
                members.sort_unstable();
                members.shuffle(&mut rng);
                test.extend_from_slice(&members[..quota.min(members.len())]);
                train.extend_from_slice(&members[quota.min(members.len())..]);
            }
            vec![Fold { train: sorted(train), test: sorted(test), eval: Vec::new() }]
        }
    };
    Ok(SplitAssignment { strategy, seed, folds })
}
